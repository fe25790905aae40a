import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distia.channel import Dims, MultiUserChannel, generate_channel
from distia.csit import CsitEstimate, CsitProfile, make_estimates
from distia.errors import SingularMatrix
from distia.ia3 import (compute_cascade, conditioning_filter, mmse_filters,
                        solve_distributed, solve_links, solve_perfect)
from distia.metrics import leakage, rates
from distia.numkit import chordal_distance, frob

DIMS = Dims.square(2)


def identity_grid(n=4):
    return [[np.eye(n, dtype=complex) for _ in range(3)] for _ in range(3)]


def right_to_left(links):
    # independent oracle: explicit solves, evaluated from the right
    h = lambda i, k: np.asarray(links[i - 1][k - 1])
    y = h(2, 1)
    y = np.linalg.solve(h(2, 3), y)
    y = h(1, 3) @ y
    y = np.linalg.solve(h(1, 2), y)
    y = h(3, 2) @ y
    return np.linalg.solve(h(3, 1), y)


def test_cascade_identity():
    assert np.array_equal(compute_cascade(identity_grid()), np.eye(4))


def test_cascade_diagonal():
    rng = np.random.default_rng(0)
    diags = {(i, k): rng.standard_normal(4) + 1j * rng.standard_normal(4)
             for i in range(3) for k in range(3)}
    links = [[np.diag(diags[i, k]) for k in range(3)] for i in range(3)]
    expect = (diags[1, 0] * diags[0, 2] * diags[2, 1]
              / (diags[2, 0] * diags[0, 1] * diags[1, 2]))
    assert np.allclose(compute_cascade(links), np.diag(expect), rtol=1e-12, atol=0)


@given(st.integers(0, 10_000))
@settings(max_examples=50, deadline=None)
def test_cascade_matches_oracle(trial):
    links = generate_channel(DIMS, 1, trial).tilde()
    y = compute_cascade(links)
    assert frob(y - right_to_left(links)) <= 1e-10 * max(1.0, frob(y))


def test_cascade_singular_link_index():
    links = identity_grid()
    links[0][1] = np.zeros((4, 4))
    with pytest.raises(SingularMatrix) as info:
        compute_cascade(links)
    assert info.value.link == (0, 1)


@given(st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_perfect_solution_aligns(trial):
    ch = generate_channel(DIMS, 2, trial)
    sol = solve_perfect(ch, 2)
    U, G = sol.precoders, sol.filters
    for m in U + G:
        assert abs(frob(m) - 1) <= 1e-12
        assert m.shape == (4, 2)
        assert np.linalg.matrix_rank(m) == 2
    assert leakage(ch.tilde(), U, G) <= 1e-18
    for i in range(3):
        for j in range(3):
            if i != j:
                assert frob(G[i].conj().T @ ch.links[i][j] @ U[j]) <= 1e-8
    t = ch.tilde()
    for (a, b), (c, e) in (((2, 0), (2, 1)), ((0, 1), (0, 2)), ((1, 2), (1, 0))):
        assert chordal_distance(t[a][b] @ U[b], t[c][e] @ U[e]) <= 1e-9


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_fixed_point(trial):
    ch = generate_channel(DIMS, 3, trial)
    sol = solve_perfect(ch, 2)
    y = compute_cascade(ch.tilde())
    u1 = sol.precoders[0]
    assert frob(y @ u1 - u1 @ np.diag(sol.cascade_eigs[:2])) <= 1e-9


@given(st.integers(0, 1000), st.integers(0, 2), st.integers(0, 2),
       st.complex_numbers(min_magnitude=1e-2, max_magnitude=1e2))
@settings(max_examples=40, deadline=None)
def test_scaling_invariance(trial, i, k, c):
    ch = generate_channel(DIMS, 4, trial)
    a = solve_perfect(ch, 2)
    b = solve_perfect(ch.scaled(i, k, c), 2)
    for x, y in zip(a.precoders + a.filters, b.precoders + b.filters):
        assert frob(x - y) <= 1e-10


def test_requires_square_three_user():
    ch = generate_channel(Dims(K=3, M=(4, 4, 4), N=(4, 4, 5), d=(2, 2, 2)), 0)
    with pytest.raises(ValueError):
        solve_perfect(ch, 2)
    with pytest.raises(ValueError):
        solve_perfect(generate_channel(DIMS, 0), 1)


def test_single_stream_case():
    ch = generate_channel(Dims.square(1), 5)
    sol = solve_perfect(ch, 1)
    assert sol.precoders[0].shape == (2, 1)
    assert leakage(ch.links, sol.precoders, sol.filters) <= 1e-16


def test_degenerate_flag():
    links = identity_grid()
    sol = solve_links(links, 2)
    assert sol.degenerate
    assert sol.min_eig_gap == 0.0


# distributed -----------------------------------------------------------------

def test_distributed_zero_error_is_bit_identical():
    ch = generate_channel(DIMS, 6)
    est = make_estimates(ch, CsitProfile.perfect(3), 1e4, 6)
    dist = solve_distributed(est, 2)
    perf = solve_perfect(ch, 2)
    assert not dist.failed
    for j in range(3):
        assert np.array_equal(dist.used_precoders[j], perf.precoders[j])
        assert dist.used_precoders[j] is dist.per_tx_solutions[j].precoders[j]


def test_distributed_consistency_shared_estimate():
    ch = generate_channel(DIMS, 7)
    est = make_estimates(ch, CsitProfile.uniform(3, 0.5), 1e2, 7, owners=[0])[0]
    shared = [CsitEstimate(owner=j, links=est.links, sigmas=est.sigmas) for j in range(3)]
    dist = solve_distributed(shared, 2)
    ref = solve_links(est.links, 2)
    for j in range(3):
        assert np.array_equal(dist.used_precoders[j], ref.precoders[j])


def test_distributed_independence():
    ch = generate_channel(DIMS, 8)
    prof = CsitProfile.uniform(3, 0.5)
    a = solve_distributed(make_estimates(ch, prof, 1e3, 8, tx_seeds=[1, 2, 3]), 2)
    b = solve_distributed(make_estimates(ch, prof, 1e3, 8, tx_seeds=[1, 50, 3]), 2)
    assert np.array_equal(a.used_precoders[0], b.used_precoders[0])
    assert np.array_equal(a.used_precoders[2], b.used_precoders[2])
    assert not np.array_equal(a.used_precoders[1], b.used_precoders[1])


def test_distributed_failure_is_per_tx():
    ch = generate_channel(DIMS, 9)
    est = make_estimates(ch, CsitProfile.perfect(3), 1.0, 9)
    links = [list(r) for r in est[1].links]
    links[2][0] = np.zeros((4, 4))
    est[1] = CsitEstimate(owner=1, links=links, sigmas=est[1].sigmas)
    dist = solve_distributed(est, 2)
    assert dist.failed
    assert dist.used_precoders[1] is None
    assert isinstance(dist.errors[1], SingularMatrix)
    assert dist.used_precoders[0] is not None and dist.used_precoders[2] is not None


def test_small_error_gives_quadratic_precoder_error():
    # ||U^(j) - U*||^2 / sigma^2 stays bounded for well-conditioned channels
    sigma2 = 1e-12
    P = 1.0 / sigma2
    ratios = []
    trial = 0
    while len(ratios) < 100:
        ch = generate_channel(DIMS, 10, trial)
        trial += 1
        if not conditioning_filter(ch, 0.05):
            continue
        perf = solve_perfect(ch, 2)
        dist = solve_distributed(make_estimates(ch, CsitProfile.uniform(3, 1.0), P, 10,
                                                trial), 2)
        for j in range(3):
            ratios.append(frob(dist.used_precoders[j] - perf.precoders[j]) ** 2 / sigma2)
    assert max(ratios) < 1e6
    assert np.median(ratios) < 1e3


# conditioning filter ---------------------------------------------------------

def test_filter_zero_eps():
    assert conditioning_filter(generate_channel(DIMS, 0), 0.0)


def test_filter_rejects_repeated_cascade_eigenvalues():
    links = identity_grid()
    links[1][0] = np.diag([2.0, 2.0, 1.0, 3.0]).astype(complex)
    ch = MultiUserChannel(DIMS, links)
    assert not conditioning_filter(ch, 1e-3)
    assert conditioning_filter(ch, 0.0)


def test_filter_rejection_monotone_in_eps():
    chans = [generate_channel(DIMS, 11, t) for t in range(1000)]
    eps_grid = [0.0, 0.01, 0.03, 0.05, 0.1]
    rejected = [sum(not conditioning_filter(c, e) for c in chans) for e in eps_grid]
    assert all(b >= a for a, b in zip(rejected, rejected[1:]))
    assert rejected[0] == 0 and rejected[-1] > 0


# mmse ------------------------------------------------------------------------

def test_mmse_filters_form_and_gain():
    ch = generate_channel(DIMS, 12)
    perf = solve_perfect(ch, 2)
    est = make_estimates(ch, CsitProfile.uniform(3, 0.5), 1e4, 12)
    used = solve_distributed(est, 2).used_precoders
    P = 1e4
    g = mmse_filters(ch.links, used, P)
    for m in g:
        assert frob(m.conj().T @ m - np.eye(2) / 2) <= 1e-12
    assert sum(rates(ch.links, used, g, P)) >= sum(rates(ch.links, used, perf.filters, P)) - 1e-6
