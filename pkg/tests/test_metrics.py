import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distia.channel import Dims, crandn, generate_channel, rng_for
from distia.csit import CsitProfile, make_estimates
from distia.ia3 import conditioning_filter, solve_distributed, solve_perfect
from distia.metrics import (RatePoint, aligned_precoder_error, dof_slope, leakage,
                            log2_snr, precoder_error, rate_user, rates)
from distia.numkit import frob

DIMS = Dims.square(2)


def test_rate_zero_power():
    ch = generate_channel(DIMS, 0)
    sol = solve_perfect(ch, 2)
    assert rate_user(ch.links, sol.precoders, sol.filters, 0.0, 1) == 0.0


@given(st.integers(0, 5000), st.floats(0.1, 1e6))
@settings(max_examples=40, deadline=None)
def test_rate_without_interference(trial, P):
    ch = generate_channel(DIMS, 1, trial)
    sol = solve_perfect(ch, 2)
    for i in range(3):
        s = sol.filters[i].conj().T @ ch.links[i][i] @ sol.precoders[i]
        direct = np.log2(np.linalg.det(np.eye(2) + P * s @ s.conj().T).real)
        assert rate_user(ch.links, sol.precoders, sol.filters, P, i) == pytest.approx(direct, abs=1e-9)


@given(st.floats(0, 1e6), st.complex_numbers(max_magnitude=10))
@settings(max_examples=100, deadline=None)
def test_rate_scalar_closed_form(P, c):
    one = np.ones((1, 1), dtype=complex)
    links = [[one, c * one], [one, one]]
    r = rate_user(links, [one, one], [one, one], P, 0)
    assert r == pytest.approx(np.log2(1 + P / (1 + P * abs(c) ** 2)), rel=1e-9, abs=1e-12)


def test_rate_monotone_on_aligned_solution():
    ch = generate_channel(DIMS, 2)
    sol = solve_perfect(ch, 2)
    grid = np.logspace(-1, 8, 30)
    for i in range(3):
        r = [rate_user(ch.links, sol.precoders, sol.filters, P, i) for P in grid]
        assert all(b >= a for a, b in zip(r, r[1:]))


def test_rate_is_nonnegative_with_interference():
    rng = rng_for(3)
    ch = generate_channel(DIMS, 3)
    U = [crandn(rng, (4, 2)) / 2 for _ in range(3)]
    G = [crandn(rng, (4, 2)) / 2 for _ in range(3)]
    for P in (0.0, 1.0, 1e6):
        assert all(r >= 0 for r in rates(ch.links, U, G, P))


def test_leakage_aligned_and_random():
    ch = generate_channel(DIMS, 4)
    sol = solve_perfect(ch, 2)
    assert leakage(ch.tilde(), sol.precoders, sol.filters) <= 1e-18
    rng = rng_for(4)
    U = [crandn(rng, (4, 2)) for _ in range(3)]
    assert leakage(ch.tilde(), U, sol.filters) > 0


@given(st.integers(0, 2), st.integers(0, 2), st.complex_numbers(min_magnitude=0.1, max_magnitude=10))
@settings(max_examples=30, deadline=None)
def test_leakage_scaling(i, k, c):
    rng = rng_for(5)
    ch = generate_channel(DIMS, 5)
    U = [crandn(rng, (4, 2)) for _ in range(3)]
    G = [crandn(rng, (4, 2)) for _ in range(3)]
    base = leakage(ch.links, U, G)
    term = 0.0 if i == k else frob(G[i].conj().T @ ch.links[i][k] @ U[k]) ** 2
    scaled = leakage(ch.scaled(i, k, c).links, U, G)
    assert scaled == pytest.approx(base + (abs(c) ** 2 - 1) * term, rel=1e-10)


def test_leakage_decays_with_csit_exponent():
    # E[leakage] ~ P^-minA for the distributed solution
    A = 0.5
    prof = CsitProfile.uniform(3, A)
    P_grid = np.array([1e2, 1e3, 1e4, 1e5, 1e6])
    chans = []
    t = 0
    while len(chans) < 100:
        ch = generate_channel(DIMS, 6, t)
        if conditioning_filter(ch, 0.05):
            chans.append((t, ch))
        t += 1
    means = []
    for P in P_grid:
        vals = []
        for t, ch in chans:
            perf = solve_perfect(ch, 2)
            used = solve_distributed(make_estimates(ch, prof, P, 6, t), 2).used_precoders
            vals.append(leakage(ch.tilde(), used, perf.filters))
        means.append(np.mean(vals))
    slope = np.polyfit(np.log(P_grid), np.log(means), 1)[0]
    # heavy-tailed at desk scale; asserted loosely here, measured in the
    # acceptance suite with the precoder error instead
    assert -A - 0.3 <= slope <= -A + 0.3


# precoder error --------------------------------------------------------------

def test_precoder_error_identical():
    u = crandn(rng_for(7), (4, 2))
    frob_sq, chordal_sq = precoder_error(u, u)
    assert frob_sq == 0.0
    assert chordal_sq <= 1e-28
    assert aligned_precoder_error(u, u) == pytest.approx(0.0, abs=1e-14)


def test_precoder_error_rotation():
    rng = rng_for(8)
    u = np.linalg.qr(crandn(rng, (4, 2)))[0] / np.sqrt(2)
    q = np.linalg.qr(crandn(rng, (2, 2)))[0]
    frob_sq, chordal_sq = precoder_error(u @ q, u)
    assert chordal_sq <= 1e-20
    assert frob_sq > 1e-3


def test_aligned_error_ignores_order_and_phase():
    rng = rng_for(9)
    u = crandn(rng, (4, 2))
    v = u[:, ::-1] * np.exp(1j * np.array([0.7, -1.9]))
    assert aligned_precoder_error(v, u) == pytest.approx(0.0, abs=1e-12)
    assert precoder_error(v, u)[0] > 0.1


def test_aligned_error_bounded_by_frobenius():
    rng = rng_for(10)
    for _ in range(50):
        u, v = crandn(rng, (4, 2)), crandn(rng, (4, 2))
        assert aligned_precoder_error(u, v) <= precoder_error(u, v)[0] + 1e-12


def test_precoder_error_shape_mismatch():
    with pytest.raises(ValueError):
        precoder_error(np.ones((4, 2)), np.ones((4, 1)))


def test_canonical_pipeline_frobenius_vs_chordal():
    # on well-conditioned channels with small errors, the column-matched
    # error stays within the span error up to a constant
    P = 1e8
    prof = CsitProfile.uniform(3, 1.0)
    worst = 0.0
    n = 0
    t = 0
    while n < 100:
        ch = generate_channel(DIMS, 11, t)
        t += 1
        if not conditioning_filter(ch, 0.05):
            continue
        n += 1
        perf = solve_perfect(ch, 2)
        u = solve_distributed(make_estimates(ch, prof, P, 11, t), 2).used_precoders[0]
        aligned = aligned_precoder_error(u, perf.precoders[0])
        chordal = precoder_error(u, perf.precoders[0])[1]
        worst = max(worst, aligned - 2 * chordal)
    assert worst <= 1e-6


# dof slope -------------------------------------------------------------------

def points_from(fn, dbs):
    return [RatePoint(P_dB=x, per_user_rate=list(fn(10 ** (x / 10)))) for x in dbs]


def test_dof_linear_trace():
    pts = points_from(lambda P: [2 * np.log2(P), 0.0], [0, 10, 20, 30, 40])
    est = dof_slope(pts)
    assert est.per_user_slope[0] == pytest.approx(2.0, abs=1e-12)
    assert est.per_user_slope[1] == 0.0
    assert est.window == (20.0, 40.0)
    assert est.r2[0] == pytest.approx(1.0)


def test_dof_half_slope_trace():
    pts = points_from(lambda P: [np.log2(1 + P ** 0.5)], [40, 50, 60])
    assert dof_slope(pts).per_user_slope[0] == pytest.approx(0.5, abs=0.02)


@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4),
       st.lists(st.floats(-5, 5), min_size=4, max_size=4))
@settings(max_examples=50, deadline=None)
def test_dof_linearity(a, b):
    dbs = [10, 20, 35, 60]
    pa = [RatePoint(x, [y]) for x, y in zip(dbs, a)]
    pb = [RatePoint(x, [y]) for x, y in zip(dbs, b)]
    ps = [RatePoint(x, [y + z]) for x, y, z in zip(dbs, a, b)]
    total = dof_slope(pa, 4).per_user_slope[0] + dof_slope(pb, 4).per_user_slope[0]
    assert dof_slope(ps, 4).per_user_slope[0] == pytest.approx(total, abs=1e-9)


def test_dof_too_few_points():
    with pytest.raises(ValueError):
        dof_slope([RatePoint(10.0, [1.0])])


def test_log2_snr():
    assert log2_snr(30.0) == pytest.approx(np.log2(1000.0))
