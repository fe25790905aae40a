"""
Runtime invariant suites behind the ``validate`` CLI command.

Each check is deterministic (fixed seeds) and returns a `Check` with a
short human-readable detail string.
"""

import time
from dataclasses import dataclass

import numpy as np

from ..channel import Dims, crandn, generate_channel, normalize_link, rng_for
from ..csit import CsitEstimate, CsitProfile, draw_errors, make_estimates, rvq_quantize
from ..ia3 import compute_cascade, solve_distributed, solve_links, solve_perfect
from ..metrics import RatePoint, dof_slope, leakage, rate_user
from ..numkit import chordal_distance, eig_general, frob, orthonormal_complement
from .scenario import Scenario
from .sweep import run_sweep

__all__ = ['Check', 'run_all', 'SUITES']

SEED = 424242


@dataclass
class Check:
    module: str
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def _well_conditioned(rng, n=4, max_cond=1e3):
    while True:
        a = crandn(rng, (n, n))
        if np.linalg.cond(a) < max_cond:
            return a


# numkit ------------------------------------------------------------------

def check_eig_reconstruction(trials=500):
    rng = rng_for(SEED, 100)
    worst = 0.0
    for _ in range(trials):
        a = _well_conditioned(rng)
        e = eig_general(a)
        rec = e.vectors @ np.diag(e.values) @ np.linalg.inv(e.vectors)
        worst = max(worst, frob(rec - a) / frob(a))
    return worst <= 1e-8, f'max relative reconstruction error {worst:.2e} (limit 1e-8)'


def check_eig_order_repeatable(trials=200):
    rng = rng_for(SEED, 101)
    for _ in range(trials):
        a = crandn(rng, (4, 4))
        e1, e2 = eig_general(a), eig_general(a.copy())
        if not (np.array_equal(e1.values, e2.values) and np.array_equal(e1.vectors, e2.vectors)):
            return False, 'repeated decomposition differs'
    return True, f'{trials} matrices decomposed twice, bit-identical'


def check_chordal_invariance(trials=500):
    rng = rng_for(SEED, 102)
    worst = 0.0
    for _ in range(trials):
        x = crandn(rng, (4, 2))
        y = crandn(rng, (4, 2))
        r1, r2 = _well_conditioned(rng, 2, 1e2), _well_conditioned(rng, 2, 1e2)
        worst = max(worst, abs(chordal_distance(x, y) - chordal_distance(x @ r1, y @ r2)),
                    chordal_distance(x, x @ r1))
    return worst <= 1e-10, f'max deviation {worst:.2e} (limit 1e-10)'


def check_complement_deterministic(trials=200):
    rng = rng_for(SEED, 103)
    for _ in range(trials):
        a = crandn(rng, (4, 2))
        if not np.array_equal(orthonormal_complement(a), orthonormal_complement(a.copy())):
            return False, 'complement differs between calls'
    return True, f'{trials} inputs, identical outputs'


# channel -----------------------------------------------------------------

def check_normalize_idempotent(trials=1000):
    rng = rng_for(SEED, 110)
    worst = 0.0
    for _ in range(trials):
        t = normalize_link(crandn(rng, (4, 4))).tilde
        worst = max(worst, frob(normalize_link(t).tilde - t))
    return worst <= 1e-12, f'max change {worst:.2e} (limit 1e-12)'


def check_normalize_roundtrip(trials=1000):
    rng = rng_for(SEED, 111)
    worst = 0.0
    for _ in range(trials):
        h = crandn(rng, (4, 4)) * rng.uniform(0.01, 100.0)
        n = normalize_link(h)
        worst = max(worst, frob(n.norm * np.exp(-1j * n.phase) * n.tilde - h) / frob(h))
    return worst <= 1e-12, f'max relative error {worst:.2e} (limit 1e-12)'


def check_links_full_rank(draws=100_000):
    dims = Dims.square(2)
    n_channels = -(-draws // 9)
    smallest = np.inf
    for t in range(n_channels):
        ch = generate_channel(dims, SEED, t)
        for row in ch.links:
            for h in row:
                smallest = min(smallest, np.linalg.svd(h, compute_uv=False)[-1])
    return smallest > 0, f'{9 * n_channels} links, smallest singular value {smallest:.2e}'


# csit ----------------------------------------------------------------------

def check_gaussian_exponential_law(draws=200):
    dims = Dims.square(2)
    P_grid = np.array([1e2, 1e3, 1e4, 1e5, 1e6])
    details, ok = [], True
    for A in (0.25, 0.5, 1.0):
        profile = CsitProfile.uniform(3, A)
        means = []
        for P in P_grid:
            errs = []
            for t in range(draws):
                ch = generate_channel(dims, SEED, t)
                est = make_estimates(ch, profile, P, SEED, t, owners=[0])[0]
                errs.append(frob(est.links[0][1] - ch.tilde()[0][1]) ** 2)
            means.append(np.mean(errs))
        slope = np.polyfit(np.log(P_grid), np.log(means), 1)[0]
        ok &= abs(slope + A) <= 0.05
        details.append(f'A={A}: slope {slope:.3f}')
    return ok, '; '.join(details)


def check_rvq_monotone(trials=1000, bits=(2, 4, 6, 8, 10, 12, 14, 16)):
    means = []
    for B in bits:
        d2 = []
        for t in range(trials):
            rng = rng_for(SEED, 120, t)
            target = normalize_link(crandn(rng, (2, 2)))
            d2.append(rvq_quantize(target, B, rng_for(SEED, 121, t, B))[1] ** 2)
        means.append(np.mean(d2))
    ok = all(b < a for a, b in zip(means, means[1:]))
    return ok, 'means ' + ', '.join(f'B={B}:{m:.4f}' for B, m in zip(bits, means))


def check_rvq_output_form(trials=300):
    worst_norm, worst_imag, min_real = 0.0, 0.0, np.inf
    for t in range(trials):
        rng = rng_for(SEED, 122, t)
        target = normalize_link(crandn(rng, (2, 3)))
        q, _ = rvq_quantize(target, 1 + t % 10, rng)
        worst_norm = max(worst_norm, abs(frob(q) - 1.0))
        worst_imag = max(worst_imag, abs(q[0, 0].imag))
        min_real = min(min_real, q[0, 0].real)
    ok = worst_norm <= 1e-12 and worst_imag == 0.0 and min_real >= 0.0
    return ok, f'norm error {worst_norm:.1e}, first entry imag {worst_imag:.1e}, min real {min_real:.3f}'


# ia3 ---------------------------------------------------------------------

def check_ia_exactness(trials=1000):
    dims = Dims.square(2)
    worst_res, worst_span = 0.0, 0.0
    for t in range(trials):
        ch = generate_channel(dims, SEED, t)
        sol = solve_perfect(ch, 2)
        tl = ch.tilde()
        U, G = sol.precoders, sol.filters
        for i in range(3):
            for j in range(3):
                if i != j:
                    worst_res = max(worst_res, frob(G[i].conj().T @ ch.links[i][j] @ U[j]))
        for (a, b), (c, e) in ((((2, 0), 0), ((2, 1), 1)), (((0, 1), 1), ((0, 2), 2)),
                                (((1, 2), 2), ((1, 0), 0))):
            worst_span = max(worst_span, chordal_distance(tl[a[0]][a[1]] @ U[b],
                                                          tl[c[0]][c[1]] @ U[e]))
    ok = worst_res <= 1e-8 and worst_span <= 1e-9
    return ok, f'max residual {worst_res:.2e} (1e-8), max span distance {worst_span:.2e} (1e-9)'


def check_fixed_point(trials=1000):
    dims = Dims.square(2)
    worst = 0.0
    for t in range(trials):
        ch = generate_channel(dims, SEED, t)
        sol = solve_perfect(ch, 2)
        y = compute_cascade(ch.tilde())
        u1 = sol.precoders[0]
        lam = np.diag(sol.cascade_eigs[:2])
        worst = max(worst, frob(y @ u1 - u1 @ lam))
    return worst <= 1e-9, f'max residual {worst:.2e} (limit 1e-9)'


def check_scaling_invariance(trials=200):
    dims = Dims.square(2)
    rng = rng_for(SEED, 130)
    worst = 0.0
    for t in range(trials):
        ch = generate_channel(dims, SEED, t)
        i, k = int(rng.integers(3)), int(rng.integers(3))
        c = complex(crandn(rng, ())) * rng.uniform(0.1, 10)
        s1, s2 = solve_perfect(ch, 2), solve_perfect(ch.scaled(i, k, c), 2)
        for a, b in zip(s1.precoders + s1.filters, s2.precoders + s2.filters):
            worst = max(worst, frob(a - b))
    return worst <= 1e-10, f'max change {worst:.2e} (limit 1e-10)'


def check_distributed_consistency(trials=200):
    dims = Dims.square(2)
    profile = CsitProfile.uniform(3, 1.0)
    for t in range(trials):
        ch = generate_channel(dims, SEED, t)
        est = make_estimates(ch, profile, 1e3, SEED, t)[0]
        same = [CsitEstimate(owner=j, links=est.links, sigmas=est.sigmas) for j in range(3)]
        dist = solve_distributed(same, 2)
        ref = solve_links(est.links, 2)
        if not all(np.array_equal(u, v) for u, v in zip(dist.used_precoders, ref.precoders)):
            return False, f'trial {t}: shared estimate does not reproduce the central solution'
    return True, f'{trials} trials, bit-identical precoders'


def check_distributed_independence(trials=200):
    dims = Dims.square(2)
    profile = CsitProfile.uniform(3, 0.5)
    for t in range(trials):
        ch = generate_channel(dims, SEED, t)
        base = make_estimates(ch, profile, 1e3, SEED, t)
        other = make_estimates(ch, profile, 1e3, SEED, t, tx_seeds=[SEED, SEED + 1, SEED])
        d1, d2 = solve_distributed(base, 2), solve_distributed(other, 2)
        if not (np.array_equal(d1.used_precoders[0], d2.used_precoders[0])
                and np.array_equal(d1.used_precoders[2], d2.used_precoders[2])):
            return False, f'trial {t}: changing TX2 estimate moved another precoder'
        if np.array_equal(d1.used_precoders[1], d2.used_precoders[1]):
            return False, f'trial {t}: TX2 precoder did not change'
    return True, f'{trials} trials, only TX2 precoder changed'


# metrics -------------------------------------------------------------------

def check_rate_monotone(trials=200):
    dims = Dims.square(2)
    grid = [10 ** (x / 10) for x in range(0, 81, 5)]
    for t in range(trials):
        ch = generate_channel(dims, SEED, t)
        sol = solve_perfect(ch, 2)
        for i in range(3):
            r = [rate_user(ch.links, sol.precoders, sol.filters, P, i) for P in grid]
            if any(b < a - 1e-9 for a, b in zip(r, r[1:])):
                return False, f'trial {t}, user {i + 1}: rate decreased'
    return True, f'{trials} channels, rate nondecreasing over 0..80 dB'


def check_leakage_scaling(trials=200):
    dims = Dims.square(2)
    rng = rng_for(SEED, 140)
    worst = 0.0
    for t in range(trials):
        ch = generate_channel(dims, SEED, t)
        U = [crandn(rng, (4, 2)) for _ in range(3)]
        G = [crandn(rng, (4, 2)) for _ in range(3)]
        i, k = 0, 1 + int(rng.integers(2))
        c = complex(crandn(rng, ())) * rng.uniform(0.1, 10)
        term = frob(G[i].conj().T @ ch.links[i][k] @ U[k]) ** 2
        expected = leakage(ch.links, U, G) + (abs(c) ** 2 - 1) * term
        got = leakage(ch.scaled(i, k, c).links, U, G)
        worst = max(worst, abs(got - expected) / expected)
    return worst <= 1e-10, f'max relative deviation {worst:.2e}'


def check_dof_linearity(trials=100):
    rng = rng_for(SEED, 150)
    grid = [0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0]
    worst = 0.0
    for _ in range(trials):
        a = rng.normal(size=(len(grid), 3)) * 5
        b = rng.normal(size=(len(grid), 3)) * 5
        mk = lambda r: [RatePoint(x, list(row)) for x, row in zip(grid, r)]
        sa = dof_slope(mk(a)).per_user_slope
        sb = dof_slope(mk(b)).per_user_slope
        sab = dof_slope(mk(a + b)).per_user_slope
        worst = max(worst, max(abs(x + y - z) for x, y, z in zip(sa, sb, sab)))
    return worst <= 1e-9, f'max deviation {worst:.2e}'


# harness -------------------------------------------------------------------

def _small(csit, trials=100, seed=77):
    return Scenario(dims=Dims.square(2), snr_grid_db=(0, 20, 40, 60), trials=trials,
                    csit=csit, seed=seed)


def check_end_to_end_determinism():
    s = _small(CsitProfile.degraded_link(), trials=50)
    d1, d2 = run_sweep(s, workers=1).digest(), run_sweep(s, workers=1).digest()
    return d1 == d2, f'digest {d1[:16]}'


def check_perfect_dominance():
    perfect = run_sweep(_small(None, trials=300), workers=1)
    ok, worst = True, np.inf
    for profile in (CsitProfile.uniform(3, 1.0), CsitProfile.degraded_link(),
                    CsitProfile.uniform(3, 0.5)):
        imp = run_sweep(_small(profile, trials=300), workers=1)
        for pp, pi in zip(perfect.points, imp.points):
            for i in range(3):
                se = np.hypot(pp.per_user_stderr[i], pi.per_user_stderr[i])
                margin = (pp.per_user_rate[i] - pi.per_user_rate[i]) / se
                worst = min(worst, margin)
                ok &= margin >= -2.0
    return ok, f'smallest (perfect - imperfect)/stderr {worst:.2f} (limit -2)'


def check_trial_count_consistency():
    s = _small(CsitProfile.uniform(3, 1.0), trials=200)
    small = run_sweep(s, workers=1)
    big = run_sweep(s.replace(trials=400), workers=1)
    worst = 0.0
    for ps, pb in zip(small.points, big.points):
        for i in range(3):
            worst = max(worst, abs(ps.per_user_rate[i] - pb.per_user_rate[i])
                        / ps.per_user_stderr[i])
    return worst < 3.0, f'max change {worst:.2f} stderr (limit 3)'


SUITES = {
    'numkit': [check_eig_reconstruction, check_eig_order_repeatable,
               check_chordal_invariance, check_complement_deterministic],
    'channel': [check_normalize_idempotent, check_normalize_roundtrip, check_links_full_rank],
    'csit': [check_gaussian_exponential_law, check_rvq_monotone, check_rvq_output_form],
    'ia3': [check_ia_exactness, check_fixed_point, check_scaling_invariance,
            check_distributed_consistency, check_distributed_independence],
    'metrics': [check_rate_monotone, check_leakage_scaling, check_dof_linearity],
    'harness': [check_end_to_end_determinism, check_perfect_dominance,
                check_trial_count_consistency],
}


def run_all(modules=None, report=None):
    """Run the selected suites (all by default) and return the list of `Check`."""
    results = []
    for module, checks in SUITES.items():
        if modules and module not in modules:
            continue
        for fn in checks:
            t0 = time.perf_counter()
            try:
                passed, detail = fn()
            except Exception as exc:  # a crashing check is a failed check
                passed, detail = False, f'{type(exc).__name__}: {exc}'
            c = Check(module, fn.__name__[len('check_'):], bool(passed), detail,
                      time.perf_counter() - t0)
            results.append(c)
            if report is not None:
                report(c)
    return results
