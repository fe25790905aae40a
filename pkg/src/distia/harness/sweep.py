"""
Monte-Carlo engine and the experiments built on it.

Every random draw is keyed by ``(seed, trial, ...)``, never by execution
order, so results do not depend on how trials are split across workers.
The channel and the estimation-error shapes of a trial are shared by all
SNR points; only the error scale changes with the SNR.
"""

import hashlib
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..channel import STREAM_PROP2, STREAM_RVQ, crandn, generate_channel, normalize_link, rng_for
from ..csit import CsitProfile, draw_errors, make_estimates, rvq_quantize
from ..errors import DistiaError, SweepAborted
from ..ia3 import conditioning_filter, mmse_filters, solve_distributed, solve_links, solve_perfect
from ..metrics import (RatePoint, aligned_precoder_error, dof_slope, precoder_error,
                       rates)
from ..numkit import frob

__all__ = ['SweepResult', 'run_sweep', 'prop2_experiment', 'quantizer_study',
           'precoder_scaling_study', 'accepted_trials', 'WORKERS_ENV']

log = logging.getLogger(__name__)

WORKERS_ENV = 'DISTIA_WORKERS'
MAX_FAILED_FRACTION = 0.01
DOF_WINDOW = 3
STREAM_QUANT_TARGET = 5


@dataclass
class SweepResult:
    points: list
    dof: object
    degenerate_fraction: list
    scenario_hash: str
    n_trials: int = 0
    failed: list = field(default_factory=list)

    def digest(self):
        payload = {
            'scenario': self.scenario_hash,
            'points': [[p.P_dB, [repr(float(r)) for r in p.per_user_rate],
                        [repr(float(s)) for s in p.per_user_stderr]] for p in self.points],
            'degenerate': [repr(float(x)) for x in self.degenerate_fraction],
            'failed': list(self.failed),
        }
        text = json.dumps(payload, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(text.encode('utf-8')).hexdigest()

    def rate(self, snr_db, user):
        for p in self.points:
            if p.P_dB == snr_db:
                return p.per_user_rate[user]
        raise KeyError(snr_db)


def worker_count(workers=None):
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _map_trials(fn, args, trials, workers):
    """Apply ``fn(args, trial)`` to every trial, in trial order."""
    workers = worker_count(workers)
    trials = list(trials)
    if workers == 1 or len(trials) < 2 * workers:
        return [fn(args, t) for t in trials]
    chunk = max(1, len(trials) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, [args] * len(trials), trials, chunksize=chunk))


def accepted_trials(dims, seed, count, eps, max_draws_factor=100):
    """
    The first `count` trial indices whose channel passes the conditioning
    filter (all of ``range(count)`` when `eps` is None or zero).
    """
    if not eps:
        return list(range(count))
    out = []
    trial = 0
    while len(out) < count:
        if trial >= max_draws_factor * count:
            raise SweepAborted(f'conditioning filter eps={eps} accepted only '
                               f'{len(out)} of {trial} channels')
        if conditioning_filter(generate_channel(dims, seed, trial), eps):
            out.append(trial)
        trial += 1
    return out


def _snr_linear(snr_grid_db):
    return [10.0 ** (x / 10.0) for x in snr_grid_db]


def _filters_for(receiver, links, precoders, perfect, P):
    if receiver == 'mmse':
        return mmse_filters(links, precoders, P)
    return perfect.filters


def _sweep_trial(s, trial):
    """Per-SNR rates of one trial: (rates [n_snr, K] or NaN, degenerate [n_snr], error)."""
    n = len(s.snr_grid_db)
    K = s.dims.K
    d = s.dims.d[0]
    out = np.full((n, K), np.nan)
    degenerate = np.zeros(n, dtype=bool)
    failed = np.zeros(n, dtype=bool)
    ch = generate_channel(s.dims, s.seed, trial)
    try:
        perfect = solve_perfect(ch, d)
    except DistiaError as exc:
        failed[:] = True
        return out, degenerate, failed, type(exc).__name__
    errors = None
    if not s.perfect_csit and s.csit.model == 'gaussian':
        errors = [draw_errors(s.dims, s.seed, trial, j, s.error_norm) for j in range(K)]
    last_error = None
    for p, P in enumerate(_snr_linear(s.snr_grid_db)):
        if s.perfect_csit:
            used = perfect.precoders
            degenerate[p] = perfect.degenerate
        else:
            try:
                est = make_estimates(ch, s.csit, max(P, 1.0), s.seed, trial, errors=errors)
            except DistiaError as exc:
                failed[p] = True
                last_error = type(exc).__name__
                continue
            dist = solve_distributed(est, d)
            if dist.failed:
                failed[p] = True
                last_error = type(next(e for e in dist.errors if e is not None)).__name__
                continue
            used = dist.used_precoders
            degenerate[p] = dist.degenerate or perfect.degenerate
        filters = _filters_for(s.receiver, ch.links, used, perfect, P)
        out[p] = rates(ch.links, used, filters, P)
    return out, degenerate, failed, last_error


def _aggregate(s, per_trial, n_trials, label):
    n = len(s.snr_grid_db)
    K = s.dims.K
    rates_arr = np.stack([r[0] for r in per_trial])          # [T, n, K]
    degenerate = np.stack([r[1] for r in per_trial])         # [T, n]
    failed = np.stack([r[2] for r in per_trial])             # [T, n]
    points, deg_frac, n_failed = [], [], []
    for p in range(n):
        ok = ~failed[:, p]
        nf = int(np.sum(~ok))
        n_failed.append(nf)
        if nf > MAX_FAILED_FRACTION * n_trials:
            kinds = sorted({r[3] for r in per_trial if r[3]})
            raise SweepAborted(
                f'{label}: {nf} of {n_trials} trials failed at {s.snr_grid_db[p]} dB',
                diagnostics={'snr_db': s.snr_grid_db[p], 'failed': nf,
                             'trials': n_trials, 'errors': kinds})
        means, errs = [], []
        for i in range(K):
            x = rates_arr[ok, p, i]
            means.append(math.fsum(x) / len(x))
            errs.append(float(np.std(x, ddof=1) / np.sqrt(len(x))) if len(x) > 1 else 0.0)
        points.append(RatePoint(P_dB=s.snr_grid_db[p], per_user_rate=means,
                                per_user_stderr=errs))
        deg_frac.append(float(np.mean(degenerate[ok, p])) if ok.any() else 0.0)
    dof = dof_slope(points, DOF_WINDOW) if len(points) >= 2 else None
    return SweepResult(points=points, dof=dof, degenerate_fraction=deg_frac,
                       scenario_hash=s.digest(), n_trials=n_trials, failed=n_failed)


def run_sweep(s, workers=None):
    """
    Average per-user rate over the SNR grid of scenario `s`.

    Per trial and SNR: draw the channel, build each TX's estimate, solve
    (perfect or distributed), then evaluate rates on the true channel with
    the configured receiver.

    Raises
    ------
    SweepAborted
        If more than 1% of the trials fail at some SNR point.
    """
    trials = accepted_trials(s.dims, s.seed, s.trials, s.filter_eps)
    per_trial = _map_trials(_sweep_trial, s, trials, workers)
    return _aggregate(s, per_trial, len(trials), 'sweep')


def _unit_frob(rng, shape):
    e = crandn(rng, shape)
    return e / frob(e)


def _prop2_trial(args, trial):
    beta, s = args
    n = len(s.snr_grid_db)
    K = s.dims.K
    d = s.dims.d[0]
    out = np.full((n, K), np.nan)
    degenerate = np.zeros(n, dtype=bool)
    failed = np.zeros(n, dtype=bool)
    ch = generate_channel(s.dims, s.seed, trial)
    try:
        perfect = solve_perfect(ch, d)
    except DistiaError as exc:
        failed[:] = True
        return out, degenerate, failed, type(exc).__name__
    pert = [_unit_frob(rng_for(s.seed, STREAM_PROP2, trial, j), perfect.precoders[j].shape)
            for j in range(K)]
    for p, P in enumerate(_snr_linear(s.snr_grid_db)):
        used = []
        for j in range(K):
            u = perfect.precoders[j] + P ** (-beta[j] / 2.0) * pert[j]
            used.append(u / frob(u))
        filters = _filters_for(s.receiver, ch.links, used, perfect, P)
        out[p] = rates(ch.links, used, filters, P)
        degenerate[p] = perfect.degenerate
    return out, degenerate, failed, None


def prop2_experiment(beta, s, workers=None):
    """
    Rates with injected precoder errors of size ``P**(-beta_j/2)``.

    TX ``j`` uses ``normalize(U_j* + P**(-beta_j/2) E_j)`` with ``E_j`` a
    random unit-norm matrix, so ``E||U_j - U_j*||^2`` decays as
    ``P**(-beta_j)``. The CSIT profile of `s` is ignored.
    """
    beta = tuple(float(b) for b in beta)
    if len(beta) != s.dims.K or any(b < 0 or b > 1 for b in beta):
        raise ValueError('beta must hold one value in [0, 1] per user')
    trials = accepted_trials(s.dims, s.seed, s.trials, s.filter_eps)
    per_trial = _map_trials(_prop2_trial, (beta, s), trials, workers)
    return _aggregate(s, per_trial, len(trials), 'prop2')


@dataclass
class QuantizerStudy:
    bits: list
    mean_distortion_sq: list
    stderr: list
    exponent: float  # slope of log2(mean distortion^2) vs B


def _quant_trial(args, trial):
    N, M, bits, seed = args
    rng = rng_for(seed, STREAM_RVQ, STREAM_QUANT_TARGET, trial)
    target = normalize_link(crandn(rng, (N, M)))
    out = []
    for B in bits:
        _, dist = rvq_quantize(target, B, rng_for(seed, STREAM_RVQ, trial, B))
        out.append(dist ** 2)
    return out


def quantizer_study(N, M, bits, trials, seed=0, workers=None):
    """
    Empirical RVQ distortion ``E||H~ - Q(H~)||_F^2`` against the bit budget,
    with the fitted exponent of ``log2`` distortion versus ``B``.
    """
    bits = [int(b) for b in bits]
    per_trial = np.array(_map_trials(_quant_trial, (N, M, bits, seed), range(trials), workers))
    means = [math.fsum(per_trial[:, b]) / trials for b in range(len(bits))]
    errs = [float(np.std(per_trial[:, b], ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
            for b in range(len(bits))]
    exponent = float('nan')
    if len(bits) >= 2:
        exponent = float(np.polyfit(bits, np.log2(means), 1)[0])
    return QuantizerStudy(bits=bits, mean_distortion_sq=means, stderr=errs, exponent=exponent)


@dataclass
class ScalingRow:
    A_min: float
    exponent: float           # fitted on the aligned precoder error
    P: list
    mean_aligned_sq: list
    mean_frob_sq: list
    mean_chordal_sq: list
    exponent_frob: float
    exponent_chordal: float


SCALING_P_GRID = (1e2, 1e3, 1e4, 1e5, 1e6)
DEFAULT_SCALING_EPS = 0.05


def _scaling_trial(args, trial):
    a_values, P_grid, s = args
    d = s.dims.d[0]
    ch = generate_channel(s.dims, s.seed, trial)
    u_star = solve_perfect(ch, d).precoders[0]
    errors = [draw_errors(s.dims, s.seed, trial, 0, s.error_norm)]
    out = np.zeros((len(a_values), len(P_grid), 3))
    for a, A in enumerate(a_values):
        profile = CsitProfile.uniform(s.dims.K, A, error_norm=s.error_norm)
        for p, P in enumerate(P_grid):
            est = make_estimates(ch, profile, P, s.seed, trial, errors=errors,
                                 owners=[0])[0]
            u = solve_links(est.links, d).precoders[0]
            frob_sq, chordal_sq = precoder_error(u, u_star)
            out[a, p] = (aligned_precoder_error(u, u_star), frob_sq, chordal_sq)
    return out


def _exponent(P_grid, means):
    means = np.asarray(means)
    if np.any(means <= 0):
        return float('nan')
    return float(np.polyfit(np.log(P_grid), np.log(means), 1)[0])


def precoder_scaling_study(a_values, s, P_grid=SCALING_P_GRID, workers=None):
    """
    Decay exponent of TX1's precoder error ``E||U_1^(1) - U_1*||^2`` versus
    the SNR, with every CSIT exponent set to ``A_min``.

    Gaussian error model. Channels are restricted to the well-conditioned
    set (``s.filter_eps``, default 0.05); ``s.trials`` accepted channels are
    used per point. Three error measures are reported: column-matched
    (``exponent``), raw phase-canonical Frobenius and chordal.
    """
    a_values = [float(a) for a in a_values]
    eps = s.filter_eps if s.filter_eps else DEFAULT_SCALING_EPS
    trials = accepted_trials(s.dims, s.seed, s.trials, eps)
    per_trial = np.stack(_map_trials(_scaling_trial, (a_values, tuple(P_grid), s),
                                     trials, workers))     # [T, A, P, 3]
    rows = []
    for a, A in enumerate(a_values):
        means = [[math.fsum(per_trial[:, a, p, m]) / len(trials) for p in range(len(P_grid))]
                 for m in range(3)]
        rows.append(ScalingRow(
            A_min=A, exponent=_exponent(P_grid, means[0]), P=list(P_grid),
            mean_aligned_sq=means[0], mean_frob_sq=means[1], mean_chordal_sq=means[2],
            exponent_frob=_exponent(P_grid, means[1]),
            exponent_chordal=_exponent(P_grid, means[2])))
    return rows
