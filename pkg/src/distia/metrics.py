"""Rates, leakage, precoder error and DoF slope estimation."""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DimensionMismatch
from .numkit import chordal_distance, frob

__all__ = ['RatePoint', 'DofEstimate', 'rate_user', 'rates', 'leakage',
           'precoder_error', 'aligned_precoder_error', 'dof_slope', 'log2_snr']


@dataclass
class RatePoint:
    """Trial-averaged per-user rate (bits/channel use) at one SNR."""
    P_dB: float
    per_user_rate: list
    per_user_stderr: list = field(default_factory=list)


@dataclass
class DofEstimate:
    per_user_slope: list
    window: tuple
    r2: list


def log2_snr(P_dB):
    return np.asarray(P_dB, dtype=float) / 10.0 * np.log2(10.0)


def _hpd_logdet2(a):
    # log2 det of a Hermitian positive definite matrix.
    c = np.linalg.cholesky(a)
    return 2.0 * float(np.sum(np.log2(np.abs(np.diag(c)))))


def rate_user(links, precoders, filters, P, i):
    """
    Instantaneous rate of user `i`:

        log2 det(I + P Rbar^-1 G^H H_ii U_i U_i^H H_ii^H G)

    with ``Rbar = I + P sum_{l != i} G^H H_il U_l U_l^H H_il^H G``. Uses the
    true (unnormalized) links, per-TX power `P` and unit noise.
    """
    if P == 0:
        return 0.0
    g = filters[i]
    dim = g.shape[1]
    rbar = np.eye(dim, dtype=np.complex128)
    for l, u in enumerate(precoders):
        if l == i:
            continue
        a = g.conj().T @ links[i][l] @ u
        rbar += P * (a @ a.conj().T)
    s = g.conj().T @ links[i][i] @ precoders[i]
    total = rbar + P * (s @ s.conj().T)
    # det(I + Rbar^-1 S) = det(Rbar + S) / det(Rbar), both Hermitian PD.
    return max(0.0, _hpd_logdet2(total) - _hpd_logdet2(rbar))


def rates(links, precoders, filters, P):
    return [rate_user(links, precoders, filters, P, i) for i in range(len(precoders))]


def leakage(links, precoders, filters):
    """Total residual interference ``sum_i sum_{j != i} ||G_i^H H_ij U_j||_F^2``."""
    K = len(precoders)
    total = 0.0
    for i in range(K):
        for j in range(K):
            if j != i:
                total += frob(filters[i].conj().T @ links[i][j] @ precoders[j]) ** 2
    return total


def precoder_error(u, u_star):
    """
    Squared Frobenius and squared chordal distance between two precoders.

    The Frobenius distance compares bases directly and relies on both
    matrices being phase-canonical; the chordal distance only compares spans.
    """
    u = np.asarray(u)
    u_star = np.asarray(u_star)
    if u.shape != u_star.shape:
        raise DimensionMismatch(f'shape mismatch {u.shape} vs {u_star.shape}')
    return frob(u - u_star) ** 2, chordal_distance(u, u_star) ** 2


def aligned_precoder_error(u, u_star):
    """
    Squared Frobenius distance after matching columns of `u` to those of
    `u_star` (best permutation and a free phase per column).

    Column order and per-column phase of an eigenvector precoder do not
    change ``U U^H``, so this is the part of ``||U - U*||_F^2`` that matters
    for the rate.
    """
    u = np.asarray(u)
    u_star = np.asarray(u_star)
    if u.shape != u_star.shape:
        raise DimensionMismatch(f'shape mismatch {u.shape} vs {u_star.shape}')
    corr = np.abs(u.conj().T @ u_star)
    rows, cols = linear_sum_assignment(-corr)
    total = (np.sum(np.abs(u) ** 2) + np.sum(np.abs(u_star) ** 2)
             - 2.0 * np.sum(corr[rows, cols]))
    return max(0.0, float(total))


def _fit(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - float(np.sum(resid ** 2)) / ss_tot)
    return float(slope), r2


def dof_slope(points, window_points=3):
    """
    Least-squares slope of rate versus ``log2 P`` over the top
    `window_points` SNR points, per user.

    Raises
    ------
    ValueError
        If fewer than two points fall in the window.
    """
    pts = sorted(points, key=lambda p: p.P_dB)[-window_points:]
    if len(pts) < 2 or window_points < 2:
        raise ValueError('need at least two SNR points to fit a slope')
    x = log2_snr([p.P_dB for p in pts])
    K = len(pts[0].per_user_rate)
    slopes, r2s = [], []
    for i in range(K):
        y = np.array([p.per_user_rate[i] for p in pts], dtype=float)
        s, r2 = _fit(x, y)
        slopes.append(s)
        r2s.append(r2)
    return DofEstimate(per_user_slope=slopes, window=(pts[0].P_dB, pts[-1].P_dB), r2=r2s)
