"""
Closed-form interference alignment for the 3-user square MIMO channel.

With ``M = N = 2d`` the alignment conditions reduce to an eigenvector
problem for the cascade

    Y = H31^-1 H32 H12^-1 H13 H23^-1 H21

(one-based link indices). TX1 uses ``d`` eigenvectors of ``Y`` and the two
other precoders follow by chaining. Under distributed CSIT every TX runs
the whole pipeline on its own estimate and keeps only its own precoder.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DistiaError, SingularMatrix
from .numkit import (GAP_RTOL, eig_general, frob, inverse, min_pairwise_gap,
                     orthonormal_complement)

__all__ = ['IaSolution', 'DistributedSolution', 'compute_cascade', 'solve_links',
           'solve_perfect', 'solve_distributed', 'conditioning_filter',
           'mmse_filters']

# Factors of the cascade, left to right, as (link, inverted) with zero-based
# link indices.
CASCADE = (((2, 0), True), ((2, 1), False), ((0, 1), True),
           ((0, 2), False), ((1, 2), True), ((1, 0), False))


@dataclass
class IaSolution:
    """Precoders ``U_j`` and receive filters ``G_i`` (both unit Frobenius norm)."""
    precoders: list
    filters: list
    cascade_eigs: np.ndarray = field(repr=False)
    min_eig_gap: float = float('inf')
    degenerate: bool = False


@dataclass
class DistributedSolution:
    """
    Result of three independent per-TX solves.

    ``used_precoders[j]`` is the precoder TX ``j`` computed for itself; it is
    None when that TX's solve failed, in which case ``errors[j]`` holds the
    exception.
    """
    used_precoders: list
    per_tx_solutions: list
    errors: list

    @property
    def failed(self):
        return any(e is not None for e in self.errors)

    @property
    def degenerate(self):
        return any(s is not None and s.degenerate for s in self.per_tx_solutions)


def _inv(links, i, k):
    try:
        return inverse(links[i][k])
    except SingularMatrix as exc:
        raise SingularMatrix(f'link ({i + 1},{k + 1}) is singular', smin=exc.smin,
                             link=(i, k)) from exc


def compute_cascade(links):
    """The six-factor cascade matrix ``Y`` of a 3x3 grid of square links."""
    y = None
    for (i, k), inverted in CASCADE:
        f = _inv(links, i, k) if inverted else np.asarray(links[i][k], dtype=np.complex128)
        y = f if y is None else y @ f
    return y


def _normalize_f(a):
    return a / frob(a)


def receive_filters(links, precoders, d):
    """
    Zero-forcing filters: ``G_i`` spans the complement of the interference
    that reaches RX ``i`` from the lowest-indexed other TX, scaled to unit
    Frobenius norm.
    """
    filters = []
    for i in range(3):
        j = 0 if i != 0 else 1
        interference = links[i][j] @ precoders[j]
        q = orthonormal_complement(interference)
        filters.append(q[:, :d] / np.sqrt(d))
    return filters


def solve_links(links, d, gap_tol=None):
    """
    Closed-form IA solution of a 3x3 grid of square ``2d x 2d`` links.

    The links are normally the normalized channel (or one TX's estimate of
    it), but any nonzero scaling gives the same precoders up to rounding.

    Raises
    ------
    SingularMatrix
        An inverted link is singular; ``exc.link`` holds its index.
    EmptyComplement
        The interference at some RX spans the whole receive space.
    """
    inv31 = _inv(links, 2, 0)
    inv12 = _inv(links, 0, 1)
    inv23 = _inv(links, 1, 2)
    y = inv31 @ links[2][1] @ inv12 @ links[0][2] @ inv23 @ links[1][0]
    if gap_tol is None:
        gap_tol = GAP_RTOL * frob(y)
    eig = eig_general(y, gap_tol=gap_tol)
    u1 = eig.vectors[:, :d] / np.sqrt(d)
    u3 = _normalize_f(inv23 @ links[1][0] @ u1)
    u2 = _normalize_f(inv12 @ links[0][2] @ u3)
    precoders = [u1, u2, u3]
    filters = receive_filters(links, precoders, d)
    return IaSolution(precoders=precoders, filters=filters, cascade_eigs=eig.values,
                      min_eig_gap=eig.min_gap, degenerate=eig.degenerate)


def _check_square3(dims, d):
    if not dims.is_square3 or dims.d[0] != d:
        raise ValueError(f'closed-form solver needs K=3 and M=N=2d with d={d}, got {dims}')


def solve_perfect(channel, d, gap_tol=None):
    """IA solution from perfect knowledge of `channel` (normalized internally)."""
    _check_square3(channel.dims, d)
    return solve_links(channel.tilde(), d, gap_tol=gap_tol)


def solve_distributed(estimates, d, gap_tol=None):
    """
    Run the closed-form solver independently on each TX's estimate.

    TX ``j`` keeps only ``U_j`` from its own solution. A failing TX does not
    stop the others; its error is stored in the result.
    """
    used, sols, errs = [], [], []
    for j, est in enumerate(estimates):
        try:
            sol = solve_links(est.links, d, gap_tol=gap_tol)
        except DistiaError as exc:
            used.append(None)
            sols.append(None)
            errs.append(exc)
            continue
        used.append(sol.precoders[j])
        sols.append(sol)
        errs.append(None)
    return DistributedSolution(used_precoders=used, per_tx_solutions=sols, errors=errs)


def conditioning_filter(channel, eps):
    """
    Membership test for the well-conditioned channel set.

    True iff every normalized link has smallest singular value ``>= eps``
    and the cascade eigenvalues are pairwise separated by at least `eps`.
    """
    if eps <= 0:
        return True
    tilde = channel.tilde()
    for row in tilde:
        for h in row:
            if np.linalg.svd(h, compute_uv=False)[-1] < eps:
                return False
    try:
        y = compute_cascade(tilde)
    except SingularMatrix:
        return False
    return min_pairwise_gap(np.linalg.eigvals(y)) >= eps


def mmse_filters(links, precoders, P):
    """
    Linear MMSE receive filters for the given precoders on the true channel.

    Each filter is orthonormalized and scaled by ``1/sqrt(d)``, the same
    convention as the zero-forcing filters: the rate expression assumes
    filtered noise proportional to the identity.
    """
    K = len(precoders)
    filters = []
    for i in range(K):
        n = links[i][i].shape[0]
        cov = np.eye(n, dtype=np.complex128)
        for j in range(K):
            hu = links[i][j] @ precoders[j]
            cov += P * (hu @ hu.conj().T)
        g = np.linalg.solve(cov, links[i][i] @ precoders[i])
        q, _ = np.linalg.qr(g)
        filters.append(q / np.sqrt(q.shape[1]))
    return filters
