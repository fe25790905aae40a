"""
Dense complex-matrix kernel.

Matrices are plain 2-D ``numpy`` arrays of dtype ``complex128``. Every
function here is pure: inputs are never modified and no state is kept
between calls.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (DimensionMismatch, EmptyComplement, NumericalFailure,
                     RankDeficient, SingularMatrix)

__all__ = ['as_cmatrix', 'matmul', 'inverse', 'eig_general',
           'EigDecomposition', 'orthonormal_complement', 'chordal_distance',
           'frob', 'canonical_phase']

# Relative threshold (w.r.t. the Frobenius norm) below which a matrix is
# treated as singular.
SINGULAR_RTOL = 1e-12
# Relative tolerance used to group eigenvalues of equal magnitude.
GAP_RTOL = 1e-9


def as_cmatrix(a):
    """Return `a` as a finite 2-D complex128 array.

    Raises
    ------
    ValueError
        If `a` is not two-dimensional, is empty, or has NaN/Inf entries.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionMismatch(f'expected a non-empty 2-D matrix, got shape {a.shape}')
    if not np.all(np.isfinite(a)):
        raise ValueError('matrix has non-finite entries')
    return a


def frob(a):
    """Frobenius norm."""
    return float(np.linalg.norm(a, 'fro'))


def matmul(a, b):
    """Complex matrix product ``a @ b`` with a shape check."""
    a = as_cmatrix(a)
    b = as_cmatrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f'cannot multiply {a.shape} by {b.shape}')
    return a @ b


def inverse(a, return_smin=False):
    """
    Invert a square matrix.

    Parameters
    ----------
    a : array_like
        Square complex matrix.
    return_smin : bool
        If True, also return the smallest singular value of `a`.

    Raises
    ------
    SingularMatrix
        If the smallest singular value is below ``1e-12 * ||a||_F``.
    """
    a = as_cmatrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f'cannot invert non-square matrix {a.shape}')
    s = np.linalg.svd(a, compute_uv=False)
    smin = float(s[-1])
    if smin < SINGULAR_RTOL * frob(a) or smin == 0.0:
        raise SingularMatrix(f'matrix is singular (smallest singular value {smin:.3e})',
                             smin=smin)
    inv = np.linalg.inv(a)
    if return_smin:
        return inv, smin
    return inv


def canonical_phase(v):
    """
    Scale each column of `v` to unit norm and rotate it so that its
    largest-magnitude entry is real and positive.

    Ties in magnitude go to the lowest row index.
    """
    v = np.array(v, dtype=np.complex128, copy=True)
    norms = np.linalg.norm(v, axis=0)
    v /= norms
    idx = np.argmax(np.abs(v), axis=0)
    pivots = v[idx, np.arange(v.shape[1])]
    v *= (np.conj(pivots) / np.abs(pivots))[np.newaxis, :]
    # Make the pivot exactly real after rounding.
    v[idx, np.arange(v.shape[1])] = np.abs(v[idx, np.arange(v.shape[1])])
    return v


@dataclass(frozen=True)
class EigDecomposition:
    """Sorted, phase-canonical eigendecomposition.

    Attributes
    ----------
    values : ndarray
        Eigenvalues by descending magnitude (see `eig_general` for ties).
    vectors : ndarray
        Column ``k`` is the unit-norm, phase-canonical eigenvector of
        ``values[k]``.
    min_gap : float
        Smallest pairwise distance ``|values[i] - values[j]|``, ``inf`` for
        1x1 input.
    degenerate : bool
        True when ``min_gap`` is below the gap tolerance.
    """
    values: np.ndarray
    vectors: np.ndarray
    min_gap: float
    degenerate: bool


def _sort_order(values, tol):
    # Exact lexicographic order first, then regroup near-ties in |lambda| and
    # order each group by real then imaginary part (both descending).
    mags = np.abs(values)
    order = sorted(range(len(values)),
                   key=lambda k: (-mags[k], -values[k].real, -values[k].imag, k))
    out = []
    start = 0
    while start < len(order):
        stop = start + 1
        while stop < len(order) and mags[order[start]] - mags[order[stop]] <= tol:
            stop += 1
        group = order[start:stop]
        group.sort(key=lambda k: (-values[k].real, -values[k].imag, k))
        out.extend(group)
        start = stop
    return np.array(out, dtype=int)


def min_pairwise_gap(values):
    values = np.asarray(values)
    if len(values) < 2:
        return float('inf')
    diff = np.abs(values[:, None] - values[None, :])
    diff[np.diag_indices(len(values))] = np.inf
    return float(diff.min())


def eig_general(a, gap_tol=None):
    """
    Eigendecomposition of a general (non-Hermitian) complex matrix.

    Eigenvalues are ordered by decreasing absolute value. Values whose
    magnitudes differ by at most `gap_tol` are ordered by decreasing real
    part, then decreasing imaginary part. Eigenvectors are normalized with
    `canonical_phase`.

    Parameters
    ----------
    a : array_like
        Square complex matrix.
    gap_tol : float, optional
        Tie and degeneracy tolerance. Defaults to ``1e-9 * ||a||_F``.

    Returns
    -------
    EigDecomposition

    Raises
    ------
    NumericalFailure
        If the underlying QR iteration does not converge.
    """
    a = as_cmatrix(a)
    n = a.shape[0]
    if n != a.shape[1]:
        raise DimensionMismatch(f'eig_general needs a square matrix, got {a.shape}')
    if gap_tol is None:
        gap_tol = GAP_RTOL * frob(a)
    try:
        # LAPACK zgeev: Hessenberg reduction followed by shifted QR.
        values, vectors = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f'eigenvalue iteration did not converge: {exc}') from exc
    values = values.astype(np.complex128)
    order = _sort_order(values, gap_tol)
    values = values[order]
    vectors = canonical_phase(vectors[:, order])
    gap = min_pairwise_gap(values)
    return EigDecomposition(values=values, vectors=vectors, min_gap=gap,
                            degenerate=bool(gap < gap_tol))


def _rank(s, shape):
    if s.size == 0 or s[0] == 0.0:
        return 0
    tol = s[0] * max(shape) * np.finfo(float).eps * 10
    return int(np.sum(s > tol))


def orthonormal_complement(a):
    """
    Orthonormal basis of the orthogonal complement of ``span(a)``.

    Returns an ``N x (N - rank(a))`` matrix ``Q`` with ``Q^H Q = I`` and
    ``Q^H a = 0``. The result is a deterministic function of `a`.

    Raises
    ------
    EmptyComplement
        If `a` has full row rank.
    """
    a = as_cmatrix(a)
    u, s, _ = np.linalg.svd(a, full_matrices=True)
    r = _rank(s, a.shape)
    if r >= a.shape[0]:
        raise EmptyComplement(f'{a.shape[0]}x{a.shape[1]} matrix has full row rank')
    return u[:, r:]


def _orth_basis(a):
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s[-1] <= SINGULAR_RTOL * s[0] or s[0] == 0.0:
        raise RankDeficient(f'matrix of shape {a.shape} is rank deficient')
    return u


def chordal_distance(a, b):
    """
    Chordal distance between ``span(a)`` and ``span(b)``.

    Computed as ``||(I - P_a) Q_b||_F`` where ``Q_b`` is an orthonormal
    basis of ``span(b)``, so that ``d**2 = r - trace(P_a P_b)``. This form
    keeps full relative accuracy when the two spans nearly coincide.
    """
    a = as_cmatrix(a)
    b = as_cmatrix(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f'shape mismatch {a.shape} vs {b.shape}')
    qa = _orth_basis(a)
    qb = _orth_basis(b)
    resid = qb - qa @ (qa.conj().T @ qb)
    return frob(resid)
