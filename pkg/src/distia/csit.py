"""
Imperfect, per-transmitter channel state information.

Every transmitter ``j`` holds its own estimate of every normalized link
``(i, k)``. The quality of that estimate is set by a scaling exponent
``A[i, k, j]``: the estimation error energy decays as ``C * P**(-A)``.
Two error models are available: random vector quantization (RVQ) against
an isotropic random codebook, and the additive Gaussian surrogate.
"""

from dataclasses import dataclass, field

import numpy as np

from .channel import STREAM_CSIT, STREAM_RVQ, NormalizedLink, crandn, rng_for
from .errors import CodebookTooLarge, DimensionMismatch, ScenarioError

__all__ = ['CsitProfile', 'CsitEstimate', 'sigma_from_bits', 'bits_from_scaling',
           'sigma_from_scaling', 'rvq_quantize', 'gaussian_perturb',
           'draw_errors', 'make_estimates', 'B_MAX']

B_MAX = 24
MODELS = ('gaussian', 'rvq')
ERROR_NORMS = ('unit', 'per_entry')


@dataclass
class CsitProfile:
    """
    Per-transmitter CSIT scaling exponents.

    Attributes
    ----------
    A : ndarray, shape (K, K, K)
        ``A[i, k, j]`` is the accuracy exponent of TX ``j``'s estimate of the
        link from TX ``k`` to RX ``i`` (zero-based). ``inf`` means perfect.
    model : {'gaussian', 'rvq'}
    C : float
        Distortion constant of the error law.
    error_norm : {'unit', 'per_entry'}
        Gaussian model only. 'unit' draws error entries with variance
        ``1/(N M)`` so that ``E||N||_F^2 = 1``; 'per_entry' uses unit
        variance per entry.
    """
    A: np.ndarray
    model: str = 'gaussian'
    C: float = 1.0
    error_norm: str = 'unit'

    def __post_init__(self):
        self.A = np.array(self.A, dtype=float)
        if self.A.ndim != 3 or len(set(self.A.shape)) != 1:
            raise ScenarioError(f'A must be K x K x K, got shape {self.A.shape}')
        if np.any(np.isnan(self.A)) or np.any(self.A < 0):
            raise ScenarioError('CSIT scaling exponents must be >= 0')
        if self.model not in MODELS:
            raise ScenarioError(f'unknown CSIT model {self.model!r}')
        if self.error_norm not in ERROR_NORMS:
            raise ScenarioError(f'unknown error_norm {self.error_norm!r}')
        if not self.C > 0:
            raise ScenarioError('C must be positive')

    @property
    def K(self):
        return self.A.shape[0]

    @classmethod
    def uniform(cls, K, value, **kwargs):
        return cls(np.full((K, K, K), float(value)), **kwargs)

    @classmethod
    def perfect(cls, K, **kwargs):
        return cls.uniform(K, np.inf, **kwargs)

    @classmethod
    def from_entries(cls, K, default, entries, **kwargs):
        """Build from a default plus ``{(i, k, j): value}`` overrides (zero-based)."""
        A = np.full((K, K, K), float(default))
        for (i, k, j), value in entries.items():
            A[i, k, j] = float(value)
        return cls(A, **kwargs)

    @classmethod
    def degraded_link(cls, **kwargs):
        """The 3-user profile with TX2 and TX3 holding degraded copies of link 3<-2.

        All exponents are 1 except ``A[3,2]`` at TX2 (0.5) and at TX3 (0),
        in one-based indexing.
        """
        return cls.from_entries(3, 1.0, {(2, 1, 1): 0.5, (2, 1, 2): 0.0}, **kwargs)

    @property
    def is_perfect(self):
        return bool(np.all(np.isinf(self.A)))


@dataclass
class CsitEstimate:
    """The channel estimate held by one transmitter."""
    owner: int
    links: tuple
    sigmas: np.ndarray = field(repr=False)


def sigma_from_bits(B, N, M, C=1.0):
    """Quantization error standard deviation ``sqrt(C * 2**(-B/(N M - 1)))``."""
    if N * M < 2:
        raise ValueError('need N*M >= 2')
    return float(np.sqrt(C * 2.0 ** (-B / (N * M - 1))))


def bits_from_scaling(A, P, N, M):
    """Feedback bits ``round(A (N M - 1) log2 P)`` for scaling exponent `A`."""
    if P < 1 or A < 0:
        raise ValueError('need P >= 1 and A >= 0')
    if A == 0:
        return 0
    return int(round(A * (N * M - 1) * np.log2(P)))


def sigma_from_scaling(A, P, C=1.0):
    """Error standard deviation ``sqrt(C * P**(-A))``; zero for ``A = inf``."""
    if P < 1:
        raise ValueError('need P >= 1')
    if np.isinf(A):
        return 0.0
    return float(np.sqrt(C * float(P) ** (-float(A))))


def _as_tilde(tilde):
    if isinstance(tilde, NormalizedLink):
        return tilde.tilde
    return np.asarray(tilde, dtype=np.complex128)


def _rotate_rows(w):
    # Rotate each row so its first entry is real and nonnegative.
    first = w[:, 0]
    mag = np.abs(first)
    rot = np.where(mag > 0, np.conj(first) / np.where(mag > 0, mag, 1.0), 1.0)
    w = w * rot[:, None]
    w[:, 0] = mag
    return w


def rvq_codebook(rng, n_words, length):
    """Unit-norm isotropic words, rotated to a real nonnegative first entry."""
    w = crandn(rng, (n_words, length))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    return _rotate_rows(w)


def _best_in_chunk(rng, n, vec):
    # Words are drawn in single precision and never rotated or normalized
    # explicitly: for a word w with first entry w0, the rotated unit word
    # scores Re(w0 * <w, t>) / (|w0| ||w||) against the target t.
    z = rng.standard_normal((n, 2 * vec.size), dtype=np.float32)
    w = z.view(np.complex64)
    c = w.conj() @ vec.astype(np.complex64)
    w0 = w[:, 0]
    denom = np.sqrt((w0.real ** 2 + w0.imag ** 2) * np.einsum('ij,ij->i', z, z))
    score = (w0 * c).real / denom
    k = int(np.argmax(score))
    best = w[k].astype(np.complex128)
    best /= np.linalg.norm(best)
    return float(score[k]), _rotate_rows(best[None, :])[0]


def rvq_quantize(tilde, B, rng, b_max=B_MAX, codebook=None, chunk=1 << 16):
    """
    Quantize a normalized link against a random codebook of ``2**B`` words.

    The search is exhaustive. Words are generated from `rng` in chunks so
    that the full codebook is never held in memory.

    Parameters
    ----------
    tilde : NormalizedLink or ndarray
        Unit-norm link with a real nonnegative first vec element.
    B : int
        Number of feedback bits.
    rng : numpy.random.Generator
        Codebook source.
    codebook : ndarray, optional
        Explicit ``L x (N M)`` codebook of vec'd words; overrides `B`/`rng`.

    Returns
    -------
    (ndarray, float)
        The closest codeword (reshaped like `tilde`) and its Frobenius
        distance to `tilde`.
    """
    t = _as_tilde(tilde)
    shape = t.shape
    vec = t.reshape(-1, order='F')
    if codebook is not None:
        words = np.asarray(codebook, dtype=np.complex128)
        best = int(np.argmax((words.conj() @ vec).real))
        w = words[best]
    else:
        if B > b_max:
            raise CodebookTooLarge(f'{B} bits exceeds the {b_max}-bit codebook limit')
        if B < 0:
            raise ValueError('B must be nonnegative')
        remaining = 1 << int(B)
        best_score = -np.inf
        w = None
        while remaining > 0:
            n = min(chunk, remaining)
            score, word = _best_in_chunk(rng, n, vec)
            if score > best_score:
                best_score, w = score, word
            remaining -= n
    q = w.reshape(shape, order='F')
    return q, float(np.linalg.norm(vec - w))


def gaussian_perturb(tilde, sigma, rng, error_norm='unit'):
    """
    Additive Gaussian estimation error ``tilde + sigma * N``.

    With ``error_norm='unit'`` the entries of ``N`` have variance
    ``1/(N M)`` so that ``E||N||_F^2 = 1``; with 'per_entry' they have unit
    variance. The result is not re-normalized.
    """
    t = _as_tilde(tilde)
    if sigma < 0:
        raise ValueError('sigma must be nonnegative')
    if sigma == 0:
        return t.copy()
    var = 1.0 / t.size if error_norm == 'unit' else 1.0
    return t + sigma * crandn(rng, t.shape, var)


def draw_errors(dims, seed, trial, owner, error_norm='unit'):
    """
    Gaussian error matrices of TX `owner` for every link.

    Each link has its own stream keyed by ``(seed, trial, owner, i, k)``;
    the same draws are reused across SNR points, only their scale changes.
    """
    K = dims.K
    out = []
    for i in range(K):
        row = []
        for k in range(K):
            shape = (dims.N[i], dims.M[k])
            var = 1.0 / (shape[0] * shape[1]) if error_norm == 'unit' else 1.0
            row.append(crandn(rng_for(seed, STREAM_CSIT, trial, owner, i, k), shape, var))
        out.append(tuple(row))
    return tuple(out)


def make_estimates(channel, profile, P, seed, trial=0, tx_seeds=None, errors=None,
                   owners=None):
    """
    Produce every transmitter's estimate of the normalized channel.

    Parameters
    ----------
    channel : MultiUserChannel
    profile : CsitProfile
    P : float
        Linear SNR (>= 1).
    seed, trial : int
        Key of the randomness; TX ``j`` uses ``tx_seeds[j]`` instead of
        `seed` when given.
    errors : sequence, optional
        Pre-drawn Gaussian error grids per TX (see `draw_errors`).
    owners : iterable of int, optional
        Only build estimates for these TXs (others are None).

    Returns
    -------
    list of CsitEstimate
    """
    dims = channel.dims
    K = dims.K
    if profile.K != K:
        raise DimensionMismatch(f'profile is for K={profile.K}, channel has K={K}')
    tilde = channel.tilde()
    owners = range(K) if owners is None else owners
    estimates = [None] * K
    for j in owners:
        s_j = seed if tx_seeds is None else tx_seeds[j]
        sigmas = np.zeros((K, K))
        links = []
        err_j = None
        if profile.model == 'gaussian' and not np.all(np.isinf(profile.A[:, :, j])):
            err_j = errors[j] if errors is not None else draw_errors(
                dims, s_j, trial, j, profile.error_norm)
        for i in range(K):
            row = []
            for k in range(K):
                a = profile.A[i, k, j]
                sigma = sigma_from_scaling(a, P, profile.C)
                sigmas[i, k] = sigma
                if sigma == 0.0:
                    row.append(tilde[i][k].copy())
                elif profile.model == 'gaussian':
                    row.append(tilde[i][k] + sigma * err_j[i][k])
                else:
                    B = bits_from_scaling(a, P, dims.N[i], dims.M[k])
                    rng = rng_for(s_j, STREAM_RVQ, trial, j, i, k, B)
                    q, _ = rvq_quantize(tilde[i][k], B, rng)
                    row.append(q)
            links.append(tuple(row))
        estimates[j] = CsitEstimate(owner=j, links=tuple(links), sigmas=sigmas)
    return estimates

