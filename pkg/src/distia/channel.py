"""
Random multi-user MIMO interference channels and link normalization.

Links are indexed from zero: ``links[i][k]`` is the ``N_i x M_k`` matrix
from transmitter ``k`` to receiver ``i``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ScenarioError
from .numkit import frob

__all__ = ['Dims', 'MultiUserChannel', 'NormalizedLink', 'generate_channel',
           'normalize_link', 'rng_for', 'crandn']

# Stream tags keep the RNG families of different consumers disjoint.
STREAM_CHANNEL = 1
STREAM_CSIT = 2
STREAM_RVQ = 3
STREAM_PROP2 = 4


def rng_for(seed, *key):
    """Counter-based generator (Philox) keyed by ``(seed, *key)``."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(x) for x in key])
    return np.random.Generator(np.random.Philox(ss))


def crandn(rng, shape, var=1.0):
    """Circularly-symmetric complex Gaussian samples with variance `var`."""
    z = rng.standard_normal(tuple(shape) + (2,))
    return np.sqrt(var / 2.0) * (z[..., 0] + 1j * z[..., 1])


@dataclass(frozen=True)
class Dims:
    """Antenna and stream configuration of a K-user interference channel."""
    K: int
    M: tuple
    N: tuple
    d: tuple

    def __post_init__(self):
        for name in ('M', 'N', 'd'):
            object.__setattr__(self, name, tuple(int(x) for x in getattr(self, name)))
        if self.K < 1 or not (len(self.M) == len(self.N) == len(self.d) == self.K):
            raise ScenarioError(f'inconsistent dims: K={self.K}, M={self.M}, N={self.N}, d={self.d}')
        if min(self.M + self.N + self.d) < 1:
            raise ScenarioError('antenna and stream counts must be positive')

    @classmethod
    def square(cls, d=2, K=3):
        """The tightly-feasible case ``M = N = 2d`` for every user."""
        return cls(K=K, M=(2 * d,) * K, N=(2 * d,) * K, d=(d,) * K)

    @property
    def is_square3(self):
        return (self.K == 3 and len(set(self.d)) == 1
                and all(m == 2 * self.d[0] for m in self.M)
                and all(n == 2 * self.d[0] for n in self.N))


@dataclass(frozen=True)
class NormalizedLink:
    """Unit-norm, phase-canonical version of a channel matrix.

    ``h == norm * exp(-1j * phase) * tilde``.
    """
    tilde: np.ndarray
    phase: float
    norm: float


def normalize_link(h):
    """
    Scale `h` to unit Frobenius norm and rotate it so the first element of
    its column-stacked vectorization is real and nonnegative.
    """
    h = np.asarray(h, dtype=np.complex128)
    norm = frob(h)
    if norm == 0.0:
        raise ValueError('cannot normalize a zero matrix')
    first = h[0, 0]
    phase = -float(np.angle(first)) if first != 0 else 0.0
    tilde = np.exp(1j * phase) * h / norm
    tilde[0, 0] = abs(first) / norm
    return NormalizedLink(tilde=tilde, phase=phase, norm=norm)


@dataclass(frozen=True)
class MultiUserChannel:
    """The K x K grid of channel matrices plus its dimensions."""
    dims: Dims
    links: tuple

    def __post_init__(self):
        K = self.dims.K
        links = tuple(tuple(np.asarray(h, dtype=np.complex128) for h in row)
                      for row in self.links)
        if len(links) != K or any(len(row) != K for row in links):
            raise DimensionMismatch(f'expected a {K}x{K} grid of links')
        for i in range(K):
            for k in range(K):
                if links[i][k].shape != (self.dims.N[i], self.dims.M[k]):
                    raise DimensionMismatch(
                        f'link ({i},{k}) has shape {links[i][k].shape}, '
                        f'expected {(self.dims.N[i], self.dims.M[k])}')
        object.__setattr__(self, 'links', links)

    def normalized(self):
        """Grid of `NormalizedLink`."""
        return tuple(tuple(normalize_link(h) for h in row) for row in self.links)

    def tilde(self):
        """Grid of normalized channel matrices."""
        return tuple(tuple(n.tilde for n in row) for row in self.normalized())

    def scaled(self, i, k, c):
        """Copy with link ``(i, k)`` multiplied by the scalar `c`."""
        links = [list(row) for row in self.links]
        links[i][k] = c * links[i][k]
        return MultiUserChannel(self.dims, tuple(tuple(r) for r in links))


def generate_channel(dims, seed, trial=0):
    """
    Draw an i.i.d. Rayleigh channel (unit-variance CN entries).

    Each link comes from its own stream keyed by ``(seed, trial, i, k)`` so
    trials can be generated in any order. A link that is numerically rank
    deficient is redrawn from the next stream of the same key.
    """
    K = dims.K
    links = []
    for i in range(K):
        row = []
        for k in range(K):
            shape = (dims.N[i], dims.M[k])
            redraw = 0
            while True:
                rng = rng_for(seed, STREAM_CHANNEL, trial, i, k, redraw)
                h = crandn(rng, shape)
                s = np.linalg.svd(h, compute_uv=False)
                if s[-1] > 1e-12:
                    break
                redraw += 1
            row.append(h)
        links.append(tuple(row))
    return MultiUserChannel(dims, tuple(links))
