import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distia.channel import (Dims, MultiUserChannel, crandn, generate_channel,
                            normalize_link, rng_for)
from distia.errors import DimensionMismatch, ScenarioError
from distia.numkit import frob


def test_normalize_real_positive():
    n = normalize_link(np.array([[2, 0], [0, 0]]))
    assert np.array_equal(n.tilde, np.array([[1, 0], [0, 0]], dtype=complex))
    assert n.phase == 0.0
    assert n.norm == 2.0


def test_normalize_imaginary_first_entry():
    n = normalize_link(np.array([[2j, 0], [0, 0]]))
    assert np.allclose(n.tilde, [[1, 0], [0, 0]], atol=1e-15)
    assert n.phase == pytest.approx(-np.pi / 2)


def test_normalize_zero_first_entry():
    n = normalize_link(np.array([[0, 1j], [0, 0]]))
    assert n.tilde[0, 0] == 0
    assert frob(n.tilde) == pytest.approx(1.0)


def test_normalize_zero_matrix():
    with pytest.raises(ValueError):
        normalize_link(np.zeros((2, 2)))


@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
@settings(max_examples=100, deadline=None)
def test_normalize_properties(seed, scale):
    h = scale * crandn(np.random.default_rng(seed), (4, 4))
    n = normalize_link(h)
    assert abs(frob(n.tilde) - 1) <= 1e-12
    assert n.tilde[0, 0].imag == 0 and n.tilde[0, 0].real >= 0
    # round trip and idempotence
    assert frob(n.norm * np.exp(-1j * n.phase) * n.tilde - h) <= 1e-12 * frob(h)
    assert frob(normalize_link(n.tilde).tilde - n.tilde) <= 1e-12


@given(st.integers(0, 2**32 - 1), st.floats(0, 2 * np.pi), st.floats(1e-2, 1e2))
@settings(max_examples=50, deadline=None)
def test_normalize_strips_complex_scalar(seed, angle, mag):
    h = crandn(np.random.default_rng(seed), (3, 2))
    c = mag * np.exp(1j * angle)
    assert frob(normalize_link(c * h).tilde - normalize_link(h).tilde) <= 1e-12


def test_generate_deterministic():
    dims = Dims.square(2)
    a = generate_channel(dims, 7, 3)
    b = generate_channel(dims, 7, 3)
    for i in range(3):
        for k in range(3):
            assert np.array_equal(a.links[i][k], b.links[i][k])
    c = generate_channel(dims, 7, 4)
    assert not np.array_equal(a.links[0][0], c.links[0][0])


def test_generate_shapes():
    dims = Dims.square(2)
    assert dims.M == dims.N == (4, 4, 4) and dims.d == (2, 2, 2)
    ch = generate_channel(dims, 1)
    assert len(ch.links) == 3
    assert all(h.shape == (4, 4) for row in ch.links for h in row)
    assert dims.is_square3


def test_generate_rectangular():
    dims = Dims(K=2, M=(3, 1), N=(2, 5), d=(1, 1))
    ch = generate_channel(dims, 0)
    assert ch.links[0][0].shape == (2, 3)
    assert ch.links[1][1].shape == (5, 1)
    assert ch.links[1][0].shape == (5, 3)
    assert not dims.is_square3


def test_scalar_link_second_moment():
    dims = Dims(K=1, M=(1,), N=(1,), d=(1,))
    samples = np.array([generate_channel(dims, 11, t).links[0][0][0, 0] for t in range(10_000)])
    assert np.mean(np.abs(samples) ** 2) == pytest.approx(1.0, rel=0.05)


def test_crandn_moments():
    z = crandn(rng_for(3, 0), (200_000,), var=2.5)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(2.5, rel=0.02)
    assert abs(np.mean(z ** 2)) < 0.05      # circular symmetry


def test_rng_streams_disjoint():
    a = rng_for(5, 1, 2).standard_normal(4)
    b = rng_for(5, 2, 1).standard_normal(4)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, rng_for(5, 1, 2).standard_normal(4))


def test_dims_validation():
    with pytest.raises(ScenarioError):
        Dims(K=3, M=(4, 4), N=(4, 4, 4), d=(2, 2, 2))
    with pytest.raises(ScenarioError):
        Dims(K=1, M=(0,), N=(1,), d=(1,))


def test_channel_shape_check():
    dims = Dims.square(1)
    links = [[np.eye(2)] * 3 for _ in range(3)]
    links[1][2] = np.eye(3)
    with pytest.raises(DimensionMismatch):
        MultiUserChannel(dims, links)


def test_scaled_copy():
    ch = generate_channel(Dims.square(2), 2)
    sc = ch.scaled(1, 2, 3 - 1j)
    assert np.allclose(sc.links[1][2], (3 - 1j) * ch.links[1][2])
    assert np.array_equal(sc.links[0][0], ch.links[0][0])
