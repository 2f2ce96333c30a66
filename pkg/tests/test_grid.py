import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nonlocal_lp.errors import ConfigurationError
from nonlocal_lp.grid import (GridFunction, TorusGrid, gradient, random_trig_modes, random_trig_polynomial,
                              translate, trig_polynomial)


@pytest.mark.parametrize("n", [12, 48, 4])
def test_bad_size_rejected(n):
    with pytest.raises(ConfigurationError):
        TorusGrid(1, n)


def test_bad_dimension_rejected():
    with pytest.raises(ConfigurationError):
        TorusGrid(3, 16)


def test_constant_has_only_zero_mode(grid1):
    f = grid1.constant(2.5)
    assert f.spectral[0] == pytest.approx(2.5, abs=1e-14)
    assert np.max(np.abs(f.spectral[1:])) < 1e-14


def test_cosine_coefficients(grid1):
    f = grid1.sample(lambda x: np.cos(3 * x))
    expected = np.zeros(64, dtype=complex)
    expected[3] = expected[-3] = 0.5
    assert np.max(np.abs(f.spectral - expected)) < 1e-12


def test_random_roundtrip(grid2, rng):
    vals = rng.standard_normal(grid2.shape)
    f = GridFunction.from_nodal(grid2, vals)
    back = GridFunction.from_spectral(grid2, f.spectral)
    assert np.max(np.abs(back.nodal - vals)) < 1e-12


def test_translate_half_period(grid1):
    f = grid1.sample(np.cos)
    assert np.max(np.abs(translate(f, np.pi).nodal + f.nodal)) < 1e-12


def test_translate_zero_is_identity(grid2, rng):
    f = random_trig_polynomial(grid2, rng, 5)
    assert np.max(np.abs(translate(f, 0.0).nodal - f.nodal)) < 1e-13


def test_translate_matches_direct_evaluation(grid1, rng):
    modes, coeffs = random_trig_modes(rng, 1, max_mode=7)
    f = trig_polynomial(grid1, modes, coeffs)
    shifted = translate(f, 0.37)
    direct = sum(np.real(c * np.exp(1j * k[0] * (grid1.axis + 0.37))) for k, c in zip(modes, coeffs))
    assert np.max(np.abs(shifted.nodal - direct)) < 1e-10


def test_gradient_of_sine(grid1):
    f = grid1.sample(lambda x: np.sin(2 * x))
    assert np.max(np.abs(gradient(f)[0].nodal - 2 * np.cos(2 * grid1.axis))) < 1e-12


def test_gradient_of_constant(grid2):
    for g in gradient(grid2.constant(3.0)):
        assert np.max(np.abs(g.nodal)) < 1e-14


def test_gradient_two_dimensional(grid2):
    f = grid2.sample(lambda x, y: np.sin(x) * np.cos(2 * y))
    gx, gy = gradient(f)
    x, y = grid2.coords
    assert np.max(np.abs(gx.nodal - np.cos(x) * np.cos(2 * y))) < 1e-10
    assert np.max(np.abs(gy.nodal + 2 * np.sin(x) * np.sin(2 * y))) < 1e-10


def test_random_modes_are_grid_independent():
    a = random_trig_modes(np.random.default_rng(4), 1, 6)
    b = random_trig_modes(np.random.default_rng(4), 1, 6)
    f = trig_polynomial(TorusGrid(1, 32), *a)
    g = trig_polynomial(TorusGrid(1, 64), *b)
    assert np.max(np.abs(f.nodal - g.nodal[::2])) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2]))
def test_roundtrip_and_conjugate_symmetry(seed, d):
    grid = TorusGrid(d, 16)
    vals = np.random.default_rng(seed).standard_normal(grid.shape)
    f = GridFunction.from_nodal(grid, vals)
    back = GridFunction.from_spectral(grid, f.spectral)
    scale = max(1.0, np.max(np.abs(vals)))
    assert np.max(np.abs(back.nodal - vals)) <= 1e-12 * scale
    flipped = f.spectral[tuple(-np.arange(16) % 16 for _ in range(d))[0]] if d == 1 else \
        f.spectral[np.ix_(-np.arange(16) % 16, -np.arange(16) % 16)]
    assert np.max(np.abs(flipped - np.conj(f.spectral))) < 1e-12 * scale


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-4, 4), st.floats(-4, 4))
def test_translations_compose(seed, a, b):
    grid = TorusGrid(1, 32)
    f = random_trig_polynomial(grid, np.random.default_rng(seed), 10)
    lhs = translate(translate(f, a), b)
    rhs = translate(f, a + b)
    assert np.max(np.abs(lhs.nodal - rhs.nodal)) < 1e-10 * max(1.0, np.max(np.abs(f.nodal)))
