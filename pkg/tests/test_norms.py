import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from types import SimpleNamespace

from nonlocal_lp.errors import ArgumentError, DegenerateInputError, UnsupportedConfiguration
from nonlocal_lp.grid import GridFunction, TorusGrid, random_trig_polynomial
from nonlocal_lp.norms import (bessel_norm, check_interpolation, check_translation_bound, fractional_laplacian,
                               lp_norm, slobodeckij_seminorm, spacetime_norms, spectral_seminorm_constant)


def test_lp_norm_of_constant(grid2):
    assert lp_norm(grid2.constant(-3.0), 3.0) == pytest.approx(3.0 * (2 * np.pi) ** (2 / 3), rel=1e-12)


def test_lp_norm_of_sine(grid1):
    assert lp_norm(grid1.sample(np.sin), 2) == pytest.approx(np.sqrt(np.pi), abs=1e-10)


def test_l4_norm_of_cosine(grid1):
    assert lp_norm(grid1.sample(np.cos), 4) == pytest.approx((3 * np.pi / 4) ** 0.25, abs=1e-10)


def test_fractional_laplacian_on_plane_wave(grid2):
    f = grid2.sample(lambda x, y: np.cos(2 * x))
    assert np.max(np.abs(fractional_laplacian(f, 1.0).nodal - 2 * f.nodal)) < 1e-12


def test_fractional_laplacian_order_zero_removes_mean(grid1):
    f = grid1.sample(lambda x: 1.5 + np.sin(x))
    assert np.max(np.abs(fractional_laplacian(f, 0.0).nodal - np.sin(grid1.axis))) < 1e-12


def test_fractional_laplacian_order_two(grid1):
    f = grid1.sample(lambda x: np.sin(3 * x))
    assert np.max(np.abs(fractional_laplacian(f, 2.0).nodal - 9 * f.nodal)) < 1e-11


def test_fractional_laplacian_negative_order(grid1):
    with pytest.raises(ArgumentError):
        fractional_laplacian(grid1.constant(1.0), -0.5)


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.5])
def test_bessel_norm_of_constant(grid1, beta):
    assert bessel_norm(grid1.constant(2.0), beta, 1.5) == pytest.approx(2.0 * (2 * np.pi) ** (1 / 1.5))


def test_bessel_norm_of_plane_wave(grid2):
    f = grid2.sample(lambda x, y: np.cos(3 * x + 4 * y))
    assert bessel_norm(f, 1.5, 3.0) == pytest.approx((1 + 5 ** 1.5) * lp_norm(f, 3.0), rel=1e-12)


def test_bessel_norm_parseval(grid2, rng):
    f = random_trig_polynomial(grid2, rng, 6)
    weights = grid2.kmag ** 1.3
    plain = np.sqrt((2 * np.pi) ** 2 * np.sum(np.abs(f.spectral) ** 2))
    frac = np.sqrt((2 * np.pi) ** 2 * np.sum(np.abs(f.spectral) ** 2 * weights ** 2))
    assert bessel_norm(f, 1.3, 2.0) == pytest.approx(plain + frac, rel=1e-8)


def test_slobodeckij_rejects_two_dimensions(grid2):
    with pytest.raises(UnsupportedConfiguration):
        slobodeckij_seminorm(grid2.constant(1.0), 0.5, 2.0)


def test_slobodeckij_constant_is_zero(grid1):
    assert slobodeckij_seminorm(grid1.constant(4.0), 0.5, 2.0) == pytest.approx(0.0, abs=1e-12)


def test_slobodeckij_matches_spectral_value():
    grid = TorusGrid(1, 128)
    const = spectral_seminorm_constant(0.5)
    ratios = []
    for func in (np.sin, lambda x: np.cos(2 * x), lambda x: np.sin(3 * x)):
        f = grid.sample(func)
        spectral = np.sqrt(2 * np.pi * const * np.sum(np.abs(f.spectral) ** 2 * grid.kmag ** 1.0))
        ratios.append(slobodeckij_seminorm(f, 0.5, 2.0) / spectral)
    assert ratios[0] == pytest.approx(1.0, rel=0.02)
    assert max(ratios) / min(ratios) < 1.02


def test_slobodeckij_homogeneous(grid1, rng):
    f = random_trig_polynomial(grid1, rng, 5)
    assert slobodeckij_seminorm(2 * f, 0.4, 3.0) == pytest.approx(2 * slobodeckij_seminorm(f, 0.4, 3.0), rel=1e-12)


def test_interpolation_plane_wave_is_one(grid1):
    _, ratio = check_interpolation(grid1.sample(lambda x: np.cos(5 * x)), 0.5, 1.5, 4.0)
    assert ratio == pytest.approx(1.0, abs=1e-12)


def test_interpolation_zero(grid1):
    assert check_interpolation(grid1.zeros(), 0.5, 1.5, 2.0) == (0.0, 0.0)


def test_translation_plane_wave_closed_form():
    grid = TorusGrid(1, 64)
    f = grid.sample(np.cos)
    beta = 0.5
    for t in np.linspace(0.1, np.pi, 9):
        ratio = check_translation_bound(f, t, beta, 2.0)
        assert ratio == pytest.approx(2 * abs(np.sin(t / 2)) / t ** beta, rel=1e-10)
        assert ratio <= 2 ** (1 - beta) + 1e-12


def test_translation_small_shifts_stay_bounded(grid1, rng):
    f = random_trig_polynomial(grid1, rng, 8)
    ratios = [check_translation_bound(f, 2.0 ** -j, 0.5, 2.0) for j in range(1, 15)]
    assert max(ratios) < 2.0 and np.all(np.isfinite(ratios))


def test_translation_constant_is_degenerate(grid1):
    with pytest.raises(DegenerateInputError):
        check_translation_bound(grid1.constant(1.0), 0.3, 0.5, 2.0)


def _stored(grid, times, field, rate):
    states = [GridFunction.from_nodal(grid, np.exp(-rate * t) * field) for t in times]
    rhs = [GridFunction.from_nodal(grid, -rate * np.exp(-rate * t) * field) for t in times]
    return SimpleNamespace(times=times, states=states, rhs_history=rhs)


def test_spacetime_norms_time_constant(grid1):
    f = grid1.sample(np.sin)
    u = _stored(grid1, np.linspace(0, 0.5, 9), f.nodal, 0.0)
    norms = spacetime_norms(u, 1.5, 2.0)
    assert norms.dt_norm == 0.0
    assert norms.y_norm == pytest.approx(0.5 ** 0.5 * bessel_norm(f, 1.5, 2.0), rel=1e-12)


def test_spacetime_norms_zero(grid1):
    u = _stored(grid1, np.linspace(0, 1, 5), np.zeros(64), 1.0)
    n = spacetime_norms(u, 1.2, 3.0)
    assert n.sup_lower == n.y_norm == n.dt_norm == n.x_norm == 0.0


def test_spacetime_norms_exponential_decay(grid1):
    f = grid1.sample(np.sin)
    u = _stored(grid1, np.linspace(0, 1, 65), f.nodal, 1.0)
    norms = spacetime_norms(u, 1.5, 2.0)
    time_factor = np.sqrt((1 - np.exp(-2.0)) / 2)
    assert norms.sup_lower == pytest.approx(np.sqrt(np.pi), rel=1e-10)
    assert norms.y_norm == pytest.approx(time_factor * 2 * np.sqrt(np.pi), rel=0.01)
    assert norms.dt_norm == pytest.approx(time_factor * np.sqrt(np.pi), rel=0.01)


def test_spacetime_norms_need_two_nodes(grid1):
    with pytest.raises(ArgumentError):
        spacetime_norms(_stored(grid1, np.array([0.0]), np.zeros(64), 0.0), 1.5, 2.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3),
       st.sampled_from([1.5, 2.0, 4.0]))
def test_lp_norm_homogeneous(seed, c, p):
    grid = TorusGrid(1, 32)
    f = random_trig_polynomial(grid, np.random.default_rng(seed), 6)
    assert lp_norm(f * c, p) == pytest.approx(abs(c) * lp_norm(f, p), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10))
def test_interpolation_ratio_scale_invariant(seed, c):
    grid = TorusGrid(1, 32)
    f = random_trig_polynomial(grid, np.random.default_rng(seed), 6)
    assert check_interpolation(f * c, 0.5, 1.5, 2.0)[1] == pytest.approx(
        check_interpolation(f, 0.5, 1.5, 2.0)[1], rel=1e-10)
