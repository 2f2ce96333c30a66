import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nonlocal_lp.coefficients import CallableKernel, ConstantKernel, SeparableKernel
from nonlocal_lp.errors import HypothesisViolation
from nonlocal_lp.grid import TorusGrid, random_trig_polynomial
from nonlocal_lp.measure import BoundedLevyMeasure, SphericalMeasure
from nonlocal_lp.norms import lp_norm
from nonlocal_lp.operator import (apply_operator, apply_split, compensator, difference_j, estimate_dini,
                                  dini_remainder_check, levy_symbol)
from nonlocal_lp.semigroup import char_exponent

from conftest import pair_measure


# the three cases below restate y^(alpha) = 1_{alpha in (1,2)} y + 1_{alpha = 1} y 1_{|y| <= 1}
def test_compensator_absent_below_one():
    assert np.all(compensator([1.0, 0.0], 0.5) == 0.0)


def test_compensator_full_above_one():
    assert np.array_equal(compensator([3.0, 0.0], 1.5), [3.0, 0.0])


def test_compensator_truncated_at_one():
    assert np.array_equal(compensator([2.0, 0.0], 1.0), [0.0, 0.0])
    assert np.array_equal(compensator([0.5, 0.0], 1.0), [0.5, 0.0])


def test_difference_of_constant(grid1):
    assert difference_j(grid1.constant(2.0), 0.3, 1.1, 1.5) == pytest.approx(0.0, abs=1e-13)


def test_difference_of_sine_by_hand(grid1):
    f = grid1.sample(np.sin)
    assert difference_j(f, 0.0, np.pi / 2, 1.5) == pytest.approx(1 - np.pi / 2, abs=1e-12)


def test_difference_vanishes_to_second_order(grid1):
    f = grid1.sample(lambda x: np.sin(x) + 0.5 * np.cos(x))
    vals = [abs(difference_j(f, 0.7, 2.0 ** -j, 1.5)) / 4.0 ** -j for j in range(2, 16)]
    assert max(vals) < 1.0


def test_operator_kills_constants(grid2):
    nu = BoundedLevyMeasure.stable(1.5, SphericalMeasure.uniform(2, 16))
    assert np.max(np.abs(apply_operator(grid2.constant(3.0), nu).nodal)) < 1e-12


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_plane_wave_eigenvalue_1d(alpha):
    grid = TorusGrid(1, 32)
    nu = pair_measure(alpha)
    for k in (1, 3, 8):
        f = grid.sample(lambda x: np.cos(k * x))
        out = apply_operator(f, nu)
        psi = char_exponent(nu, [k])
        assert np.max(np.abs(out.nodal - psi.real * f.nodal)) <= 1e-4 * abs(psi) * np.max(np.abs(f.nodal))


def test_plane_wave_eigenvalue_2d():
    grid = TorusGrid(2, 32)
    nu = BoundedLevyMeasure.stable(1.5, SphericalMeasure.uniform(2, 16))
    f = grid.sample(lambda x, y: np.cos(2 * x + y))
    psi = char_exponent(nu, [2, 1])
    out = apply_operator(f, nu)
    assert np.max(np.abs(out.nodal - psi.real * f.nodal)) <= 1e-4 * abs(psi)


def test_half_pair_symbol_matches_oracle():
    nu = pair_measure(1.5, weight=0.5)
    oracle = char_exponent(nu, [1.0])
    grid = TorusGrid(1, 32)
    sym = levy_symbol(grid, nu)[1]
    assert abs(sym - oracle) <= 1e-4 * abs(oracle)
    assert abs(oracle.imag) < 1e-12


@pytest.mark.parametrize("alpha", [0.5, 0.9, 0.99999, 1.3])
def test_one_sided_exponent_closed_form(alpha):
    import mpmath
    nu = BoundedLevyMeasure.stable(alpha, SphericalMeasure.from_atoms([((1.0,), 1.0)]))
    exact = complex(mpmath.gamma(-alpha) * mpmath.exp(-0.5j * mpmath.pi * alpha))
    assert abs(char_exponent(nu, [1.0]) - exact) <= 1e-8 * abs(exact)


def test_constant_kernel_scales_output(grid1, rng):
    nu = pair_measure(1.2)
    f = random_trig_polynomial(grid1, rng, 6)
    base = apply_operator(f, nu)
    scaled = apply_operator(f, nu, ConstantKernel(2.5))
    assert np.max(np.abs(scaled.nodal - 2.5 * base.nodal)) < 1e-12 * np.max(np.abs(base.nodal)) + 1e-14


def test_unpaired_alpha_one_rejected(grid1):
    nu = BoundedLevyMeasure.stable(1.0, SphericalMeasure.from_atoms([((1.0,), 1.0)]))
    with pytest.raises(HypothesisViolation):
        apply_operator(grid1.sample(np.sin), nu)


def test_split_with_y_independent_kernel(grid1, rng):
    nu = pair_measure(1.5)
    coeff = SeparableKernel(base=1.0, x_amp=0.25)
    f = random_trig_polynomial(grid1, rng, 5)
    i1, i2, i3 = apply_split(f, nu, coeff, 0.0, 0.25)
    full = apply_operator(f, nu, coeff)
    assert np.max(np.abs(i2.nodal)) < 1e-12 and np.max(np.abs(i3.nodal)) < 1e-12
    assert np.max(np.abs(i1.nodal - full.nodal)) < 1e-9 * np.max(np.abs(full.nodal))


def test_split_reassembles(grid1, rng):
    nu = pair_measure(1.5)
    coeff = SeparableKernel(base=1.0, y_amp=0.5, y_exp=1.0)
    f = random_trig_polynomial(grid1, rng, 6)
    i1, i2, i3 = apply_split(f, nu, coeff, 0.0, 0.3)
    full = apply_operator(f, nu, coeff)
    gap = np.max(np.abs(i1.nodal + i2.nodal + i3.nodal - full.nodal))
    assert gap < 1e-6 * np.max(np.abs(full.nodal))


def test_inner_piece_decays_with_radius(grid1, rng):
    gamma = 0.5
    nu = pair_measure(1.5)
    coeff = SeparableKernel(base=1.0, y_amp=1.0, y_exp=gamma)
    f = random_trig_polynomial(grid1, rng, 6)
    eps = 2.0 ** -np.arange(1, 6)
    norms = [lp_norm(apply_split(f, nu, coeff, 0.0, e)[2], 2.0) for e in eps]
    slope = np.polyfit(np.log(eps), np.log(norms), 1)[0]
    assert slope >= gamma - 0.1


def test_dini_of_constant_kernel(grid1):
    rep = estimate_dini(ConstantKernel(1.0), grid1)
    assert max(rep.omega0) == 0 and max(rep.omega1) == 0
    assert rep.dini_integral0 == 0 and rep.dini_integral1 == 0


def test_dini_of_power_kernel(grid1):
    rep = estimate_dini(SeparableKernel(base=1.0, y_amp=1.0, y_exp=0.5), grid1)
    r = np.asarray(rep.radii)
    assert np.allclose(rep.omega0, r ** 0.5, rtol=1e-10)
    assert rep.dini_integral0 == pytest.approx(2.0, rel=0.05)


def test_dini_of_sine_in_x(grid1):
    rep = estimate_dini(SeparableKernel(base=1.0, x_amp=0.25), grid1)
    assert max(rep.omega0) == 0
    r = np.asarray(rep.radii)
    small = r < 0.05
    assert np.allclose(np.asarray(rep.omega1)[small], r[small] / 4, rtol=0.05)


def test_dini_remainder_ratio_zero_for_y_independent(grid1, rng):
    f = random_trig_polynomial(grid1, rng, 5)
    lhs, ratio = dini_remainder_check(f, pair_measure(1.5), SeparableKernel(base=1.0, x_amp=0.2), 0.0, 0.25, 2.0)
    assert ratio == 0.0 and lhs < 1e-12


def test_dini_remainder_ratio_homogeneous(grid1, rng):
    nu = pair_measure(1.5)
    coeff = SeparableKernel(base=1.0, y_amp=1.0, y_exp=0.5)
    f = random_trig_polynomial(grid1, rng, 5)
    dini = estimate_dini(coeff, grid1)
    r1 = dini_remainder_check(f, nu, coeff, 0.0, 0.25, 2.0, dini=dini)[1]
    r2 = dini_remainder_check(2 * f, nu, coeff, 0.0, 0.25, 2.0, dini=dini)[1]
    assert r2 == pytest.approx(r1, rel=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3), st.sampled_from([0.5, 1.0, 1.5]))
def test_operator_is_linear(seed, a, b, alpha):
    grid = TorusGrid(1, 16)
    rng = np.random.default_rng(seed)
    f, g = random_trig_polynomial(grid, rng, 5), random_trig_polynomial(grid, rng, 5)
    nu = pair_measure(alpha)
    lhs = apply_operator(f * a + g * b, nu).nodal
    rhs = a * apply_operator(f, nu).nodal + b * apply_operator(g, nu).nodal
    assert np.max(np.abs(lhs - rhs)) < 1e-9 * (1 + np.max(np.abs(rhs)))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 1.9), st.floats(0.1, 3), st.integers(1, 6))
def test_symmetric_symbol_real_nonpositive(alpha, weight, k):
    nu = pair_measure(alpha, weight)
    psi = char_exponent(nu, [float(k)])
    assert abs(psi.imag) < 1e-10 * max(1.0, abs(psi)) and psi.real <= 0


@settings(max_examples=20, deadline=None)
@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(0.05, 1.95))
def test_compensator_cases(y1, y2, alpha):
    y = np.array([y1, y2])
    out = compensator(y, alpha)
    if alpha < 1:
        assert np.all(out == 0)
    elif alpha > 1:
        assert np.array_equal(out, y)
    assert np.array_equal(compensator(y, 1.0), y if np.linalg.norm(y) <= 1 else np.zeros(2))
