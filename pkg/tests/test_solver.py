import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nonlocal_lp.coefficients import (ConstantKernel, CosineDrift, SeparableKernel, ZeroDrift, mollifier_multiplier,
                                      mollify_coefficients)
from nonlocal_lp.errors import ArgumentError, HypothesisViolation, InconsistencyError, WrongRouteError
from nonlocal_lp.grid import GridFunction, TorusGrid, random_trig_polynomial
from nonlocal_lp.measure import BoundedLevyMeasure, SphericalMeasure
from nonlocal_lp.norms import lp_norm
from nonlocal_lp.semigroup import char_exponent
from nonlocal_lp.solver import (Problem, Solution, apriori_report, solve_continuity, solve_duhamel, solve_imex,
                                validate_problem)

from conftest import pair_measure


def variable_problem(n=64):
    grid = TorusGrid(1, n)
    coeff = SeparableKernel(base=1.0, x_amp=0.25, xy_amp=0.125, y_exp=0.6)
    return Problem(pair_measure(1.5), grid.sample(np.sin), coeff, CosineDrift(0.25), None, 1.0, 2.0)


def test_duhamel_plane_wave():
    grid = TorusGrid(1, 64)
    nu = pair_measure(1.5)
    sol = solve_duhamel(Problem(nu, grid.sample(lambda x: np.cos(3 * x))), 16)
    psi = char_exponent(nu, [3.0]).real
    for t, u in zip(sol.times, sol.states):
        assert np.max(np.abs(u.nodal - np.exp(t * psi) * np.cos(3 * grid.axis))) < 1e-8


def test_duhamel_constant_forcing():
    grid = TorusGrid(1, 32)
    force = grid.constant(1.7)
    sol = solve_duhamel(Problem(pair_measure(1.5), grid.zeros(), forcing=lambda t: force), 8)
    for t, u in zip(sol.times, sol.states):
        assert np.allclose(u.nodal, 1.7 * t, atol=1e-12)


def test_duhamel_flow_property():
    grid = TorusGrid(1, 64)
    nu = pair_measure(1.2)
    rng = np.random.default_rng(2)
    phi = random_trig_polynomial(grid, rng, 6)
    force = random_trig_polynomial(grid, rng, 4)
    whole = solve_duhamel(Problem(nu, phi, forcing=lambda t: force, T=1.0), 16)
    half = solve_duhamel(Problem(nu, phi, forcing=lambda t: force, T=0.5), 8)
    rest = solve_duhamel(Problem(nu, half.final, forcing=lambda t: force, T=0.5), 8)
    assert np.max(np.abs(whole.final.nodal - rest.final.nodal)) < 1e-9


def test_duhamel_rejects_variable_kernel():
    with pytest.raises(WrongRouteError):
        solve_duhamel(variable_problem(32))


def test_imex_first_order_against_duhamel():
    grid = TorusGrid(1, 64)
    prob = Problem(pair_measure(1.5), random_trig_polynomial(grid, np.random.default_rng(5), 4))
    exact = solve_duhamel(prob, 16).final
    gaps = [lp_norm(solve_imex(prob, n).final - exact, 2.0) for n in (32, 64, 128)]
    slopes = np.log2(np.array(gaps[:-1]) / np.array(gaps[1:]))
    assert np.all(np.abs(slopes - 1.0) <= 0.2)


def test_imex_constants_stationary(grid1):
    sol = solve_imex(Problem(pair_measure(1.5), grid1.constant(2.0)), 16)
    for u in sol.states:
        assert np.allclose(u.nodal, 2.0, atol=1e-13)


def test_imex_needs_enough_steps(grid1):
    with pytest.raises(ArgumentError):
        solve_imex(Problem(pair_measure(1.5), grid1.sample(np.sin)), 8)


def test_imex_residual_converges():
    prob = variable_problem()
    res = [solve_imex(prob, n).residual for n in (32, 64, 128)]
    orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    assert np.all(orders >= 0.8)


def test_continuity_frozen_one_iteration(grid1):
    prob = Problem(pair_measure(1.5), grid1.sample(np.sin))
    res = solve_continuity(prob, 32)
    assert res.iterations == len(res.schedule) - 1
    assert np.max(np.abs(res.solution.final.nodal - solve_imex(prob, 32).final.nodal)) < 1e-12


def test_continuity_matches_imex():
    prob = variable_problem()
    sol, iterations, factors = solve_continuity(prob, 32)
    direct = solve_imex(prob, 32)
    assert max(factors) < 1
    gap = lp_norm(sol.final - direct.final, 2.0)
    assert gap <= 2 * max(sol.residual, direct.residual)


def test_continuity_schedule_independent():
    prob = variable_problem()
    a = solve_continuity(prob, 32, tol=1e-10, lambda_step=0.5).solution
    b = solve_continuity(prob, 32, tol=1e-10, lambda_step=0.25).solution
    assert lp_norm(a.final - b.final, 2.0) < 1e-8


def test_mollify_x_independent_kernel():
    coeff = SeparableKernel(base=1.0, y_amp=0.5)
    a_eps, _ = mollify_coefficients(coeff, ZeroDrift(), 0.1)
    assert a_eps is coeff


def test_mollify_sine_coefficient():
    grid = TorusGrid(1, 64)
    coeff = SeparableKernel(base=1.0, x_amp=0.25)
    gaps = []
    for j in range(1, 7):
        eps = 2.0 ** -j
        a_eps, _ = mollify_coefficients(coeff, ZeroDrift(), eps, grid, modulus1=lambda r: min(r / 4, 0.5))
        first = float(mollifier_multiplier(grid, eps)[1].real)
        assert 0 < first <= 1
        expected = 1 + 0.25 * first * np.sin(grid.axis)
        assert np.allclose(a_eps.at_zero_on_grid(0.0, grid), expected, atol=1e-12)
        gaps.append(np.max(np.abs(a_eps.at_zero_on_grid(0.0, grid) - coeff.at_zero_on_grid(0.0, grid))))
    assert np.all(np.diff(gaps) < 0)


def test_apriori_zero_problem(grid1):
    sol = solve_duhamel(Problem(pair_measure(1.5), grid1.zeros()), 8)
    rep = apriori_report(sol, Problem(pair_measure(1.5), grid1.zeros()))
    assert rep.x_norm == rep.phi_norm == rep.f_norm == rep.ratio == 0.0


def test_apriori_inconsistent_data(grid1):
    prob = Problem(pair_measure(1.5), grid1.zeros())
    fake = solve_duhamel(Problem(pair_measure(1.5), grid1.sample(np.sin)), 8)
    fake.states[0] = grid1.zeros()
    with pytest.raises(InconsistencyError):
        apriori_report(fake, prob)


def test_apriori_plane_wave_derivative_level():
    grid = TorusGrid(1, 64)
    prob = Problem(pair_measure(1.5), grid.sample(np.cos))
    sol = solve_duhamel(prob, 16)
    r0, r1 = apriori_report(sol, prob, 0), apriori_report(sol, prob, 1)
    assert np.isfinite(r0.ratio) and r0.ratio > 0
    assert r1.ratio == pytest.approx(r0.ratio, rel=1e-6)


def test_validate_canonical_all_positive(grid1):
    checks = validate_problem(Problem(pair_measure(1.5), grid1.sample(np.sin), check=False))
    assert all(c.passed and c.margin > 0 for c in checks)


def test_validate_names_exclusion(grid1):
    prob = Problem(pair_measure(1.5), grid1.sample(np.sin), p=3.0001, check=False)
    failed = [c.name for c in validate_problem(prob) if not c.passed]
    assert failed == ["p_exclusion"]
    with pytest.raises(HypothesisViolation, match="p_exclusion"):
        Problem(pair_measure(1.5), grid1.sample(np.sin), p=2.9999)


def test_validate_names_cancellation(grid1):
    nu = BoundedLevyMeasure.stable(1.0, SphericalMeasure.from_atoms([((1.0,), 1.0)]))
    failed = [c.name for c in validate_problem(Problem(nu, grid1.sample(np.sin), check=False)) if not c.passed]
    assert "alpha1_measure_cancellation" in failed


def test_solution_csv_rows(grid1):
    sol = solve_duhamel(Problem(pair_measure(1.5), grid1.sample(np.sin)), 4)
    lines = sol.to_csv("abc").splitlines()
    assert lines[0] == "# config_digest=abc" and lines[1] == "t,x,u"
    assert len(lines) == 2 + 5 * 64


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["duhamel", "imex"]))
def test_first_state_is_initial_data(seed, route):
    grid = TorusGrid(1, 16)
    phi = random_trig_polynomial(grid, np.random.default_rng(seed), 4)
    prob = Problem(pair_measure(1.5), phi, check=False)
    sol = solve_duhamel(prob, 4) if route == "duhamel" else solve_imex(prob, 16)
    assert np.array_equal(sol.states[0].nodal, phi.nodal)
    assert len(sol.states) == len(sol.times) == len(sol.rhs_history)
