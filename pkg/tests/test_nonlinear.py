import numpy as np
import pytest

from nonlocal_lp.errors import ConfigurationError, UnsupportedConfiguration
from nonlocal_lp.grid import TorusGrid
from nonlocal_lp.nonlinear import NonlinearFlow, Potential, quadratic_potential, solve_nonlinear, wobble_potential
from nonlocal_lp.norms import lp_norm
from nonlocal_lp.solver import Problem, solve_duhamel

from conftest import pair_measure


def test_constant_state_is_stationary():
    grid = TorusGrid(1, 64)
    sol = solve_nonlinear(grid.constant(0.8), wobble_potential(), 1.2, n_steps=10)
    for u in sol.states:
        assert np.allclose(u.nodal, 0.8, atol=1e-13)


def test_quadratic_case_is_linear_at_first_order():
    grid = TorusGrid(1, 64)
    phi = grid.sample(lambda x: np.sin(x) + 0.5 * np.cos(3 * x))
    nu = pair_measure(1.2)
    exact = solve_duhamel(Problem(nu, phi), 16).final
    gaps = [lp_norm(solve_nonlinear(phi, quadratic_potential(), 1.2, n).final - exact, 2.0) for n in (25, 50, 100)]
    slopes = np.log2(np.array(gaps[:-1]) / np.array(gaps[1:]))
    assert np.all(np.abs(slopes - 1.0) <= 0.2)


def test_quadratic_rhs_is_linear_operator():
    from nonlocal_lp.operator import apply_levy
    grid = TorusGrid(1, 64)
    phi = grid.sample(lambda x: np.sin(2 * x))
    flow = NonlinearFlow(grid, quadratic_potential(), 1.4)
    assert np.allclose(flow.rhs(phi).nodal, apply_levy(phi, pair_measure(1.4)).nodal, atol=1e-12)


def test_wobble_energy_monotone():
    grid = TorusGrid(1, 128)
    sol = solve_nonlinear(grid.sample(np.sin), wobble_potential(), 1.2, n_steps=200)
    energy = np.asarray(sol.meta["energy"])
    assert len(energy) == 201
    assert np.all(np.diff(energy) <= 0)


def test_potential_validation():
    with pytest.raises(ConfigurationError):
        Potential(lambda u: u ** 2 + 1, lambda u: 2 * u, lambda u: 2 + 0 * u, (2.0, 2.0))
    with pytest.raises(ConfigurationError):
        Potential(lambda u: 0.5 * u ** 2, lambda u: u, lambda u: 1 + 0 * u, (2.0, 3.0))


def test_two_dimensions_unsupported():
    with pytest.raises(UnsupportedConfiguration):
        NonlinearFlow(TorusGrid(2, 16), quadratic_potential(), 1.2)
