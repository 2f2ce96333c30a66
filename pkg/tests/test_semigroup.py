import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nonlocal_lp.errors import ConfigurationError, HypothesisViolation
from nonlocal_lp.grid import TorusGrid, random_trig_polynomial, translate
from nonlocal_lp.measure import BoundedLevyMeasure, RadialPowerDensity, SphericalMeasure, tail_mass
from nonlocal_lp.semigroup import (SamplerConfig, char_exponent, check_factorization, propagate_mc,
                                   propagate_spectral, sample_increments, sample_path)

from conftest import pair_measure


def test_zero_intensity_leaves_only_drift():
    nu = pair_measure(1.5)
    cfg = SamplerConfig(r_cut=0.1, gaussian_correction=False, lam=0.0, vartheta=0.7,
                        allow_zero_intensity=True, n_paths=5)
    path = sample_path(nu, cfg, 2.0, np.linspace(0, 2, 5))
    assert len(path.jumps) == 0
    assert np.allclose(path.increments[:, 0], 0.7 * path.time_nodes, atol=1e-14)


def test_jump_count_matches_tail_mass():
    nu = BoundedLevyMeasure.stable(0.8, SphericalMeasure.from_atoms([((1.0,), 1.0)]))
    cfg = SamplerConfig(r_cut=0.2, n_paths=10_000, seed=5)
    counts = np.array([len(sample_path(nu, cfg, 1.0, path_index=i).jumps) for i in range(cfg.n_paths)])
    se = counts.std(ddof=1) / np.sqrt(len(counts))
    assert abs(counts.mean() - float(tail_mass(nu, cfg.r_cut))) <= 3 * se


def test_same_seed_same_path():
    nu = pair_measure(1.5, density=RadialPowerDensity(0.5))
    cfg = SamplerConfig(r_cut=0.05, seed=17)
    a = sample_path(nu, cfg, 1.0, np.linspace(0, 1, 6), path_index=3)
    b = sample_path(nu, cfg, 1.0, np.linspace(0, 1, 6), path_index=3)
    assert np.array_equal(a.increments, b.increments) and np.array_equal(a.jump_times, b.jump_times)
    assert a.to_csv() == b.to_csv()


def test_ledger_recomputes_path():
    nu = pair_measure(1.2)
    path = sample_path(nu, SamplerConfig(r_cut=0.05, seed=2), 1.0, np.linspace(0, 1, 11))
    assert np.allclose(path.recompute(), path.increments)


def test_asymmetric_alpha_one_rejected():
    nu = BoundedLevyMeasure.stable(1.0, SphericalMeasure.from_atoms([((1.0,), 1.0)]))
    with pytest.raises(HypothesisViolation):
        sample_path(nu, SamplerConfig(r_cut=0.1), 1.0)


def test_exponent_at_zero():
    assert char_exponent(pair_measure(1.5), [0.0]) == 0


def test_exponent_matches_operator_symbol():
    from nonlocal_lp.operator import levy_symbol
    nu = pair_measure(1.5, weight=0.5)
    psi = char_exponent(nu, [1.0])
    assert abs(levy_symbol(TorusGrid(1, 32), nu)[1] - psi) <= 1e-4 * abs(psi)


def test_mc_zero_time_is_identity(grid1, rng):
    f = random_trig_polynomial(grid1, rng, 4)
    mean, se = propagate_mc(f, pair_measure(1.5), SamplerConfig(r_cut=0.1, n_paths=100), 0.3, 0.3)
    assert mean is f and se == 0.0


def test_mc_of_constant(grid1):
    mean, _ = propagate_mc(grid1.constant(2.0), pair_measure(1.5), SamplerConfig(r_cut=0.1, n_paths=100), 0.0, 1.0)
    assert np.allclose(mean.nodal, 2.0, atol=1e-12)


def test_mc_plane_wave_against_exponent():
    # a plane wave's mean is fixed by one number, its k = 2 coefficient, so compare that statistic
    grid = TorusGrid(1, 32)
    nu = pair_measure(1.5)
    f = grid.sample(lambda x: np.cos(2 * x))
    cfg = SamplerConfig(r_cut=0.05, n_paths=4000, seed=8)
    mean, _ = propagate_mc(f, nu, cfg, 0.0, 0.5)
    inc = sample_increments(nu, cfg, 0.0, 0.5)[:, 0]
    phases = np.exp(2j * inc)
    se = np.std(phases, ddof=1) / np.sqrt(len(phases))
    estimate = 2 * mean.spectral[2]
    assert abs(estimate - phases.mean()) < 1e-12
    assert abs(estimate - np.exp(0.5 * char_exponent(nu, [2.0]))) <= 3 * se


def test_spectral_zero_time_is_identity(grid1, rng):
    f = random_trig_polynomial(grid1, rng, 4)
    assert propagate_spectral(f, pair_measure(1.5), 0.2, 0.2) is f


def test_spectral_pure_transport(grid1, rng):
    f = random_trig_polynomial(grid1, rng, 6)
    out = propagate_spectral(f, pair_measure(1.5), 0.0, 0.8, lambda_const=0.0, vartheta_const=1.0)
    assert np.max(np.abs(out.nodal - translate(f, 0.8).nodal)) < 1e-12


def test_spectral_matches_mc():
    grid = TorusGrid(1, 32)
    f = random_trig_polynomial(grid, np.random.default_rng(1), 4)
    nu = pair_measure(1.2)
    spec = propagate_spectral(f, nu, 0.0, 0.7)
    mean, _, se = propagate_mc(f, nu, SamplerConfig(r_cut=0.05, n_paths=4000, seed=3), 0.0, 0.7,
                               return_pointwise=True)
    assert np.max(np.abs(mean.nodal - spec.nodal).ravel() / np.maximum(se, 1e-300)) <= 3.0


def test_factorization_constant_phi(grid1):
    cfg = SamplerConfig(r_cut=0.1, n_paths=200, lam=lambda t: 1 + t)
    rep = check_factorization(grid1.constant(1.5), pair_measure(1.5), cfg, 0.0, 1.0, lambda0=1.0)
    assert rep.discrepancy < 1e-12


def test_factorization_linear_intensity():
    grid = TorusGrid(1, 32)
    cfg = SamplerConfig(r_cut=0.05, n_paths=10_000, seed=11, lam=lambda t: 1 + t)
    rep = check_factorization(grid.sample(np.sin), pair_measure(1.5), cfg, 0.0, 1.0, lambda0=1.0)
    assert rep.within


def test_factorization_floor_violation(grid1):
    cfg = SamplerConfig(r_cut=0.1, n_paths=100, lam=lambda t: 1 + t)
    with pytest.raises(ConfigurationError):
        check_factorization(grid1.sample(np.sin), pair_measure(1.5), cfg, 0.0, 1.0, lambda0=1.5)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 1000), st.integers(0, 50))
def test_increments_reproducible(seed, index):
    nu = pair_measure(1.5)
    cfg = SamplerConfig(r_cut=0.1, seed=seed, n_paths=100)
    a = sample_increments(nu, cfg, 0.0, 1.0)
    b = sample_increments(nu, cfg, 0.0, 1.0)
    assert np.array_equal(a, b)
