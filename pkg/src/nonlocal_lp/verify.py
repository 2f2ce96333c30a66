"""Ensemble verification suites for the estimates implemented by the library.

Every suite returns a :class:`SuiteResult` holding per-sample rows (for CSV
export), a summary of empirical constants and a pass flag against declared
stability tolerances.  All randomness comes from ``numpy.random.default_rng``
seeded by the caller, so reruns are reproducible.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .coefficients import ConstantDrift, ConstantKernel, CosineDrift, SeparableKernel, ZeroDrift, mollify_coefficients
from .errors import ArgumentError
from .grid import TorusGrid, random_trig_modes, trig_polynomial
from .measure import AngularWobbleDensity, BoundedLevyMeasure, ConstantDensity, RadialPowerDensity, SphericalMeasure
from .nonlinear import quadratic_potential, solve_nonlinear, wobble_potential
from .norms import (bessel_norm, check_embedding, check_interpolation, check_translation_bound,
                    fractional_laplacian, lp_norm)
from .operator import apply_operator, estimate_dini, dini_remainder_check, levy_symbol
from .semigroup import (SamplerConfig, char_exponent, check_factorization, empirical_char_function,
                        propagate_mc, propagate_spectral)
from .solver import Problem, apriori_report, solve_continuity, solve_duhamel, solve_imex

__all__ = ["SuiteResult", "canonical_measure", "trig_ensemble", "SpaceTimeForcing", "random_problem",
           "operator_symbol_suite", "equivalence_suite", "dini_remainder_suite", "norms_suite", "semigroup_suite",
           "maximal_regularity_suite", "apriori_suite", "continuity_suite", "nonlinear_suite", "SUITES"]


@dataclass
class SuiteResult:
    name: str
    passed: bool = True
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def fail(self, message: str) -> None:
        self.passed = False
        self.failures.append(message)

    def require(self, condition: bool, message: str) -> None:
        if not condition:
            self.fail(message)

    def to_csv(self) -> str:
        cols: list = []
        for row in self.rows:
            cols.extend(c for c in row if c not in cols)
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"suite": self.name, "passed": self.passed, "failures": self.failures,
                "summary": _clean(self.summary)}

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = "" if self.passed else " (" + "; ".join(self.failures[:3]) + ")"
        return f"{status} {self.name}{extra}"


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return json.dumps(_clean(list(v)))
    return v


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _rel_change(a: float, b: float) -> float:
    return abs(b / a - 1.0) if a != 0 else np.inf


# -- test objects ------------------------------------------------------------

def canonical_measure(alpha: float, d: int = 1, symmetric: bool | None = None, density=None) -> BoundedLevyMeasure:
    """A hypothesis-satisfying measure: two atoms in ``d = 1``, eight in ``d = 2``.

    ``alpha = 1`` is always symmetric; otherwise ``symmetric=False`` halves
    the weight of the negative atoms.
    """
    symmetric = (alpha == 1) if symmetric is None else (symmetric or alpha == 1)
    if d == 1:
        atoms = [((1.0,), 1.0), ((-1.0,), 1.0 if symmetric else 0.5)]
        sigma = SphericalMeasure.from_atoms(atoms)
    elif d == 2:
        sigma = SphericalMeasure.uniform(2, 8)
        if not symmetric:
            w = np.where(sigma.directions[:, 0] < -1e-12, 0.5 * sigma.weights, sigma.weights)
            sigma = SphericalMeasure(sigma.directions, w)
    else:
        raise ArgumentError("dimension must be 1 or 2")
    return BoundedLevyMeasure.stable(alpha, sigma, density or ConstantDensity())


def trig_ensemble(d: int, size: int, seed: int, max_mode: int = 12, decay: float = 0.5) -> list:
    """Grid-independent list of ``(modes, coeffs)`` for random mean-zero trig polynomials."""
    if size <= 0:
        raise ArgumentError("ensemble size must be positive")
    rng = np.random.default_rng(seed)
    return [random_trig_modes(rng, d, max_mode=max_mode, decay=decay) for _ in range(size)]


class SpaceTimeForcing:
    """``f(t, x) = sum_j Re[(a_j + b_j cos(w_j t + s_j)) e^{i k_j.x}]`` with random data."""

    def __init__(self, grid: TorusGrid, rng: np.random.Generator, max_mode: int = 6, decay: float = 1.0,
                 scale: float = 1.0):
        self.grid = grid
        self.modes, self.a = random_trig_modes(rng, grid.d, max_mode=max_mode, decay=decay)
        n = len(self.modes)
        self.b = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * np.abs(self.a) / np.sqrt(2)
        self.w = rng.uniform(1.0, 12.0, n)
        self.s = rng.uniform(0, 2 * np.pi, n)
        self.scale = scale

    def on(self, grid: TorusGrid) -> "SpaceTimeForcing":
        other = object.__new__(SpaceTimeForcing)
        other.__dict__.update(self.__dict__)
        other.grid = grid
        return other

    def __call__(self, t: float):
        c = self.scale * (self.a + self.b * np.cos(self.w * t + self.s))
        return trig_polynomial(self.grid, self.modes, c)


def random_problem(rng: np.random.Generator, grid: TorusGrid, alpha: float, p: float, T: float = 1.0,
                   check: bool = True) -> Problem:
    """Random variable-coefficient problem satisfying the standing hypotheses."""
    nu = canonical_measure(alpha, grid.d)
    x_amp = rng.uniform(0.1, 0.3)
    y_amp = rng.uniform(0.0, 0.4)
    y_exp = rng.uniform(0.3, 0.9)
    mode = tuple(int(m) for m in rng.integers(1, 3, size=grid.d))
    kw = dict(x_mode=mode, x_phase=float(rng.uniform(0, 2 * np.pi)), time_amp=float(rng.uniform(0, 0.3)))
    if rng.random() < 0.5:
        coeff = SeparableKernel.product(x_amp, y_amp, y_exp, **kw)
    else:
        coeff = SeparableKernel.additive(x_amp, y_amp, y_exp, **kw)
    drift = CosineDrift(rng.uniform(0.05, 0.3), mode=mode, phase=float(rng.uniform(0, 2 * np.pi))) \
        if alpha >= 1 else ZeroDrift()
    modes, coeffs = random_trig_modes(rng, grid.d, max_mode=6, decay=1.5)
    phi = trig_polynomial(grid, modes, coeffs)
    forcing = SpaceTimeForcing(grid, rng, max_mode=6, decay=1.5)
    prob = Problem(nu, phi, coeff, drift, forcing, T, p, check=check)
    prob.recipe = (modes, coeffs, forcing)
    return prob


def _regrid(prob: Problem, grid: TorusGrid, coeff=None, drift=None) -> Problem:
    modes, coeffs, forcing = prob.recipe
    new = Problem(prob.nu, trig_polynomial(grid, modes, coeffs), coeff or prob.coeff, drift or prob.drift,
                  forcing.on(grid), prob.T, prob.p, check=False)
    new.recipe = (modes, coeffs, forcing.on(grid))
    return new


# -- operator suites ---------------------------------------------------------

_WAVES_2D = [(1, 0), (0, 1), (1, 1), (2, -1), (3, 2), (-4, 1), (5, 5), (0, 8), (8, 0), (6, -5)]


def operator_symbol_suite(alphas=(0.5, 1.0, 1.5), dims=(1, 2), kmax: int = 8, tol: float = 1e-4) -> SuiteResult:
    """Plane-wave eigenvalues of the quadrature operator against the exponent oracle."""
    res = SuiteResult("operator-symbol")
    start = time.perf_counter()
    worst = 0.0
    for d in dims:
        grid = TorusGrid(d, 32)
        waves = [(k,) for k in range(1, kmax + 1)] if d == 1 else [w for w in _WAVES_2D if np.hypot(*w) <= kmax]
        densities = [ConstantDensity(), RadialPowerDensity(0.5) if d == 1 else AngularWobbleDensity(0.3)]
        for alpha in alphas:
            for dens in densities:
                nu = canonical_measure(alpha, d, density=dens)
                for k in waves:
                    kv = np.asarray(k, dtype=float)
                    f = grid.sample(lambda *x: np.exp(1j * sum(kk * xx for kk, xx in zip(kv, x))))
                    Lf = apply_operator(f, nu)
                    eig = Lf.nodal / f.nodal
                    val = complex(np.mean(eig))
                    target = char_exponent(nu, kv)
                    rel = abs(val - target) / abs(target)
                    spread = float(np.max(np.abs(eig - val)) / abs(target))
                    worst = max(worst, rel, spread)
                    res.rows.append({"d": d, "alpha": alpha, "density": dens.describe(), "k": list(k),
                                     "quadrature": val.real, "quadrature_im": val.imag, "oracle": target.real,
                                     "oracle_im": target.imag, "rel_error": rel, "node_spread": spread})
    res.summary = {"max_rel_error": worst, "tolerance": tol, "seconds": time.perf_counter() - start}
    res.require(worst <= tol, f"max relative error {worst:.2e} exceeds {tol:g}")
    return res


def equivalence_suite(alphas=(0.5, 1.0, 1.5), ps=(1.5, 2.0, 4.0), n: int = 64, size: int = 100, seed: int = 0,
                      variable: bool = False, tol: float = 0.15) -> SuiteResult:
    """Two-sided bound between the nonlocal operator and the fractional Laplacian.

    With ``variable=False`` the ratio is ``|L^nu f|_p / |(-Delta)^{alpha/2} f|_p``.
    With ``variable=True`` the kernel ``(1 + sin(x)/4)(1 + (|y|^0.6 ^ 1)/4)``
    is used and the ratio is ``(|L^{a nu} f|_p + |f|_p) / |f|_{H^{alpha,p}}``.
    Each ensemble is evaluated on ``n`` and ``2n`` points; the extreme ratios
    ``c, C`` must move by at most ``tol``.
    """
    res = SuiteResult("equivalence-variable" if variable else "equivalence-constant")
    start = time.perf_counter()
    ens = trig_ensemble(1, size, seed)
    coeff = SeparableKernel.product(0.25, 0.25, 0.6) if variable else None
    consts = {}
    for alpha in alphas:
        nu = canonical_measure(alpha, 1, density=RadialPowerDensity(0.5))
        bounds = {}
        for npts in (n, 2 * n):
            grid = TorusGrid(1, npts)
            funcs = [trig_polynomial(grid, m, c) for m, c in ens]
            for p in ps:
                ratios = []
                for i, f in enumerate(funcs):
                    Lf = apply_operator(f, nu, coeff, check=False)
                    if variable:
                        r = (lp_norm(Lf, p) + lp_norm(f, p)) / bessel_norm(f, alpha, p)
                    else:
                        r = lp_norm(Lf, p) / lp_norm(fractional_laplacian(f, alpha), p)
                    ratios.append(r)
                    res.rows.append({"alpha": alpha, "p": p, "n": npts, "member": i, "ratio": r})
                bounds[(npts, p)] = (min(ratios), max(ratios))
        for p in ps:
            (c1, C1), (c2, C2) = bounds[(n, p)], bounds[(2 * n, p)]
            change = max(_rel_change(c1, c2), _rel_change(C1, C2))
            consts[f"alpha={alpha},p={p}"] = {"c": c1, "C": C1, "c_fine": c2, "C_fine": C2, "change": change}
            res.require(c1 > 0 and np.isfinite(C1), f"degenerate bounds at alpha={alpha}, p={p}")
            res.require(change <= tol, f"constants moved {change:.3f} under grid doubling at alpha={alpha}, p={p}")
    res.summary = {"constants": consts, "c_lower": min(v["c"] for v in consts.values()),
                   "C_upper": max(v["C"] for v in consts.values()), "tolerance": tol,
                   "seconds": time.perf_counter() - start}
    return res


def dini_remainder_ensemble(size: int, seed: int, kmax: float = 96.0) -> list:
    """Narrow-band polynomials whose centre frequency is log-uniform in ``[1, kmax]``."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(size):
        K = float(np.exp(rng.uniform(0.0, np.log(kmax))))
        lo, hi = max(1, int(round(0.8 * K))), max(1, int(round(1.25 * K)))
        modes = np.arange(lo, hi + 1)[:, None]
        coeffs = rng.standard_normal(len(modes)) + 1j * rng.standard_normal(len(modes))
        out.append((modes, coeffs))
    return out


def dini_remainder_suite(alpha: float = 1.5, p: float = 2.0, gamma: float = 0.5, eps_list=None, size: int = 50,
                  n: int = 256, seed: int = 0, tol: float = 0.2, dini_tol: float = 0.05) -> SuiteResult:
    """Dini remainder bound for the kernel ``1 + |y|^gamma ^ 1``.

    Passes when the ensemble maximum of the ratio stays within ``+-tol`` of the
    midpoint of its range as ``eps`` sweeps, and the sampled Dini integral
    matches ``eps^gamma / gamma`` within ``dini_tol``.
    """
    eps_list = [2.0 ** -j for j in range(1, 6)] if eps_list is None else list(eps_list)
    res = SuiteResult("dini-remainder")
    start = time.perf_counter()
    grid = TorusGrid(1, n)
    nu = canonical_measure(alpha, 1)
    coeff = SeparableKernel(1.0, 0.0, 1.0, 0.0, gamma)
    dini = estimate_dini(coeff, grid)
    funcs = [trig_polynomial(grid, m, c) for m, c in dini_remainder_ensemble(size, seed)]
    maxima, dini_err = {}, {}
    for eps in eps_list:
        exact = eps ** gamma / gamma
        sampled = dini.integral(eps, 0)
        dini_err[eps] = abs(sampled / exact - 1)
        res.require(dini_err[eps] <= dini_tol, f"Dini integral off by {dini_err[eps]:.3f} at eps={eps:g}")
        best = 0.0
        for i, f in enumerate(funcs):
            lhs, ratio = dini_remainder_check(f, nu, coeff, 0.0, eps, p, dini=dini)
            best = max(best, ratio)
            res.rows.append({"eps": eps, "member": i, "lhs": lhs, "ratio": ratio, "dini": sampled,
                             "dini_exact": exact})
        maxima[eps] = best
    vals = np.array(list(maxima.values()))
    spread = float((vals.max() - vals.min()) / (vals.max() + vals.min()))
    res.require(np.all(np.isfinite(vals)), "infinite ratio")
    res.require(spread <= tol, f"ensemble maximum varies by +-{spread:.3f} across eps")
    res.summary = {"max_ratio_by_eps": {f"{e:g}": v for e, v in maxima.items()}, "spread": spread,
                   "dini_rel_error": {f"{e:g}": v for e, v in dini_err.items()}, "tolerance": tol,
                   "seconds": time.perf_counter() - start}
    return res


# -- norms -------------------------------------------------------------------

def norms_suite(ps=(1.5, 2.0, 4.0), n: int = 64, size: int = 100, seed: int = 0, beta: float = 0.5,
                gamma: float = 1.5, grid_tol: float = 0.1, p_tol: float = 1.5) -> SuiteResult:
    """Interpolation and translation inequalities over plane waves and random polynomials.

    * Plane-wave interpolation ratios equal 1 to rounding.
    * Ensemble maxima of the interpolation ratio move by at most ``grid_tol``
      when the grid doubles.
    * Translation-bound maxima differ across ``p`` by a factor of at most ``p_tol``.
    """
    if size <= 0:
        raise ArgumentError("ensemble size must be positive")
    res = SuiteResult("norms")
    start = time.perf_counter()
    grid = TorusGrid(1, n)
    plane_dev = 0.0
    for p in ps:
        for k in range(1, 9):
            f = grid.sample(lambda x: np.sin(k * x))
            _, r = check_interpolation(f, beta, gamma, p)
            plane_dev = max(plane_dev, abs(r - 1))
            res.rows.append({"check": "interpolation-plane", "p": p, "k": k, "ratio": r})
    res.require(plane_dev <= 1e-12, f"plane-wave interpolation ratio deviates from 1 by {plane_dev:.2e}")
    ens = trig_ensemble(1, size, seed)
    interp = {}
    for p in ps:
        maxima = []
        for npts in (n, 2 * n):
            g = TorusGrid(1, npts)
            vals = [check_interpolation(trig_polynomial(g, m, c), beta, gamma, p)[1] for m, c in ens]
            maxima.append(max(vals))
            res.rows.extend({"check": "interpolation-random", "p": p, "n": npts, "member": i, "ratio": v}
                            for i, v in enumerate(vals))
        change = _rel_change(*maxima)
        interp[p] = {"C": maxima[0], "C_fine": maxima[1], "change": change}
        res.require(change <= grid_tol, f"interpolation constant moved {change:.3f} at p={p}")
    trans = {}
    shifts = [2.0 ** -j for j in range(0, 7)]
    betas = (0.25, 0.5, 0.75)
    for p in ps:
        plane, rand = 0.0, 0.0
        for b in betas:
            for y in shifts:
                for k in range(1, 9):
                    r = check_translation_bound(grid.sample(lambda x: np.sin(k * x)), y, b, p)
                    plane = max(plane, r)
                    res.rows.append({"check": "translation-plane", "p": p, "beta": b, "y": y, "k": k, "ratio": r})
                for i, (m, c) in enumerate(ens[:20]):
                    r = check_translation_bound(trig_polynomial(grid, m, c), y, b, p)
                    rand = max(rand, r)
        trans[p] = {"plane": plane, "random": rand}
    for key in ("plane", "random"):
        vals = [trans[p][key] for p in ps]
        res.require(all(np.isfinite(vals)), f"unbounded translation constant ({key})")
        ratio = max(vals) / min(vals)
        res.require(ratio <= p_tol, f"translation constant ({key}) varies by factor {ratio:.3f} across p")
    res.summary = {"plane_interpolation_deviation": plane_dev, "interpolation": interp, "translation": trans,
                   "seconds": time.perf_counter() - start}
    return res


# -- semigroup ---------------------------------------------------------------

def semigroup_suite(alphas=(0.5, 1.0, 1.5), n_paths: int = 10_000, seed: int = 0, r_cut: float = 0.05,
                    n: int = 64) -> SuiteResult:
    """Monte Carlo checks of the Levy semigroup against exact multipliers (3 standard errors)."""
    res = SuiteResult("semigroup")
    start = time.perf_counter()
    grid = TorusGrid(1, n)
    phi = grid.sample(lambda x: np.sin(x) + 0.5 * np.cos(2 * x + 1.0))
    worst = {}
    for alpha in alphas:
        nu = canonical_measure(alpha, 1, density=RadialPowerDensity(0.5))
        drift = 0.2 if alpha >= 1 else 0.0
        cfg = SamplerConfig(r_cut=r_cut, n_paths=n_paths, seed=seed, vartheta=drift)
        for rec in empirical_char_function(nu, cfg, [(1,), (2,), (3,)]):
            z = abs(complex(rec["emp_re"] - rec["target_re"], rec["emp_im"] - rec["target_im"])) / rec["se"]
            res.rows.append({"check": "char-function", "alpha": alpha, "k": rec["k"], "z": z, **rec})
            worst[("char", alpha)] = max(worst.get(("char", alpha), 0.0), z)
        mc, se = propagate_mc(phi, nu, cfg, 0.2, 0.7)
        exact = propagate_spectral(phi, nu, 0.2, 0.7, vartheta_const=drift)
        z = float(np.max(np.abs(mc.nodal - exact.nodal)) / se)
        res.rows.append({"check": "propagate", "alpha": alpha, "z": z, "max_se": se})
        worst[("propagate", alpha)] = z
        cfg_t = SamplerConfig(r_cut=r_cut, n_paths=n_paths, seed=seed + 1,
                              lam=lambda t: 1.5 + 0.5 * np.sin(3 * t), vartheta=drift)
        rep = check_factorization(phi, nu, cfg_t, 0.2, 0.7)
        res.rows.append({"check": "factorization", "alpha": alpha, "z": rep.max_z,
                         "discrepancy": rep.discrepancy, "combined_se": rep.combined_se})
        worst[("factorization", alpha)] = rep.max_z
    for (kind, alpha), z in worst.items():
        res.require(z <= 3.0, f"{kind} at alpha={alpha} is {z:.2f} standard errors off")
    res.summary = {"max_z": {f"{k}@{a}": v for (k, a), v in worst.items()}, "n_paths": n_paths,
                   "seconds": time.perf_counter() - start}
    return res


def maximal_regularity_constant(nu: BoundedLevyMeasure, forcing, T: float, n_steps: int, p: float) -> float:
    """``(int |L^nu u|_p^p dt / int |f|_p^p dt)^{1/p}`` for ``u' = L^nu u + f``, ``u(0) = 0``."""
    grid = forcing.grid
    prob = Problem(nu, grid.zeros(), forcing=forcing, T=T, p=p, check=False)
    sol = solve_duhamel(prob, n_steps)
    psi = levy_symbol(grid, nu, prob.scheme)
    num = [lp_norm(u.with_multiplier(psi), p) ** p for u in sol.states]
    den = [lp_norm(forcing(t), p) ** p for t in sol.times]
    return float((np.trapezoid(num, sol.times) / np.trapezoid(den, sol.times)) ** (1 / p))


def maximal_regularity_suite(alphas=(0.5, 1.0, 1.5), ps=(1.5, 2.0, 4.0), size: int = 50, n: int = 64,
                             steps: int = 16, seed: int = 0, tol: float = 0.2) -> SuiteResult:
    """Empirical maximal-regularity constant over random space-time forcings, at ``steps`` and ``2 steps``."""
    if size <= 0:
        raise ArgumentError("ensemble size must be positive")
    res = SuiteResult("maximal-regularity")
    start = time.perf_counter()
    grid = TorusGrid(1, n)
    rng = np.random.default_rng(seed)
    forcings = [SpaceTimeForcing(grid, rng, max_mode=8, decay=0.5) for _ in range(size)]
    consts = {}
    for alpha in alphas:
        nu = canonical_measure(alpha, 1)
        for p in ps:
            best = []
            for m in (steps, 2 * steps):
                vals = [maximal_regularity_constant(nu, f, 1.0, m, p) for f in forcings]
                best.append(max(vals))
                res.rows.extend({"alpha": alpha, "p": p, "steps": m, "member": i, "constant": v}
                                for i, v in enumerate(vals))
            change = _rel_change(*best)
            consts[f"alpha={alpha},p={p}"] = {"C": best[0], "C_fine": best[1], "change": change}
            res.require(np.isfinite(best[0]), f"infinite constant at alpha={alpha}, p={p}")
            res.require(change <= tol, f"constant moved {change:.3f} under time refinement at alpha={alpha}, p={p}")
    res.summary = {"constants": consts, "tolerance": tol, "seconds": time.perf_counter() - start}
    return res


# -- regularity --------------------------------------------------------------

def apriori_suite(size: int = 20, seed: int = 0, n: int = 64, steps: int = 64, eps_list=None,
                  sweep=((32, 64, 128), (32, 64, 128)), tol: float = 0.25, bound: float = 100.0) -> SuiteResult:
    """Empirical a priori constants (derivative levels 0 and 1) for random variable-coefficient problems.

    * Every ratio is finite and below ``bound``.
    * Mollifying the coefficients at ``eps`` in ``2^-2 .. 2^-6`` moves each ratio
      by at most ``tol``.
    * For the first problem, the ratios on the ``(n, steps)`` sweep stay within
      ``tol`` of the finest value.
    """
    eps_list = [2.0 ** -j for j in range(2, 7)] if eps_list is None else list(eps_list)
    if size <= 0:
        raise ArgumentError("ensemble size must be positive")
    res = SuiteResult("a-priori")
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    grid = TorusGrid(1, n)
    combos = [(a, p) for a in (0.5, 1.0, 1.5) for p in (1.5, 2.0, 4.0)]
    worst = {0: 0.0, 1: 0.0}
    worst_eps = 0.0
    embed = []
    first = None
    for i in range(size):
        alpha, p = combos[i % len(combos)]
        prob = random_problem(rng, grid, alpha, p)
        first = first or prob
        sol = solve_imex(prob, steps)
        base = {k: apriori_report(sol, prob, k).ratio for k in (0, 1)}
        embed.append(check_embedding(sol, alpha, p))
        for k in (0, 1):
            worst[k] = max(worst[k], base[k])
            res.rows.append({"problem": i, "alpha": alpha, "p": p, "k": k, "eps": 0.0, "ratio": base[k],
                             "residual": sol.residual})
        for eps in eps_list:
            a_eps, b_eps = mollify_coefficients(prob.coeff, prob.drift, eps)
            mp = _regrid(prob, grid, a_eps, b_eps)
            msol = solve_imex(mp, steps)
            for k in (0, 1):
                r = apriori_report(msol, mp, k).ratio
                dev = _rel_change(base[k], r)
                worst_eps = max(worst_eps, dev)
                worst[k] = max(worst[k], r)
                res.rows.append({"problem": i, "alpha": alpha, "p": p, "k": k, "eps": eps, "ratio": r,
                                 "residual": msol.residual})
    res.require(all(np.isfinite(v) and v <= bound for v in worst.values()), f"ratios exceed {bound}: {worst}")
    res.require(worst_eps <= tol, f"mollification moved a ratio by {worst_eps:.3f}")
    sweep_vals = {}
    ns, ms = sweep
    for npts in ns:
        g = TorusGrid(1, npts)
        for m in ms:
            pr = _regrid(first, g)
            s = solve_imex(pr, m)
            for k in (0, 1):
                sweep_vals[(npts, m, k)] = apriori_report(s, pr, k).ratio
    sweep_dev = 0.0
    for k in (0, 1):
        ref = sweep_vals[(ns[-1], ms[-1], k)]
        for (npts, m, kk), v in sweep_vals.items():
            if kk == k:
                sweep_dev = max(sweep_dev, _rel_change(ref, v))
                res.rows.append({"problem": "sweep", "n": npts, "steps": m, "k": k, "ratio": v})
    res.require(sweep_dev <= tol, f"refinement sweep moved a ratio by {sweep_dev:.3f}")
    embed_spread = max(embed) / min(embed)
    res.summary = {"max_ratio": worst, "max_mollification_change": worst_eps, "sweep_change": sweep_dev,
                   "embedding_constant": {"min": min(embed), "max": max(embed)}, "embedding_spread": embed_spread,
                   "tolerance": tol, "seconds": time.perf_counter() - start}
    return res


def continuity_test_problems(grid: TorusGrid, seed: int = 0, random_count: int = 3) -> list:
    """``(label, problem, frozen)`` triples used by :func:`continuity_suite`."""
    nu15 = canonical_measure(1.5, 1)
    phi = grid.sample(np.sin)
    probs = [("additive-1.5", Problem(nu15, phi, SeparableKernel.additive(0.25, 0.5, 0.6), CosineDrift(0.25),
                                      T=1.0, p=2.0), False)]
    rng = np.random.default_rng(seed)
    for i, alpha in enumerate((0.5, 1.0, 1.5)[:random_count]):
        probs.append((f"random-{alpha}", random_problem(rng, grid, alpha, 2.0), False))
    for alpha in (0.5, 1.0, 1.5):
        nu = canonical_measure(alpha, 1)
        drift = ConstantDrift([0.2]) if alpha >= 1 else ZeroDrift()
        probs.append((f"frozen-{alpha}", Problem(nu, phi, ConstantKernel(1.0), ZeroDrift(), T=1.0, p=2.0), True))
        probs.append((f"constant-scaled-{alpha}", Problem(nu, phi, ConstantKernel(1.3), drift, T=1.0, p=2.0), False))
    return probs


def continuity_suite(n: int = 64, steps: int = 32, tol: float = 1e-9, seed: int = 0) -> SuiteResult:
    """Contraction factors, agreement with the IMEX route and frozen-case iteration counts."""
    res = SuiteResult("continuity")
    start = time.perf_counter()
    grid = TorusGrid(1, n)
    for label, prob, frozen in continuity_test_problems(grid, seed):
        out = solve_continuity(prob, steps, tol)
        direct = solve_imex(prob, steps)
        gap = max(lp_norm(a - b, prob.p) for a, b in zip(out.solution.states, direct.states))
        allowed = 2 * max(out.solution.residual, direct.residual)
        max_factor = max(out.contraction_estimates, default=0.0)
        lam_steps = len(out.schedule) - 1
        res.rows.append({"problem": label, "iterations": out.iterations, "lambda_steps": lam_steps,
                         "max_contraction": max_factor, "gap": gap, "allowed": allowed,
                         "residual": out.solution.residual})
        res.require(max_factor < 1, f"{label}: contraction factor {max_factor:.3f}")
        res.require(gap <= allowed, f"{label}: continuity and IMEX differ by {gap:.2e} > {allowed:.2e}")
        if frozen:
            res.require(out.iterations == lam_steps, f"{label}: {out.iterations} iterations for {lam_steps} steps")
    res.summary = {"problems": len(res.rows), "seconds": time.perf_counter() - start}
    return res


def nonlinear_suite(n: int = 128, alpha: float = 1.2, slope_tol: float = 0.2) -> SuiteResult:
    """Quadratic potential versus the linear solution (order 1 in time) and energy decay for the wobble."""
    res = SuiteResult("nonlinear")
    start = time.perf_counter()
    grid = TorusGrid(1, n)
    theta0 = grid.sample(np.sin)
    quad = quadratic_potential()
    exact = None
    errors = []
    for m in (50, 100, 200):
        sol = solve_nonlinear(theta0, quad, alpha, m, T=1.0)
        if exact is None:
            from .nonlinear import NonlinearFlow
            nu = NonlinearFlow(grid, quad, alpha).nu
            exact = solve_duhamel(Problem(nu, theta0, T=1.0, check=False), 16).final
        errors.append(lp_norm(sol.final - exact, 2.0))
        res.rows.append({"check": "quadratic", "steps": m, "error": errors[-1]})
    slopes = [float(np.log2(errors[i] / errors[i + 1])) for i in range(len(errors) - 1)]
    res.require(all(abs(s - 1) <= slope_tol for s in slopes), f"time-convergence slopes {slopes}")
    sol = solve_nonlinear(theta0, wobble_potential(), alpha, 200, T=1.0)
    energy = np.asarray(sol.meta["energy"])
    rise = float(np.max(np.diff(energy)))
    for j, e in enumerate(energy):
        res.rows.append({"check": "wobble-energy", "step": j, "energy": float(e)})
    res.require(rise <= 0.0, f"energy rose by {rise:.3e} in one step")
    const = solve_nonlinear(grid.constant(0.7), wobble_potential(), alpha, 10, T=0.1)
    drift = float(np.max(np.abs(const.final.nodal - 0.7)))
    res.require(drift <= 1e-12, "constant state moved")
    res.summary = {"quadratic_errors": errors, "slopes": slopes, "max_energy_increase": rise,
                   "energy_start": float(energy[0]), "energy_end": float(energy[-1]),
                   "seconds": time.perf_counter() - start}
    return res


SUITES = {
    "norms": [norms_suite],
    "operator": [operator_symbol_suite, equivalence_suite, lambda **kw: equivalence_suite(variable=True, **kw),
                 dini_remainder_suite],
    "semigroup": [semigroup_suite, maximal_regularity_suite],
    "regularity": [apriori_suite, continuity_suite, nonlinear_suite],
}
