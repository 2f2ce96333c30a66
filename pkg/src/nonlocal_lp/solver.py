"""The linear Cauchy problem ``du/dt = L^{a(t) nu} u + b.grad u + f``, ``u(0) = phi``.

Three routes are provided:

* :func:`solve_duhamel` applies the exact Fourier multipliers of the frozen
  problem (``a`` constant, ``b`` constant in ``x``).
* :func:`solve_imex` treats ``a_ref L^nu`` implicitly (a diagonal division in
  Fourier space) and the rest explicitly, with ``a_ref`` the spatial median
  of ``a(t, ., 0)``.
* :func:`solve_continuity` connects ``L^nu`` to the target operator through
  ``U_lambda = d/dt - lambda (L^{a nu} + b.grad) - (1 - lambda) L^nu`` and
  advances ``lambda`` by Picard iteration of ``U_{lambda0} w = f + (U_{lambda0} - U_lambda) u``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .coefficients import (ConstantDrift, ConstantKernel, Drift, KernelCoefficient, ZeroDrift,
                           check_kernel_bounds, check_kernel_cancellation, mollify_coefficients)
from .errors import (ArgumentError, HypothesisViolation, InconsistencyError, NonContractionError,
                     StabilityError, WrongRouteError)
from .grid import GridFunction, TorusGrid, derivative_multiplier, gradient
from .measure import BoundedLevyMeasure, check_alpha1_cancellation, check_nondegenerate
from .norms import lp_norm, signed_order_norm, slobodeckij_norm, spacetime_norms
from .operator import QuadratureScheme, apply_operator, estimate_dini, levy_symbol
from .quadrature import gauss_legendre

__all__ = ["Problem", "Solution", "AprioriReport", "Check", "validate_problem", "solve_duhamel", "solve_imex",
           "solve_continuity", "apriori_report", "mollify_coefficients", "full_rhs", "residual"]

P_EXCLUSION_MARGIN = 1e-3


# -- problem -----------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    """One hypothesis check with a signed margin (positive means satisfied)."""

    name: str
    passed: bool
    margin: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "margin": float(self.margin), "detail": self.detail}


def _zero_forcing(grid: TorusGrid):
    zero = grid.zeros()
    return lambda t: zero


@dataclass
class Problem:
    """Data of the Cauchy problem.

    ``drift`` is the raw ``b``; the equation uses ``1_{alpha >= 1} b``.  With
    ``check=True`` every hypothesis of :func:`validate_problem` must hold.
    """

    nu: BoundedLevyMeasure
    initial: GridFunction
    coeff: KernelCoefficient = field(default_factory=lambda: ConstantKernel(1.0))
    drift: Drift = field(default_factory=ZeroDrift)
    forcing: object = None
    T: float = 1.0
    p: float = 2.0
    scheme: QuadratureScheme | None = None
    check: bool = True

    def __post_init__(self):
        if self.forcing is None:
            self.forcing = _zero_forcing(self.grid)
        if self.scheme is None:
            self.scheme = QuadratureScheme.for_grid(self.grid)
        if self.check:
            failed = [c for c in validate_problem(self) if not c.passed]
            if failed:
                names = ", ".join(c.name for c in failed)
                raise HypothesisViolation(f"problem fails: {names}")

    @property
    def alpha(self) -> float:
        return self.nu.alpha

    @property
    def grid(self) -> TorusGrid:
        return self.initial.grid

    @property
    def effective_drift(self) -> Drift:
        return self.drift if self.alpha >= 1 else ZeroDrift()

    def force(self, t: float) -> GridFunction:
        return self.forcing(t)

    @property
    def is_frozen(self) -> bool:
        """``a`` constant and ``b`` constant in ``x``: the exact multiplier route applies."""
        return isinstance(self.coeff, ConstantKernel) and self.effective_drift.x_constant

    def with_coefficients(self, coeff: KernelCoefficient, drift: Drift) -> "Problem":
        return Problem(self.nu, self.initial, coeff, drift, self.forcing, self.T, self.p, self.scheme, False)


def validate_problem(prob: Problem, dini_radii=None) -> list[Check]:
    """Run every structural hypothesis and return the individual checks."""
    nu, alpha, grid = prob.nu, prob.alpha, prob.grid
    checks = []
    ok, mval = check_nondegenerate(nu.sigma, alpha, 256 if nu.d == 2 else 64)
    checks.append(Check("nondegeneracy", ok, mval - 1e-10, "min over directions of int |theta0.theta|^alpha"))
    checks.append(Check("measure_bounds", nu.m_lo > 0 and nu.m_hi >= nu.m_lo, nu.m_lo, "0 < m_lo <= m_hi"))
    if alpha == 1:
        worst = max(float(np.linalg.norm(check_alpha1_cancellation(nu, r, R)))
                    for r, R in ((1e-3, 0.1), (0.1, 1.0), (0.5, 2.0), (1.0, 10.0)))
        checks.append(Check("alpha1_measure_cancellation", worst <= 1e-8, 1e-8 - worst, "|int y nu(dy)| on annuli"))
        kw = check_kernel_cancellation(prob.coeff, nu, grid, times=(0.0, 0.5 * prob.T, prob.T))
        checks.append(Check("alpha1_kernel_cancellation", kw <= 1e-8, 1e-8 - kw, "|int y a nu(dy)| on annuli"))
    kb = check_kernel_bounds(prob.coeff, grid, times=(0.0, 0.5 * prob.T, prob.T))
    # declared bounds met with equality are satisfied; the margin is then the ellipticity constant a0
    bound_gap = min(kb["a_lower_margin"], kb["a_upper_margin"])
    margin = min(kb["a0"], kb["positivity_margin"]) if kb["ok"] else min(bound_gap, kb["a0"], kb["positivity_margin"])
    checks.append(Check("kernel_bounds", kb["ok"], margin, "a0 <= a(t,x,0) <= a1 and a >= 0"))
    dini = estimate_dini(prob.coeff, grid, dini_radii)
    total = dini.dini_integral0 + dini.dini_integral1
    checks.append(Check("kernel_dini", bool(np.isfinite(total)), 1.0 / (1.0 + total) if np.isfinite(total) else -np.inf,
                        "finite Dini integrals of omega0 and omega1"))
    b = prob.effective_drift
    if alpha == 1:
        mod = b.modulus(1e-8)
        checks.append(Check("drift_modulus", mod < 1e-6, 1e-6 - mod, "omega_b(r) -> 0"))
    elif alpha > 1:
        finite = bool(np.isfinite(b.bound))
        checks.append(Check("drift_bounded", finite, 1.0 / (1.0 + b.bound) if finite else -np.inf, "sup |b| finite"))
    if 1 < alpha < 2:
        crit = alpha / (alpha - 1)
        gap = abs(prob.p - crit)
        checks.append(Check("p_exclusion", gap >= P_EXCLUSION_MARGIN, gap - P_EXCLUSION_MARGIN,
                            f"p must avoid alpha/(alpha-1) = {crit:g}"))
    checks.append(Check("p_range", prob.p > 1, prob.p - 1, "p > 1"))
    horizon_ok = 0 < prob.T <= 1
    checks.append(Check("horizon", horizon_ok, prob.T if horizon_ok else min(prob.T, 1 - prob.T), "0 < T <= 1"))
    return checks


# -- solution ----------------------------------------------------------------

@dataclass
class Solution:
    times: np.ndarray
    states: list
    rhs_history: list
    route: str
    residual: float = np.nan
    meta: dict = field(default_factory=dict)

    @property
    def time_nodes(self) -> np.ndarray:
        return self.times

    @property
    def final(self) -> GridFunction:
        return self.states[-1]

    @property
    def grid(self) -> TorusGrid:
        return self.states[0].grid

    def to_csv(self, digest: str = "") -> str:
        """Rows ``t, x (or x1, x2), u`` with a digest comment line."""
        grid = self.grid
        buf = io.StringIO()
        if digest:
            buf.write(f"# config_digest={digest}\n")
        cols = ["t"] + (["x"] if grid.d == 1 else ["x1", "x2"]) + ["u"]
        buf.write(",".join(cols) + "\n")
        pts = grid.points
        for t, u in zip(self.times, self.states):
            vals = np.real(u.nodal).ravel()
            for x, v in zip(pts, vals):
                buf.write(",".join([repr(float(t))] + [repr(float(c)) for c in x] + [repr(float(v))]) + "\n")
        return buf.getvalue()

    def manifest(self) -> dict:
        return {"route": self.route, "residual": float(self.residual), "n_steps": len(self.times) - 1,
                "T": float(self.times[-1]), **{k: v for k, v in self.meta.items() if _jsonable(v)}}


def _jsonable(v) -> bool:
    return isinstance(v, (int, float, str, bool, list, dict)) or v is None


# -- shared pieces -----------------------------------------------------------

def _drift_term(u: GridFunction, drift: Drift, t: float) -> np.ndarray:
    if drift.is_zero:
        return np.zeros(u.grid.shape)
    b = drift.on_grid(t, u.grid)
    out = np.zeros(u.grid.size)
    for j, g in enumerate(gradient(u)):
        out += b[:, j] * np.real(g.nodal).ravel()
    return out.reshape(u.grid.shape)


def _operator(u: GridFunction, prob: Problem, t: float, coeff: KernelCoefficient | None = None) -> GridFunction:
    return apply_operator(u, prob.nu, coeff or prob.coeff, t, prob.scheme, check=False)


def full_rhs(prob: Problem, t: float, u: GridFunction) -> GridFunction:
    """``L^{a(t) nu} u + b^(alpha)(t).grad u + f(t)``."""
    Lu = _operator(u, prob, t)
    return GridFunction.from_nodal(u.grid, Lu.nodal + _drift_term(u, prob.effective_drift, t) + prob.force(t).nodal)


def residual(prob: Problem, sol: Solution) -> float:
    """``max_m |(u_{m+1} - u_m)/dt - (R_m + R_{m+1})/2|_p`` with ``R`` the stored right-hand sides."""
    worst = 0.0
    for m in range(len(sol.times) - 1):
        dt = sol.times[m + 1] - sol.times[m]
        diff = (sol.states[m + 1].nodal - sol.states[m].nodal) / dt
        mid = 0.5 * (sol.rhs_history[m].nodal + sol.rhs_history[m + 1].nodal)
        worst = max(worst, lp_norm(GridFunction.from_nodal(sol.grid, diff - mid), prob.p))
    return worst


def _time_grid(T: float, n_steps: int) -> np.ndarray:
    if n_steps < 1:
        raise ArgumentError("need at least one time step")
    return np.linspace(0.0, T, n_steps + 1)


# -- Duhamel -----------------------------------------------------------------

def _frozen_symbol(prob: Problem) -> np.ndarray:
    grid = prob.grid
    lam = prob.coeff.c
    psi = levy_symbol(grid, prob.nu, prob.scheme)
    drift = prob.effective_drift
    sym = lam * psi
    if not drift.is_zero:
        v = np.asarray(drift(0.0, np.zeros((1, grid.d))), dtype=float).reshape(grid.d)
        for j in range(grid.d):
            sym = sym + v[j] * derivative_multiplier(grid, j)
    return sym


def solve_duhamel(prob: Problem, n_steps: int = 16, gl_order: int = 8) -> Solution:
    """Exact propagation ``u(t) = T_t phi + int_0^t T_{t-s} f(s) ds`` for frozen coefficients.

    The time integral uses ``gl_order`` Gauss-Legendre nodes per step.

    Raises
    ------
    WrongRouteError
        ``a`` is not constant or ``b`` varies in ``x``.
    """
    if not prob.is_frozen:
        raise WrongRouteError("the Duhamel route needs constant a and x-independent drift")
    times = _time_grid(prob.T, n_steps)
    sym = _frozen_symbol(prob)
    s, w = gauss_legendre(gl_order)
    grid = prob.grid
    u = prob.initial
    states, rhs = [u], []
    for m in range(n_steps):
        t0, t1 = times[m], times[m + 1]
        dt = t1 - t0
        spec = u.spectral * np.exp(dt * sym)
        for sn, wn in zip(s, w):
            tau = t0 + 0.5 * dt * (sn + 1)
            spec = spec + 0.5 * dt * wn * np.exp((t1 - tau) * sym) * prob.force(tau).spectral
        u_new = GridFunction.from_spectral(grid, spec, real=u.is_real)
        rhs.append(_frozen_rhs(prob, sym, t0, u))
        states.append(u_new)
        u = u_new
    rhs.append(_frozen_rhs(prob, sym, times[-1], u))
    sol = Solution(times, states, rhs, "duhamel")
    sol.residual = residual(prob, sol)
    return sol


def _frozen_rhs(prob, sym, t, u) -> GridFunction:
    return GridFunction.from_spectral(u.grid, sym * u.spectral + prob.force(t).spectral, real=u.is_real)


# -- IMEX --------------------------------------------------------------------

def reference_coefficient(prob: Problem, t: float) -> float:
    """Spatial median of ``a(t, ., 0)``."""
    return float(np.median(prob.coeff.at_zero_on_grid(t, prob.grid)))


def _imex_march(prob: Problem, n_steps: int, explicit, initial_guess=None):
    """Generic IMEX Euler: ``(1 - dt a_ref psi) u_{m+1} = u_m + dt (E_m(u_m) - a_ref L^nu u_m)``.

    ``explicit(m, t, u)`` returns ``(full_rhs_value, source)`` where ``full_rhs_value``
    is the complete right-hand side at ``(t, u)``.
    """
    if n_steps < 1:
        raise ArgumentError("need at least one time step")
    times = _time_grid(prob.T, n_steps)
    grid = prob.grid
    psi = levy_symbol(grid, prob.nu, prob.scheme)
    u = prob.initial
    states, rhs = [u], []
    for m in range(n_steps):
        t0 = times[m]
        dt = times[m + 1] - t0
        a_ref = reference_coefficient(prob, t0)
        F = explicit(m, t0, u)
        spec = (u.spectral + dt * (F.spectral - a_ref * psi * u.spectral)) / (1.0 - dt * a_ref * psi)
        u_new = GridFunction.from_spectral(grid, spec, real=u.is_real)
        grow_ref = lp_norm(u, prob.p) + dt * lp_norm(F, prob.p)
        if lp_norm(u_new, prob.p) > 10 * grow_ref + 1e-300:
            raise StabilityError(f"explicit part unstable at step {m}; increase the number of steps")
        rhs.append(F)
        states.append(u_new)
        u = u_new
    rhs.append(explicit(n_steps, times[-1], u))
    return times, states, rhs


def solve_imex(prob: Problem, n_steps: int = 64) -> Solution:
    """First-order IMEX Euler with the frozen operator ``a_ref L^nu`` treated implicitly."""
    if n_steps < 16:
        raise ArgumentError("the IMEX route needs at least 16 steps")
    times, states, rhs = _imex_march(prob, n_steps, lambda m, t, u: full_rhs(prob, t, u))
    sol = Solution(times, states, rhs, "imex")
    sol.residual = residual(prob, sol)
    return sol


# -- continuity method -------------------------------------------------------

def _blend_rhs(prob: Problem, lam: float, t: float, u: GridFunction, psi: np.ndarray) -> np.ndarray:
    """Nodal ``lambda (L^{a nu} + b.grad) u + (1 - lambda) L^nu u``."""
    out = np.zeros(prob.grid.shape)
    if lam != 0:
        out = out + lam * (_operator(u, prob, t).nodal + _drift_term(u, prob.effective_drift, t))
    if lam != 1:
        out = out + (1 - lam) * u.with_multiplier(psi).nodal
    return out


def _perturbation(prob: Problem, t: float, u: GridFunction, psi: np.ndarray) -> np.ndarray:
    """Nodal ``(L^{a nu} + b.grad - L^nu) u``."""
    return _operator(u, prob, t).nodal + _drift_term(u, prob.effective_drift, t) - u.with_multiplier(psi).nodal


def _contraction_norm(prob: Problem, states: list, times: np.ndarray) -> float:
    """``sup_t |v|_p + (int |v|_{H^{alpha,p}}^p dt)^{1/p}``: the metric of the Picard iteration."""
    p = prob.p
    sup = max(lp_norm(s, p) for s in states)
    top = [signed_order_norm(s, prob.alpha, p) for s in states]
    return sup + float(np.trapezoid(np.asarray(top) ** p, times) ** (1 / p))


@dataclass
class ContinuityResult:
    solution: Solution
    iterations: int
    contraction_estimates: list
    schedule: list

    def __iter__(self):
        return iter((self.solution, self.iterations, self.contraction_estimates))


def solve_continuity(prob: Problem, base_steps: int = 64, tol: float = 1e-8, lambda_step: float = 0.5,
                     max_iter: int = 60, min_step: float = 1e-3) -> ContinuityResult:
    """Continuity method from ``L^nu`` (``lambda = 0``) to the target operator (``lambda = 1``).

    Each ``lambda`` step Picard-iterates ``w = Q_lambda u`` until successive
    iterates differ by less than ``tol`` in the contraction metric.  A step
    whose observed contraction factor reaches ``1/2`` is halved and retried.

    Returns
    -------
    ContinuityResult
        Unpacks as ``(solution, iterations, contraction_estimates)``.

    Raises
    ------
    NonContractionError
        The step had to shrink below ``min_step``.
    """
    if tol <= 0:
        raise ArgumentError("tol must be positive")
    grid = prob.grid
    psi = levy_symbol(grid, prob.nu, prob.scheme)

    def solve_base(lam0: float, source):
        def explicit(m, t, u):
            return GridFunction.from_nodal(grid, _blend_rhs(prob, lam0, t, u, psi) + source(m, t).nodal)
        return _imex_march(prob, base_steps, explicit)

    forcing = lambda m, t: prob.force(t)
    times, states, rhs = solve_base(0.0, forcing)
    lam0 = 0.0
    step = min(lambda_step, 1.0)
    total_iter = 0
    factors_all: list = []
    schedule = [0.0]
    while lam0 < 1.0:
        lam = min(1.0, lam0 + step)
        u_states = states
        factors, diffs = [], []
        converged = False
        for _ in range(max_iter):
            pert = [_perturbation(prob, t, u, psi) for t, u in zip(times, u_states)]

            def source(m, t, pert=pert):
                return GridFunction.from_nodal(grid, prob.force(t).nodal + (lam - lam0) * pert[m])

            t_w, w_states, w_rhs = solve_base(lam0, source)
            total_iter += 1
            diff = _contraction_norm(prob, [a - b for a, b in zip(w_states, u_states)], times)
            if diffs and diffs[-1] > 0:
                factors.append(diff / diffs[-1])
            diffs.append(diff)
            u_states = w_states
            scale = max(_contraction_norm(prob, w_states, times), 1e-300)
            if diff <= tol * scale or diff == 0:
                converged = True
                break
            if factors and factors[-1] >= 0.5:
                break
        if converged and all(f < 0.5 for f in factors):
            lam0 = lam
            states, rhs_cur = w_states, w_rhs
            factors_all.extend(factors)
            schedule.append(lam0)
            rhs = rhs_cur
            continue
        step *= 0.5
        if step < min_step:
            raise NonContractionError(f"lambda step fell below {min_step} at lambda = {lam0:.4f}")
    # the stored right-hand sides at lambda = 1 are the true ones (perturbation at the fixed point)
    final_rhs = [full_rhs(prob, t, u) for t, u in zip(times, states)]
    sol = Solution(times, states, final_rhs, "continuity",
                   meta={"lambda_schedule": schedule, "iterations": total_iter})
    sol.residual = residual(prob, sol)
    return ContinuityResult(sol, total_iter, factors_all, schedule)


# -- a priori report ---------------------------------------------------------

@dataclass
class AprioriReport:
    x_norm: float
    phi_norm: float
    f_norm: float
    ratio: float
    k: int = 0
    residual: float = np.nan
    phi_norm_kind: str = ""

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def initial_data_norm(phi: GridFunction, alpha: float, p: float) -> tuple[float, str]:
    """``W^{alpha - alpha/p, p}`` norm: double-integral form in ``d = 1``, Bessel proxy in ``d = 2``."""
    s = alpha - alpha / p
    if phi.grid.d == 1:
        return slobodeckij_norm(phi, s, p), "slobodeckij"
    return signed_order_norm(phi, s, p), "bessel-proxy"


def _time_lp(times, fields, p) -> float:
    vals = np.array([lp_norm(f, p) for f in fields])
    return float(np.trapezoid(vals ** p, times) ** (1 / p))


@dataclass
class _Stored:
    times: np.ndarray
    states: list
    rhs_history: list


def first_derivative_source(prob: Problem, sol: Solution, axis: int) -> list:
    """Right-hand side of the differentiated system at each time node.

    ``g = d_axis f + L^{(d_axis a) nu} u + (d_axis b).grad u``.
    """
    grid = prob.grid
    da = prob.coeff.dx(axis)
    db = prob.effective_drift.dx(axis)
    dm = derivative_multiplier(grid, axis)
    out = []
    for t, u in zip(sol.times, sol.states):
        val = prob.force(t).with_multiplier(dm).nodal
        val = val + apply_operator(u, prob.nu, da, t, prob.scheme, check=False).nodal
        val = val + _drift_term(u, db, t)
        out.append(GridFunction.from_nodal(grid, val))
    return out


def apriori_report(sol: Solution, prob: Problem, k: int = 0, lower_exponent: str = "alpha") -> AprioriReport:
    """Empirical constant of the a priori estimate at derivative level ``k`` in ``{0, 1}``.

    ``ratio = x_norm / (phi_norm + f_norm)``.  For ``k = 1`` the norms act on
    ``grad u`` with the differentiated source; vector fields are measured by
    the sum of their component norms.

    Raises
    ------
    InconsistencyError
        Zero data but a nonzero solution.
    """
    alpha, p = prob.alpha, prob.p
    if k == 0:
        x_norm = spacetime_norms(sol, alpha, p, lower_exponent=lower_exponent).x_norm
        phi_norm, kind = initial_data_norm(sol.states[0], alpha, p)
        f_norm = _time_lp(sol.times, [prob.force(t) for t in sol.times], p)
    elif k == 1:
        x_norm = phi_norm = f_norm = 0.0
        kind = ""
        for axis in range(prob.grid.d):
            dm = derivative_multiplier(prob.grid, axis)
            w = _Stored(sol.times, [s.with_multiplier(dm) for s in sol.states],
                        [r.with_multiplier(dm) for r in sol.rhs_history])
            x_norm += spacetime_norms(w, alpha, p, lower_exponent=lower_exponent).x_norm
            pn, kind = initial_data_norm(w.states[0], alpha, p)
            phi_norm += pn
            f_norm += _time_lp(sol.times, first_derivative_source(prob, sol, axis), p)
    else:
        raise ArgumentError("only k = 0 and k = 1 are implemented")
    data = phi_norm + f_norm
    if data == 0.0:
        if x_norm > 1e-12:
            raise InconsistencyError("zero data produced a nonzero solution")
        ratio = 0.0
    else:
        ratio = x_norm / data
    return AprioriReport(x_norm, phi_norm, f_norm, ratio, k, float(sol.residual), kind)
