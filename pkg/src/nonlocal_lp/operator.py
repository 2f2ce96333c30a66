"""Nonlocal operators ``L^{a nu} f(x) = int J_f(x, y) a(t, x, y) nu(dy)``.

The radial integral along each atom direction ``theta`` is reduced to Fourier
multipliers.  For a plane wave ``e^{i k.x}`` the difference term is
``J = e^{i k.x} E(omega r)`` with ``omega = k.theta`` and
``E(z) = e^{iz} - 1 - i z [compensated]``, so everything hinges on accurate
one-dimensional integrals of ``E(omega r) g(r) r^{-1-alpha}``:

* ``[0, r_min]``: exact power series of ``E`` against ``r^{-1-alpha}`` with
  the smooth factor ``g`` frozen at ``r = 0``.  Its leading term is the
  classical second-order Hessian correction.
* ``[r_min, R_max]``: geometric cells, each with an ``order``-point product
  rule that integrates the oscillatory factor exactly against the
  interpolant of ``g r^{-1-alpha}`` (a Filon-type rule built from spherical
  Bessel moments).  Cells where ``omega r`` barely varies use plain
  Gauss-Legendre instead.
* ``[R_max, inf)``: closed form through the generalised exponential integral
  with ``g`` frozen at ``R_max``.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from math import factorial, lgamma, log

import mpmath
import numpy as np
from scipy.special import spherical_jn

from .coefficients import ONE, ConstantKernel, DifferenceKernel, KernelCoefficient, check_kernel_cancellation
from .errors import ArgumentError, DegenerateInputError, HypothesisViolation
from .grid import GridFunction, TorusGrid, gradient
from .measure import DEFAULT_R_MAX, BoundedLevyMeasure, CallableDensity, require_alpha1_cancellation
from .quadrature import gauss_legendre, geometric_edges

FILON_SWITCH = 0.5
ASYMPTOTIC_SWITCH = 40.0
TAYLOR_ALPHA_LIMIT = 2.0 - 1e-6


# -- scheme ------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureScheme:
    """Radial discretisation shared by every operator evaluation.

    Parameters
    ----------
    r_min : float
        Inner radius; below it the analytic series correction is used.
    r_max : float
        Outer radius of the cell region; beyond it the closed-form tail.
    ratio : float
        Maximal ratio of consecutive cell edges, in ``(1, 1.25]``.
    order : int
        Nodes per cell.
    taylor_inner, far_field : bool
        Switch the inner correction and the far-field tail on or off.
    """

    r_min: float
    r_max: float = DEFAULT_R_MAX
    ratio: float = 1.25
    order: int = 8
    taylor_inner: bool = True
    far_field: bool = True

    def __post_init__(self):
        if not 0 < self.r_min < self.r_max:
            raise ArgumentError("need 0 < r_min < r_max")
        if not 1 < self.ratio <= 1.25:
            raise ArgumentError("cell ratio must lie in (1, 1.25]")
        if self.order < 2:
            raise ArgumentError("need at least two nodes per cell")

    @classmethod
    def for_grid(cls, grid: TorusGrid, **kw) -> "QuadratureScheme":
        """Default scheme: ``r_min = h / 64`` keeps the inner region well below the grid spacing."""
        kw.setdefault("r_min", grid.h / 64)
        return cls(**kw)

    @property
    def nodes_per_decade(self) -> float:
        return self.order * np.log(10) / np.log(self.ratio)

    def edges(self, lo: float, hi: float, breakpoints=()) -> np.ndarray:
        return geometric_edges(lo, hi, self.ratio, (1.0,) + tuple(breakpoints))

    def check_grid(self, grid: TorusGrid):
        if self.r_min > grid.h:
            raise ArgumentError(f"r_min = {self.r_min:g} exceeds the grid spacing {grid.h:g}")


# -- pointwise pieces --------------------------------------------------------

def compensator(y, alpha: float) -> np.ndarray:
    """``y`` for ``alpha > 1``, ``y 1_{|y| <= 1}`` for ``alpha = 1``, zero for ``alpha < 1``."""
    if not 0 < alpha < 2:
        raise ArgumentError("alpha must lie in (0, 2)")
    y = np.asarray(y, dtype=float)
    if alpha > 1:
        return y.copy()
    if alpha == 1:
        inside = np.linalg.norm(np.atleast_1d(y)[..., None] if y.ndim == 0 else y, axis=-1) <= 1
        return y * inside[..., None] if y.ndim else y * inside
    return np.zeros_like(y)


def difference_j(f: GridFunction, x, y, alpha: float):
    """``f(x + y) - f(x) - y^(alpha).grad f(x)`` from the trigonometric interpolant."""
    d = f.grid.d
    x = np.atleast_2d(np.asarray(x, dtype=float).reshape(-1, d))
    y = np.asarray(y, dtype=float).reshape(d)
    grads = gradient(f)
    gx = np.stack([g.evaluate(x) for g in grads], axis=-1)
    val = f.evaluate(x + y) - f.evaluate(x) - gx @ compensator(y, alpha)
    return val[0] if val.shape[0] == 1 else val


def _comp_flag(alpha: float, hi: float) -> float:
    if alpha > 1:
        return 1.0
    if alpha == 1:
        return 1.0 if hi <= 1.0 + 1e-12 else 0.0
    return 0.0


def _expm1_minus(z, comp):
    """``E(z) = e^{iz} - 1 - i comp z`` without cancellation for small ``z``."""
    z = np.asarray(z, dtype=float)
    re = -2.0 * np.sin(0.5 * z) ** 2
    small = np.abs(z) < 0.1
    z2 = z * z
    series = -z * z2 / 6 * (1 - z2 / 20 * (1 - z2 / 42 * (1 - z2 / 72)))
    im_sin_minus = np.where(small, series, np.sin(z) - z)
    im = im_sin_minus + (1.0 - comp) * z
    return re + 1j * im


def inner_series(omega, r: float, alpha: float, compensated: bool, moments=None) -> np.ndarray:
    """``int_0^r E(omega s) g(s) s^{-1-alpha} ds`` by its convergent power series.

    ``moments(n)`` must return ``int_0^r g(s) s^{n-1-alpha} ds``; the default
    ``g = 1`` gives ``r^{n-alpha} / (n - alpha)``.
    """
    if alpha >= TAYLOR_ALPHA_LIMIT:
        raise ArgumentError("the inner series needs alpha < 2 - 1e-6")
    omega = np.asarray(omega, dtype=float)
    n0 = 2 if compensated else 1
    if not compensated and alpha >= 1:
        raise ArgumentError("uncompensated inner integral diverges for alpha >= 1")
    if moments is None:
        moments = lambda n: r ** (n - alpha) / (n - alpha)
    z = 1j * omega
    term = z ** n0 / factorial(n0)
    total = term * moments(n0)
    scale = float(np.max(np.abs(omega), initial=0.0)) * r
    n = n0
    while scale > 0 and n < 400:
        n += 1
        term = term * z / n
        total = total + term * moments(n)
        if n * log(scale) - lgamma(n + 1) < log(1e-18):
            break
    return total


def inner_moments(profile, r: float, alpha: float, depth: float = 1e-12):
    """Moment function ``n -> int_0^r g(s) s^{n-1-alpha} ds`` for a radial profile ``g``.

    Composite Gauss-Legendre on geometric cells down to ``depth * r``; below
    that ``g`` is frozen and integrated exactly.
    """
    lo = r * depth
    edges = geometric_edges(lo, r, 1.25, ())
    s, w = gauss_legendre(8)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (a + b) + 0.5 * (b - a) * s).ravel()
    weights = (0.5 * (b - a) * w).ravel()
    g = profile(nodes)
    g_lo = float(profile(np.array([lo]))[0])
    cache = {}

    def moment(n):
        if n not in cache:
            cache[n] = float(np.sum(weights * g * nodes ** (n - 1 - alpha)) + g_lo * lo ** (n - alpha) / (n - alpha))
        return cache[n]

    return moment


# -- far-field tail ----------------------------------------------------------

_EXPINT_CACHE: dict = {}


def _oscillatory_tail(omega_abs: np.ndarray, R: float, s: float) -> np.ndarray:
    """``int_R^inf e^{i w r} r^{-s} dr`` for ``w > 0``."""
    out = np.empty(omega_abs.shape, dtype=complex)
    big = omega_abs * R >= ASYMPTOTIC_SWITCH
    if np.any(big):
        w = omega_abs[big]
        term = (1j / w) * np.exp(1j * w * R) * R ** (-s)
        acc = term.copy()
        for m in range(40):
            term = term * (-1j * (s + m) / (w * R))
            acc += term
            if np.max(np.abs(term)) < 1e-17 * np.max(np.abs(acc)):
                break
        out[big] = acc
    idx = np.flatnonzero(~big)
    flat = out.reshape(-1)
    wflat = omega_abs.reshape(-1)
    for i in idx:
        key = (round(float(wflat[i]), 14), float(R), float(s))
        val = _EXPINT_CACHE.get(key)
        if val is None:
            w = key[0]
            val = complex(mpmath.expint(s, -1j * w * R)) * R ** (1 - s)
            _EXPINT_CACHE[key] = val
        flat[i] = val
    return out


def tail_multiplier(omega, R: float, alpha: float) -> np.ndarray:
    """``int_R^inf E(omega r) r^{-1-alpha} dr`` (compensated only when ``alpha > 1``)."""
    omega = np.asarray(omega, dtype=float)
    w = np.abs(omega)
    nz = w > 0
    out = np.zeros(omega.shape, dtype=complex)
    if not np.any(nz):
        return out
    wn = w[nz]
    val = _oscillatory_tail(wn, R, 1 + alpha) - R ** (-alpha) / alpha
    if alpha > 1:
        val = val - 1j * wn * R ** (1 - alpha) / (alpha - 1)
    out[nz] = np.where(omega[nz] > 0, val, np.conj(val))
    return out


# -- radial integrals --------------------------------------------------------

@dataclass(frozen=True)
class _CellRule:
    edges: np.ndarray
    nodes: np.ndarray  # (C, q)
    weights: np.ndarray  # (C, q)
    mid: np.ndarray  # (C,)
    half: np.ndarray  # (C,)
    comp: np.ndarray  # (C,)
    legendre: np.ndarray  # (q, q): P_m(s_i) w_i


def _cell_rule(scheme: QuadratureScheme, lo: float, hi: float, alpha: float, breakpoints=()) -> _CellRule:
    edges = scheme.edges(lo, hi, breakpoints)
    s, w = gauss_legendre(scheme.order)
    a, b = edges[:-1], edges[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * s[None, :]
    weights = half[:, None] * w[None, :]
    comp = np.array([_comp_flag(alpha, hh) for hh in b])
    leg = np.stack([np.polynomial.legendre.legval(s, np.eye(scheme.order)[m]) for m in range(scheme.order)])
    return _CellRule(edges, nodes, weights, mid, half, comp, leg * w[None, :])


def _radial_integral(omega: np.ndarray, rule: _CellRule, g: np.ndarray) -> np.ndarray:
    """``sum_cells int E(omega r) [interpolant of g](r) dr`` with ``g`` given at the cell nodes."""
    omega = np.asarray(omega, dtype=float)
    out = np.zeros(omega.shape, dtype=complex)
    q = rule.legendre.shape[0]
    mfac = (2 * np.arange(q) + 1) * (1j ** np.arange(q))
    for c in range(len(rule.mid)):
        gc = g[c]
        if not np.any(gc):
            continue
        wts = rule.weights[c] * gc
        z = omega * rule.half[c]
        filon = np.abs(z) > FILON_SWITCH
        direct = ~filon
        if np.any(direct):
            zr = np.multiply.outer(omega[direct], rule.nodes[c])
            out[direct] += _expm1_minus(zr, rule.comp[c]) @ wts
        if np.any(filon):
            zf = z[filon]
            wf = omega[filon]
            beta = rule.legendre @ gc  # Legendre-weighted moments of g on the cell
            acc = np.zeros(zf.shape, dtype=complex)
            for m in range(q):
                acc += mfac[m] * beta[m] * spherical_jn(m, zf)
            osc = rule.half[c] * np.exp(1j * wf * rule.mid[c]) * acc
            poly = wts.sum() + 1j * wf * rule.comp[c] * (wts @ rule.nodes[c])
            out[filon] += osc - poly
    return out


def _direction_profile(nu: BoundedLevyMeasure, j: int, yfactor, r: np.ndarray) -> np.ndarray:
    """``B(r theta_j) m(r, theta_j)`` at radii ``r`` (any shape)."""
    th = nu.directions[j]
    flat = r.reshape(-1)
    pts = flat[:, None] * th[None, :]
    vals = yfactor(pts) * nu.m(flat, j)
    return vals.reshape(r.shape)


def radial_multiplier(omega, nu: BoundedLevyMeasure, j: int, scheme: QuadratureScheme,
                      yfactor=ONE, lo: float = 0.0, hi: float = np.inf) -> np.ndarray:
    """``int_lo^hi E(omega r) B(r theta_j) m(r, theta_j) r^{-1-alpha} dr`` for frequencies ``omega``.

    ``lo`` is ``0`` or a radius in ``[r_min, r_max)``; ``hi`` is ``inf`` or a
    radius in ``(r_min, r_max]``.
    """
    alpha = nu.alpha
    omega = np.asarray(omega, dtype=float)
    out = np.zeros(omega.shape, dtype=complex)
    a = max(lo, scheme.r_min)
    b = min(hi, scheme.r_max)
    if b > a:
        rule = _cell_rule(scheme, a, b, alpha)
        g = _direction_profile(nu, j, yfactor, rule.nodes) * rule.nodes ** (-1 - alpha)
        out += _radial_integral(omega, rule, g)
    if lo == 0.0 and scheme.taylor_inner:
        moments = inner_moments(lambda r: _direction_profile(nu, j, yfactor, r), scheme.r_min, alpha)
        out += inner_series(omega, scheme.r_min, alpha, compensated=alpha >= 1, moments=moments)
    if np.isinf(hi) and scheme.far_field:
        gR = float(_direction_profile(nu, j, yfactor, np.array([scheme.r_max]))[0])
        if gR != 0.0:
            out += gR * tail_multiplier(omega, scheme.r_max, alpha)
    return out


def _measure_key(nu: BoundedLevyMeasure) -> tuple:
    dens = nu.density
    ident = id(dens) if isinstance(dens, CallableDensity) else 0
    return (nu.alpha, nu.directions.tobytes(), nu.weights.tobytes(), dens.describe(), ident, nu.r_max)


_MULT_CACHE: "OrderedDict[tuple, np.ndarray]" = OrderedDict()
_MULT_CACHE_SIZE = 64


def symbol_multiplier(kvec, nu: BoundedLevyMeasure, scheme: QuadratureScheme, yfactor=ONE,
                      lo: float = 0.0, hi: float = np.inf) -> np.ndarray:
    """``sum_j w_j int_lo^hi E(k.theta_j r) B m r^{-1-alpha} dr`` for wave vectors ``kvec`` (shape ``(..., d)``)."""
    kvec = np.asarray(kvec, dtype=float)
    out = np.zeros(kvec.shape[:-1], dtype=complex)
    for j, (th, w) in enumerate(zip(nu.directions, nu.weights)):
        omega = kvec @ th
        uniq, inv = np.unique(np.round(omega, 12), return_inverse=True)
        vals = radial_multiplier(uniq, nu, j, scheme, yfactor, lo, hi)
        out += w * vals[inv.reshape(omega.shape)]
    return out


def _grid_multiplier(grid: TorusGrid, nu, scheme, yfactor, lo, hi) -> np.ndarray:
    key = (grid.d, grid.n, scheme, _measure_key(nu), yfactor.key, lo, hi)
    hit = _MULT_CACHE.get(key)
    if hit is not None:
        _MULT_CACHE.move_to_end(key)
        return hit
    mult = symbol_multiplier(grid.kvec, nu, scheme, yfactor, lo, hi)
    mult.flags.writeable = False
    _MULT_CACHE[key] = mult
    if len(_MULT_CACHE) > _MULT_CACHE_SIZE:
        _MULT_CACHE.popitem(last=False)
    return mult


def levy_symbol(grid_or_k, nu: BoundedLevyMeasure, scheme: QuadratureScheme | None = None) -> np.ndarray:
    """Multiplier of ``L^nu`` (``a = 1``) on a grid's modes or on explicit wave vectors."""
    if isinstance(grid_or_k, TorusGrid):
        scheme = scheme or QuadratureScheme.for_grid(grid_or_k)
        return _grid_multiplier(grid_or_k, nu, scheme, ONE, 0.0, np.inf)
    k = np.asarray(grid_or_k, dtype=float)
    if k.ndim == 0 or k.shape[-1] != nu.d:
        k = k.reshape(-1, nu.d) if k.size % nu.d == 0 and nu.d > 1 else k.reshape(-1, 1)
    if scheme is None:
        scheme = QuadratureScheme(r_min=1e-4)
    return symbol_multiplier(k, nu, scheme)


# -- operator application ----------------------------------------------------

def _check_hypotheses(nu: BoundedLevyMeasure, coeff: KernelCoefficient, grid: TorusGrid, t: float):
    if nu.alpha != 1:
        return
    require_alpha1_cancellation(nu)
    if not coeff.radial_in_y:
        worst = check_kernel_cancellation(coeff, nu, grid, times=(t,))
        if worst > 1e-8:
            raise HypothesisViolation(f"kernel cancellation fails for alpha = 1 (|int y a nu| = {worst:.2e})")


def _resolution(f: GridFunction) -> float:
    c = np.abs(f.spectral)
    top = np.max(c, initial=0.0)
    if top == 0:
        return 0.0
    outer = np.max(np.abs(f.grid.kvec), axis=-1) > f.grid.n // 4
    return float(np.max(c[outer], initial=0.0) / top)


def _finish(f: GridFunction, values: np.ndarray) -> GridFunction:
    values = values.reshape(f.grid.shape)
    if f.is_real:
        return GridFunction.from_nodal(f.grid, values.real)
    return GridFunction.from_nodal(f.grid, values)


def _ifft(grid: TorusGrid, spec: np.ndarray) -> np.ndarray:
    return (np.fft.ifftn(spec.reshape(grid.shape)) * grid.size).reshape(-1)


def _apply_range(f, nu, coeff, t, scheme, lo, hi, node_chunk: int = 64) -> np.ndarray:
    """Flattened values of ``int_{lo<=|y|<hi} J_f a nu(dy)`` at the grid nodes."""
    grid = f.grid
    terms = coeff.terms(t, grid)
    out = np.zeros(grid.size, dtype=complex)
    if terms is not None:
        for xv, yf in terms:
            if not np.any(xv):
                continue
            mult = _grid_multiplier(grid, nu, scheme, yf, lo, hi)
            out += np.asarray(xv).reshape(-1) * _ifft(grid, f.spectral * mult)
        return out
    return _apply_general(f, nu, coeff, t, scheme, lo, hi, node_chunk)


def _apply_general(f, nu, coeff, t, scheme, lo, hi, node_chunk) -> np.ndarray:
    """Node-by-node evaluation for kernels without separable structure."""
    grid = f.grid
    alpha = nu.alpha
    out = np.zeros(grid.size, dtype=complex)
    kvec = grid.kvec
    a, b = max(lo, scheme.r_min), min(hi, scheme.r_max)
    rule = _cell_rule(scheme, a, b, alpha) if b > a else None
    q = scheme.order
    mfac = (2 * np.arange(q) + 1) * (1j ** np.arange(q))
    for j, (th, w) in enumerate(zip(nu.directions, nu.weights)):
        omega = (kvec @ th).reshape(-1)
        coef = f.spectral.reshape(-1)
        if lo == 0.0 and scheme.taylor_inner:
            out += w * _general_inner(f, nu, coeff, t, scheme, j, omega)
        if np.isinf(hi) and scheme.far_field:
            mR = float(nu.m(np.array([scheme.r_max]), j)[0])
            ax = coeff.on_grid(t, grid, (scheme.r_max * th)[None, :])[0]
            out += w * mR * ax * _ifft(grid, coef * tail_multiplier(omega, scheme.r_max, alpha))
        if rule is None:
            continue
        for c in range(len(rule.mid)):
            r = rule.nodes[c]
            dens = nu.m(r, j) * r ** (-1 - alpha)
            avals = coeff.on_grid(t, grid, r[:, None] * th[None, :])  # (q, N)
            z = omega * rule.half[c]
            filon = np.abs(z) > FILON_SWITCH
            # phi[i, k] = int_cell l_i(r) E(omega_k r) dr
            phi = np.zeros((q, omega.size), dtype=complex)
            phi[:, ~filon] = (rule.weights[c][:, None]
                              * _expm1_minus(np.multiply.outer(r, omega[~filon]), rule.comp[c]))
            if np.any(filon):
                zf, wf = z[filon], omega[filon]
                jm = np.stack([mfac[m] * spherical_jn(m, zf) for m in range(q)])  # (q, K)
                osc = rule.half[c] * np.exp(1j * wf * rule.mid[c])[None, :] * (rule.legendre.T @ jm)
                poly = rule.weights[c][:, None] * (1 + 1j * rule.comp[c] * np.multiply.outer(r, wf))
                phi[:, filon] = osc - poly
            for i in range(q):
                out += w * dens[i] * avals[i] * _ifft(grid, coef * phi[i])
    return out


def _general_inner(f, nu, coeff, t, scheme, j, omega, depth: float = 1e-12) -> np.ndarray:
    """Inner-ball series with ``x``-dependent moments ``int_0^r_min a(t,x,s theta) m s^{n-1-alpha} ds``."""
    grid, alpha, r = f.grid, nu.alpha, scheme.r_min
    if alpha >= TAYLOR_ALPHA_LIMIT:
        raise ArgumentError("the inner series needs alpha < 2 - 1e-6")
    th = nu.directions[j]
    lo = r * depth
    edges = geometric_edges(lo, r, 1.25, ())
    sgl, wgl = gauss_legendre(8)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (a + b) + 0.5 * (b - a) * sgl).ravel()
    weights = (0.5 * (b - a) * wgl).ravel() * nu.m(nodes, j)
    n0 = 2 if alpha >= 1 else 1
    scale = float(np.max(np.abs(omega), initial=0.0)) * r
    nmax = n0
    while scale > 0 and nmax < 400 and nmax * log(scale) - lgamma(nmax + 1) >= log(1e-18):
        nmax += 1
    ns = np.arange(n0, nmax + 1)
    powers = nodes[None, :] ** (ns[:, None] - 1 - alpha) * weights[None, :]  # (n, nodes)
    moments = np.zeros((len(ns), grid.size))
    for c0 in range(0, len(nodes), 64):
        sl = slice(c0, c0 + 64)
        avals = coeff.on_grid(t, grid, nodes[sl, None] * th[None, :])
        moments += powers[:, sl] @ avals
    a_lo = coeff.on_grid(t, grid, (lo * th)[None, :])[0] * float(nu.m(np.array([lo]), j)[0])
    moments += (lo ** (ns - alpha) / (ns - alpha))[:, None] * a_lo[None, :]
    out = np.zeros(grid.size, dtype=complex)
    coef = f.spectral.reshape(-1)
    for row, n in enumerate(ns):
        out += moments[row] * _ifft(grid, coef * (1j * omega) ** n / factorial(int(n)))
    return out


def _tail_bound(f: GridFunction, nu: BoundedLevyMeasure, coeff: KernelCoefficient, R: float) -> float:
    return float(2 * np.max(np.abs(f.nodal), initial=0.0) * coeff.sup_norm() * nu.mass_outside(R))


def _inner_error_bound(f, nu, coeff, scheme) -> float:
    """Size of the neglected ``y``-variation of ``a m`` on ``|y| < r_min``."""
    from .grid import hessian
    r = scheme.r_min
    alpha = nu.alpha
    grads = gradient(f)
    gmax = max(float(np.max(np.abs(g.nodal), initial=0.0)) for g in grads)
    hmax = max(float(np.max(np.abs(h.nodal), initial=0.0)) for row in hessian(f) for h in row)
    var = 2 * max(abs(coeff.sup_norm()), 1.0) * nu.m_hi
    total = nu.sigma.total_mass * var
    if alpha >= 1:
        return float(total * hmax * r ** (2 - alpha) / (2 - alpha))
    return float(total * gmax * r ** (1 - alpha) / (1 - alpha))


@dataclass
class OperatorInfo:
    tail_bound: float
    tail_added: bool
    inner_error_bound: float
    spectral_tail: float
    extra: dict = field(default_factory=dict)


def apply_operator(f: GridFunction, nu: BoundedLevyMeasure, coeff: KernelCoefficient | None = None,
                   t: float = 0.0, scheme: QuadratureScheme | None = None, return_info: bool = False,
                   check: bool = True):
    """Evaluate ``L^{a nu} f`` at every grid node.

    Parameters
    ----------
    f : GridFunction
    nu : BoundedLevyMeasure
    coeff : KernelCoefficient, optional
        Defaults to ``a = 1``.
    t : float
        Time argument of the kernel.
    scheme : QuadratureScheme, optional
        Defaults to :meth:`QuadratureScheme.for_grid`.
    return_info : bool
        Also return an :class:`OperatorInfo` with the far-field bound
        ``2 |f|_inf sup|a| nu(|y| > R_max)`` and the inner error estimate.

    Raises
    ------
    HypothesisViolation
        ``alpha = 1`` with a measure or kernel that fails the cancellation condition.
    ArgumentError
        Inner correction requested with ``alpha >= 2 - 1e-6``.
    """
    coeff = coeff or ConstantKernel(1.0)
    grid = f.grid
    scheme = scheme or QuadratureScheme.for_grid(grid)
    scheme.check_grid(grid)
    if check:
        _check_hypotheses(nu, coeff, grid, t)
    if scheme.taylor_inner and nu.alpha >= TAYLOR_ALPHA_LIMIT:
        raise ArgumentError("inner correction requested with alpha too close to 2")
    result = _finish(f, _apply_range(f, nu, coeff, t, scheme, 0.0, np.inf))
    if not return_info:
        return result
    info = OperatorInfo(_tail_bound(f, nu, coeff, scheme.r_max), scheme.far_field,
                        _inner_error_bound(f, nu, coeff, scheme), _resolution(f))
    return result, info


def apply_levy(f: GridFunction, nu: BoundedLevyMeasure, scheme: QuadratureScheme | None = None) -> GridFunction:
    """``L^nu f`` (``a = 1``) as a single Fourier multiplier."""
    return f.with_multiplier(levy_symbol(f.grid, nu, scheme))


def apply_split(f: GridFunction, nu: BoundedLevyMeasure, coeff: KernelCoefficient, t: float, eps: float,
                scheme: QuadratureScheme | None = None):
    """Split ``L^{a nu} f = I1 + I2 + I3``.

    ``I1 = a(t, x, 0) L^nu f``; ``I2`` and ``I3`` integrate ``J_f (a(t,x,y) - a(t,x,0))``
    over ``|y| > eps`` and ``|y| <= eps`` respectively.
    """
    grid = f.grid
    scheme = scheme or QuadratureScheme.for_grid(grid)
    scheme.check_grid(grid)
    if not scheme.r_min < eps <= 1:
        raise ArgumentError(f"eps must lie in (r_min, 1], got {eps}")
    _check_hypotheses(nu, coeff, grid, t)
    a0 = coeff.at_zero_on_grid(t, grid).reshape(grid.shape)
    i1 = _finish(f, a0.reshape(-1) * apply_levy(f, nu, scheme).nodal.reshape(-1))
    diff = DifferenceKernel(coeff)
    i2 = _finish(f, _apply_range(f, nu, diff, t, scheme, eps, np.inf))
    i3 = _finish(f, _apply_range(f, nu, diff, t, scheme, 0.0, eps))
    return i1, i2, i3


# -- Dini moduli -------------------------------------------------------------

@dataclass
class DiniReport:
    """Sampled moduli ``omega0(r)`` (in ``y``) and ``omega1(r)`` (in ``x``) with their Dini integrals."""

    radii: list
    omega0: list
    omega1: list
    dini_integral0: float
    dini_integral1: float

    def integral(self, upper: float = 1.0, which: int = 0) -> float:
        """``int_0^upper omega(r) / r dr`` from the samples (power-law head extrapolation)."""
        om = self.omega0 if which == 0 else self.omega1
        return dini_integral(np.asarray(self.radii), np.asarray(om), upper)


def dini_integral(radii: np.ndarray, omega: np.ndarray, upper: float = 1.0) -> float:
    """Log-trapezoid estimate of ``int_0^upper omega(r) dr / r``.

    Below the first radius the modulus is extrapolated as ``C r^gamma`` fitted
    on the first two samples; a non-decaying head gives ``inf``.  Beyond the
    last sample the modulus is held constant.
    """
    radii = np.asarray(radii, dtype=float)
    omega = np.asarray(omega, dtype=float)
    keep = radii <= upper * (1 + 1e-12)
    r, om = radii[keep], omega[keep]
    if len(r) == 0:
        return np.inf if omega[0] > 0 else 0.0
    if np.all(om == 0):
        return 0.0
    u = np.log(r)
    total = float(np.sum(0.5 * (om[1:] + om[:-1]) * np.diff(u))) if len(r) > 1 else 0.0
    if upper > r[-1]:
        total += float(om[-1] * np.log(upper / r[-1]))
    if om[0] > 0:
        if len(r) < 2 or om[1] <= 0:
            return np.inf
        gamma = np.log(om[1] / om[0]) / (u[1] - u[0])
        if gamma <= 1e-3:
            return np.inf
        total += float(om[0] / gamma)
    return total


def _ball_points(d: int, r: float, count: int = 64) -> np.ndarray:
    if d == 1:
        return np.linspace(-r, r, count)[:, None]
    side = int(round(np.sqrt(count)))
    rad = r * np.arange(1, side + 1) / side
    ang = 2 * np.pi * np.arange(side) / side
    rr, aa = np.meshgrid(rad, ang, indexing="ij")
    return np.stack([rr * np.cos(aa), rr * np.sin(aa)], axis=-1).reshape(-1, 2)


def estimate_dini(coeff: KernelCoefficient, grid: TorusGrid, radii=None, t: float = 0.0,
                  ball_points: int = 64) -> DiniReport:
    """Sample ``omega0(r) = sup_x sup_{|y|<=r} |a(x,y) - a(x,0)|`` and ``omega1(r) = sup_{|x-x'|<=r} |a(x,0)-a(x',0)|``.

    Suprema are maxima over the grid nodes and a ``ball_points`` sample of each
    ball; running maxima make both sequences nondecreasing.
    """
    radii = np.geomspace(1e-4, 1.0, 41) if radii is None else np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0) or radii[0] <= 0 or radii[-1] > 1:
        raise ArgumentError("radii must be ascending in (0, 1]")
    a0 = coeff.at_zero_on_grid(t, grid)
    om0, om1 = [], []
    pts = grid.points
    for r in radii:
        ys = _ball_points(grid.d, r, ball_points)
        vals = coeff.on_grid(t, grid, ys)
        om0.append(float(np.max(np.abs(vals - a0[None, :]))))
        if coeff.x_dependent:
            worst = 0.0
            zero = np.zeros((1, grid.d))
            for z in ys:
                shifted = np.asarray(coeff(t, pts + z, zero), dtype=float)
                worst = max(worst, float(np.max(np.abs(shifted - a0))))
            om1.append(worst)
        else:
            om1.append(0.0)
    om0 = np.maximum.accumulate(om0)
    om1 = np.maximum.accumulate(om1)
    return DiniReport(list(radii), list(om0), list(om1),
                      dini_integral(radii, om0), dini_integral(radii, om1))


def dini_remainder_check(f: GridFunction, nu: BoundedLevyMeasure, coeff: KernelCoefficient, t: float, eps: float,
                  p: float, scheme: QuadratureScheme | None = None, dini: DiniReport | None = None):
    """Empirical constant in ``|I3|_p <= C |(-Delta)^{alpha/2} f|_p int_0^eps omega0(r)/r dr``.

    Returns ``(lhs, ratio)`` with ``lhs = |I3|_p``.
    """
    from .norms import fractional_laplacian, lp_norm
    dini = dini or estimate_dini(coeff, f.grid)
    _, _, i3 = apply_split(f, nu, coeff, t, eps, scheme)
    lhs = lp_norm(i3, p)
    if np.all(np.asarray(dini.omega0) == 0):
        return lhs, 0.0
    integ = dini.integral(eps, 0)
    frac = lp_norm(fractional_laplacian(f, nu.alpha), p)
    if integ <= 1e-14 or frac <= 1e-14:
        raise DegenerateInputError("vanishing Dini integral or fractional norm")
    return lhs, lhs / (frac * integ)
