"""Kernel coefficients ``a(t, x, y)`` and drifts ``b(t, x)``.

Coefficients are vectorised callables.  Where a coefficient is a finite sum
``sum_q A_q(t, x) B_q(y)`` it exposes that structure through :meth:`terms`,
which lets the operator reduce every radial integral to one Fourier
multiplier per term instead of one transform per quadrature node.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, HypothesisViolation
from .grid import TorusGrid
from .quadrature import gauss_legendre


# -- y-factors ---------------------------------------------------------------

@dataclass(frozen=True)
class YFactor:
    """A function of the displacement ``y`` with a hashable identity ``key``."""

    key: tuple
    func: object

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return np.broadcast_to(np.asarray(self.func(y), dtype=float), y.shape[:-1])

    def at_zero(self, d: int) -> float:
        return float(self(np.zeros((1, d)))[0])

    def shifted(self, d: int) -> "YFactor":
        """``B(y) - B(0)``."""
        b0 = self.at_zero(d)
        if b0 == 0.0:
            return self
        return YFactor(("shift",) + self.key, lambda y, f=self.func: np.asarray(f(y), dtype=float) - b0)


ONE = YFactor(("one",), lambda y: np.ones(np.shape(y)[:-1]))


def dini_factor(gamma: float) -> YFactor:
    """``|y|^gamma ^ 1``, whose Dini modulus is ``r^gamma`` on ``(0, 1]``."""
    g = float(gamma)
    return YFactor(("dini", g), lambda y: np.minimum(np.linalg.norm(y, axis=-1), 1.0) ** g)


# -- kernel coefficients -----------------------------------------------------

class KernelCoefficient:
    """Base class for ``a(t, x, y) >= 0`` with ``a0 <= a(t, x, 0) <= a1``.

    ``far_radius`` is the radius past which ``a`` does not depend on ``|y|``.
    ``signed`` kernels (derivatives, differences) skip positivity checks.
    """

    a0: float = 1.0
    a1: float = 1.0
    far_radius: float = 0.0
    signed: bool = False
    x_dependent: bool = True
    radial_in_y: bool = True
    name = "kernel"

    def __call__(self, t, x, y):
        raise NotImplementedError

    def terms(self, t: float, grid: TorusGrid):
        """``[(A_q on grid nodes, B_q), ...]`` or ``None`` when not separable."""
        return None

    def on_grid(self, t: float, grid: TorusGrid, y) -> np.ndarray:
        """Values at every grid node for each displacement: shape ``(len(y), grid.size)``."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        terms = self.terms(t, grid)
        if terms is not None:
            out = np.zeros((len(y), grid.size))
            for xv, yf in terms:
                out += yf(y)[:, None] * xv[None, :]
            return out
        return np.asarray(self(t, grid.points[None, :, :], y[:, None, :]), dtype=float) * np.ones((len(y), 1))

    def at_zero_on_grid(self, t: float, grid: TorusGrid) -> np.ndarray:
        return self.on_grid(t, grid, np.zeros((1, grid.d)))[0]

    def dx(self, axis: int) -> "KernelCoefficient":
        """Derivative kernel ``d a / d x_axis`` (signed)."""
        return FiniteDifferenceKernel(self, axis)

    def sup_norm(self) -> float:
        return self.a1


class ConstantKernel(KernelCoefficient):
    x_dependent = False

    def __init__(self, c: float = 1.0):
        if c <= 0:
            raise ConfigurationError("constant kernel must be positive")
        self.c = float(c)
        self.a0 = self.a1 = self.c
        self.name = f"constant:{self.c:g}"

    def __call__(self, t, x, y):
        return np.full(np.broadcast_shapes(np.shape(x)[:-1], np.shape(y)[:-1]), self.c)

    def terms(self, t, grid):
        return [(np.full(grid.size, self.c), ONE)]

    def dx(self, axis):
        return ZeroKernel()


class ZeroKernel(KernelCoefficient):
    signed = True
    x_dependent = False
    a0 = a1 = 0.0
    name = "zero"

    def __call__(self, t, x, y):
        return np.zeros(np.broadcast_shapes(np.shape(x)[:-1], np.shape(y)[:-1]))

    def terms(self, t, grid):
        return [(np.zeros(grid.size), ONE)]

    def dx(self, axis):
        return self


class SeparableKernel(KernelCoefficient):
    """``a = base + xa X + ya Y + xya X Y`` with ``X = s(t) sin(k.x + phase)``, ``Y = |y|^gamma ^ 1``.

    ``s(t) = 1 + time_amp * t``.  Covers the product form
    ``(1 + c sin x)(1 + e Y)`` (``xya = c e``) and the additive form
    ``1 + c sin x (1 + e Y)`` (``ya = 0``).
    """

    far_radius = 1.0

    def __init__(self, base=1.0, x_amp=0.0, y_amp=0.0, xy_amp=0.0, y_exp=0.5, x_mode=(1,),
                 x_phase=0.0, time_amp=0.0):
        self.base, self.x_amp, self.y_amp, self.xy_amp = float(base), float(x_amp), float(y_amp), float(xy_amp)
        self.y_exp, self.x_phase, self.time_amp = float(y_exp), float(x_phase), float(time_amp)
        self.x_mode = np.atleast_1d(np.asarray(x_mode, dtype=float))
        if self.y_exp <= 0:
            raise ConfigurationError("y exponent must be positive")
        smax = 1.0 + abs(self.time_amp)
        self.a0 = self.base - abs(self.x_amp) * smax
        self.a1 = self.base + abs(self.x_amp) * smax
        corners = [self.base + self.x_amp * X + self.y_amp * Y + self.xy_amp * X * Y
                   for X in (-smax, smax) for Y in (0.0, 1.0)]
        self._min, self._max = min(corners), max(corners)
        self.x_dependent = self.x_amp != 0 or self.xy_amp != 0
        self.name = "separable"
        self._yf = dini_factor(self.y_exp)

    @classmethod
    def product(cls, x_amp, y_amp, y_exp, **kw):
        """``(1 + x_amp X)(1 + y_amp Y)``."""
        return cls(1.0, x_amp, y_amp, x_amp * y_amp, y_exp, **kw)

    @classmethod
    def additive(cls, x_amp, y_amp, y_exp, **kw):
        """``1 + x_amp X (1 + y_amp Y)``."""
        return cls(1.0, x_amp, 0.0, x_amp * y_amp, y_exp, **kw)

    def _X(self, t, x):
        x = np.asarray(x, dtype=float)
        k = np.broadcast_to(self.x_mode, (x.shape[-1],))
        return (1.0 + self.time_amp * t) * np.sin(x @ k + self.x_phase)

    def _dX(self, t, x, axis):
        x = np.asarray(x, dtype=float)
        k = np.broadcast_to(self.x_mode, (x.shape[-1],))
        return (1.0 + self.time_amp * t) * k[axis] * np.cos(x @ k + self.x_phase)

    def __call__(self, t, x, y):
        X, Y = self._X(t, x), self._yf(y)
        return self.base + self.x_amp * X + self.y_amp * Y + self.xy_amp * X * Y

    def terms(self, t, grid):
        X = self._X(t, grid.points)
        return [(self.base + self.x_amp * X, ONE), (self.y_amp + self.xy_amp * X, self._yf)]

    def dx(self, axis):
        return _SeparableDerivative(self, axis)

    def sup_norm(self):
        return max(abs(self._min), abs(self._max))


class _SeparableDerivative(KernelCoefficient):
    signed = True
    far_radius = 1.0

    def __init__(self, parent: SeparableKernel, axis: int):
        self.parent, self.axis = parent, axis
        k = np.broadcast_to(parent.x_mode, (axis + 1,))[axis]
        bound = abs(k) * (1 + abs(parent.time_amp)) * (abs(parent.x_amp) + abs(parent.xy_amp))
        self.a0, self.a1 = -bound, bound
        self.name = f"d{axis}(separable)"

    def __call__(self, t, x, y):
        p = self.parent
        dX = p._dX(t, x, self.axis)
        return p.x_amp * dX + p.xy_amp * dX * p._yf(y)

    def terms(self, t, grid):
        p = self.parent
        dX = p._dX(t, grid.points, self.axis)
        return [(p.x_amp * dX, ONE), (p.xy_amp * dX, p._yf)]

    def sup_norm(self):
        return self.a1


class CallableKernel(KernelCoefficient):
    """Arbitrary vectorised ``a(t, x, y)`` with declared bounds."""

    radial_in_y = False

    def __init__(self, func, a0: float, a1: float, far_radius: float = 16 * np.pi, name="callable",
                 signed: bool = False):
        self.func, self.a0, self.a1 = func, float(a0), float(a1)
        self.far_radius, self.name, self.signed = float(far_radius), name, signed

    def __call__(self, t, x, y):
        return np.asarray(self.func(t, np.asarray(x, dtype=float), np.asarray(y, dtype=float)), dtype=float)


class FiniteDifferenceKernel(KernelCoefficient):
    """Central difference in ``x_axis`` of a kernel without an analytic derivative."""

    signed = True

    def __init__(self, base: KernelCoefficient, axis: int, step: float = 1e-5):
        self.base, self.axis, self.step = base, axis, step
        self.radial_in_y = base.radial_in_y
        self.far_radius = base.far_radius
        self.name = f"d{axis}({base.name})"
        self.a0, self.a1 = -np.inf, np.inf

    def __call__(self, t, x, y):
        x = np.asarray(x, dtype=float)
        e = np.zeros(x.shape[-1])
        e[self.axis] = self.step
        return (self.base(t, x + e, y) - self.base(t, x - e, y)) / (2 * self.step)


class DifferenceKernel(KernelCoefficient):
    """``a(t, x, y) - a(t, x, 0)`` (signed, vanishes at ``y = 0``)."""

    signed = True

    def __init__(self, base: KernelCoefficient):
        self.base = base
        self.radial_in_y = base.radial_in_y
        self.far_radius = base.far_radius
        self.x_dependent = base.x_dependent
        self.name = f"diff({base.name})"
        self.a0 = self.a1 = 0.0

    def __call__(self, t, x, y):
        y = np.asarray(y, dtype=float)
        return self.base(t, x, y) - self.base(t, x, np.zeros_like(y))

    def terms(self, t, grid):
        terms = self.base.terms(t, grid)
        if terms is None:
            return None
        out = [(xv, yf.shifted(grid.d)) for xv, yf in terms if yf.key != ONE.key]
        return out or [(np.zeros(grid.size), ONE)]

    def on_grid(self, t, grid, y):
        return self.base.on_grid(t, grid, y) - self.base.at_zero_on_grid(t, grid)[None, :]


class ScaledKernel(KernelCoefficient):
    """``c * a`` for a constant ``c`` (used to blend operators in the continuity method)."""

    def __init__(self, base: KernelCoefficient, c: float):
        self.base, self.c = base, float(c)
        self.radial_in_y = base.radial_in_y
        self.far_radius, self.signed = base.far_radius, base.signed or self.c < 0
        self.x_dependent = base.x_dependent
        self.a0, self.a1 = sorted((self.c * base.a0, self.c * base.a1))
        self.name = f"{self.c:g}*{base.name}"

    def __call__(self, t, x, y):
        return self.c * self.base(t, x, y)

    def terms(self, t, grid):
        terms = self.base.terms(t, grid)
        return None if terms is None else [(self.c * xv, yf) for xv, yf in terms]

    def on_grid(self, t, grid, y):
        return self.c * self.base.on_grid(t, grid, y)


# -- mollification -----------------------------------------------------------

def _bump(z):
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    inside = np.abs(z) < 1
    out[inside] = np.exp(-1.0 / (1.0 - z[inside] ** 2))
    return out


@lru_cache(maxsize=None)
def _bump_rule(order: int = 96):
    s, w = gauss_legendre(order)
    vals = _bump(s) * w
    return s, vals / vals.sum()


def bump_transform(xi) -> np.ndarray:
    """``int rho(z) cos(xi z) dz`` for the normalised bump ``rho ~ exp(-1/(1-z^2))`` on ``(-1, 1)``."""
    s, w = _bump_rule()
    xi = np.asarray(xi, dtype=float)
    return np.cos(np.multiply.outer(xi, s)) @ w


def mollifier_multiplier(grid: TorusGrid, eps: float) -> np.ndarray:
    """Fourier multiplier of ``rho_eps`` (tensor product of 1-d bumps when ``d = 2``)."""
    mult = np.ones(grid.shape)
    for ax in range(grid.d):
        mult = mult * bump_transform(eps * grid.kvec[..., ax])
    return mult


def mollify_grid_values(values: np.ndarray, grid: TorusGrid, eps: float) -> np.ndarray:
    """Convolve nodal data (trailing axis = flattened grid) with ``rho_eps``."""
    lead = values.shape[:-1]
    arr = values.reshape(lead + grid.shape)
    axes = tuple(range(len(lead), len(lead) + grid.d))
    out = np.fft.ifftn(np.fft.fftn(arr, axes=axes) * mollifier_multiplier(grid, eps), axes=axes).real
    return out.reshape(values.shape)


class MollifiedKernel(KernelCoefficient):
    """``a_eps(t, ., y) = a(t, ., y) * rho_eps`` in ``x``.

    Grid evaluations convolve spectrally; pointwise calls use a Gauss rule on
    the bump's support.
    """

    def __init__(self, base: KernelCoefficient, eps: float):
        if not 0 < eps < 1:
            raise ConfigurationError("mollification eps must lie in (0, 1)")
        self.base, self.eps = base, float(eps)
        self.radial_in_y = base.radial_in_y
        self.a0, self.a1, self.far_radius = base.a0, base.a1, base.far_radius
        self.signed, self.x_dependent = base.signed, base.x_dependent
        self.name = f"mollified({base.name}, {eps:g})"

    def __call__(self, t, x, y):
        s, w = _bump_rule(48)
        x = np.asarray(x, dtype=float)
        d = x.shape[-1]
        if d == 1:
            shifts, weights = (self.eps * s)[:, None], w
        else:
            zz = np.stack(np.meshgrid(self.eps * s, self.eps * s, indexing="ij"), -1).reshape(-1, 2)
            shifts, weights = zz, np.outer(w, w).ravel()
        total = 0.0
        for z, wz in zip(shifts, weights):
            total = total + wz * self.base(t, x - z, y)
        return total

    def terms(self, t, grid):
        terms = self.base.terms(t, grid)
        if terms is None:
            return None
        return [(mollify_grid_values(xv, grid, self.eps), yf) for xv, yf in terms]

    def on_grid(self, t, grid, y):
        if self.base.terms(t, grid) is not None:
            return super().on_grid(t, grid, y)
        return mollify_grid_values(self.base.on_grid(t, grid, y), grid, self.eps)

    def dx(self, axis):
        return MollifiedKernel(self.base.dx(axis), self.eps)


# -- drifts ------------------------------------------------------------------

class Drift:
    """``b(t, x)`` with sup bound ``bound`` and modulus of continuity ``modulus(r)``."""

    bound: float = 0.0
    name = "drift"

    def __call__(self, t, x):
        raise NotImplementedError

    def on_grid(self, t, grid: TorusGrid) -> np.ndarray:
        return np.asarray(self(t, grid.points), dtype=float).reshape(grid.size, grid.d)

    def modulus(self, r: float) -> float:
        return 2 * self.bound

    def dx(self, axis: int) -> "Drift":
        raise NotImplementedError

    @property
    def is_zero(self) -> bool:
        return False

    @property
    def x_constant(self) -> bool:
        return False


class ZeroDrift(Drift):
    name = "zero"

    def __call__(self, t, x):
        return np.zeros(np.shape(x))

    def modulus(self, r):
        return 0.0

    def dx(self, axis):
        return self

    @property
    def is_zero(self):
        return True

    @property
    def x_constant(self):
        return True


class ConstantDrift(Drift):
    def __init__(self, v):
        self.v = np.atleast_1d(np.asarray(v, dtype=float))
        self.bound = float(np.linalg.norm(self.v))
        self.name = "constant"

    def __call__(self, t, x):
        return np.broadcast_to(self.v, np.shape(x)).copy()

    def modulus(self, r):
        return 0.0

    def dx(self, axis):
        return ZeroDrift()

    @property
    def is_zero(self):
        return not np.any(self.v)

    @property
    def x_constant(self):
        return True


class CosineDrift(Drift):
    """``b(t, x) = amp cos(k.x + phase) e`` with unit direction ``e`` (default ``e_1``)."""

    def __init__(self, amp: float, mode=(1,), phase: float = 0.0, direction=None, _deriv_axis=None):
        self.amp, self.phase = float(amp), float(phase)
        self.mode = np.atleast_1d(np.asarray(mode, dtype=float))
        self.direction = None if direction is None else np.asarray(direction, dtype=float)
        self._deriv_axis = _deriv_axis
        kmax = float(np.max(np.abs(self.mode)))
        self.bound = abs(self.amp) * (kmax if _deriv_axis is not None else 1.0)
        self.name = "cosine"

    def _dir(self, d):
        if self.direction is not None:
            return self.direction
        e = np.zeros(d)
        e[0] = 1.0
        return e

    def __call__(self, t, x):
        x = np.asarray(x, dtype=float)
        d = x.shape[-1]
        k = np.broadcast_to(self.mode, (d,))
        arg = x @ k + self.phase
        if self._deriv_axis is None:
            s = self.amp * np.cos(arg)
        else:
            s = -self.amp * k[self._deriv_axis] * np.sin(arg)
        return s[..., None] * self._dir(d)

    def modulus(self, r):
        kmax = float(np.linalg.norm(self.mode))
        return min(2 * self.bound, self.bound * kmax * r)

    def dx(self, axis):
        if self._deriv_axis is not None:
            raise NotImplementedError("second derivatives of drifts are not needed")
        return CosineDrift(self.amp, self.mode, self.phase, self.direction, _deriv_axis=axis)

    @property
    def is_zero(self):
        return self.amp == 0


class MollifiedDrift(Drift):
    def __init__(self, base: Drift, eps: float):
        self.base, self.eps = base, float(eps)
        self.bound = base.bound
        self.name = f"mollified({base.name})"

    def __call__(self, t, x):
        s, w = _bump_rule(48)
        x = np.asarray(x, dtype=float)
        if x.shape[-1] == 1:
            return sum(wz * self.base(t, x - self.eps * z) for z, wz in zip(s, w))
        zz = np.stack(np.meshgrid(self.eps * s, self.eps * s, indexing="ij"), -1).reshape(-1, 2)
        ww = np.outer(w, w).ravel()
        return sum(wz * self.base(t, x - z) for z, wz in zip(zz, ww))

    def on_grid(self, t, grid):
        vals = self.base.on_grid(t, grid)
        return mollify_grid_values(vals.T, grid, self.eps).T

    def modulus(self, r):
        return self.base.modulus(r)

    def dx(self, axis):
        return MollifiedDrift(self.base.dx(axis), self.eps)

    @property
    def is_zero(self):
        return self.base.is_zero

    @property
    def x_constant(self):
        return self.base.x_constant


def mollify_coefficients(coeff: KernelCoefficient, drift: Drift, eps: float,
                         grid: TorusGrid | None = None, modulus1=None):
    """Return ``(a * rho_eps, b * rho_eps)``, convolving in ``x`` only.

    When a grid and an ``omega^(1)`` modulus are given, the inequality
    ``|a_eps - a| <= omega^(1)(eps)`` is spot-checked on ``y = 0`` samples.
    """
    if not 0 < eps < 1:
        raise ConfigurationError("mollification eps must lie in (0, 1)")
    if isinstance(coeff, ConstantKernel) or not coeff.x_dependent:
        a_eps = coeff
    else:
        a_eps = MollifiedKernel(coeff, eps)
    b_eps = drift if (drift.is_zero or drift.x_constant) else MollifiedDrift(drift, eps)
    if grid is not None and modulus1 is not None:
        gap = np.max(np.abs(a_eps.at_zero_on_grid(0.0, grid) - coeff.at_zero_on_grid(0.0, grid)))
        if gap > modulus1(eps) + 1e-8:
            raise HypothesisViolation(f"|a_eps - a| = {gap:.3e} exceeds omega1(eps) = {modulus1(eps):.3e}")
    return a_eps, b_eps


# -- hypothesis checks on coefficients ---------------------------------------

def check_kernel_bounds(coeff: KernelCoefficient, grid: TorusGrid, times=(0.0, 0.5, 1.0),
                        radii=(0.0, 0.01, 0.1, 0.5, 1.0, 4.0)) -> dict:
    """Sampled margins for ``a0 <= a(t,x,0) <= a1`` and ``a >= 0``."""
    lo, hi, amin = np.inf, -np.inf, np.inf
    dirs = np.eye(grid.d)
    ys = np.concatenate([r * np.concatenate([dirs, -dirs]) for r in radii])
    for t in times:
        a0x = coeff.at_zero_on_grid(t, grid)
        lo, hi = min(lo, a0x.min()), max(hi, a0x.max())
        amin = min(amin, coeff.on_grid(t, grid, ys).min())
    return {"a_lower_margin": float(lo - coeff.a0), "a_upper_margin": float(coeff.a1 - hi),
            "positivity_margin": float(amin), "a0": coeff.a0, "a1": coeff.a1,
            "ok": bool(lo >= coeff.a0 - 1e-12 and hi <= coeff.a1 + 1e-12 and coeff.a0 > 0
                       and (coeff.signed or amin >= 0))}


def check_kernel_cancellation(coeff: KernelCoefficient, nu, grid: TorusGrid, times=(0.0, 0.5, 1.0),
                              annuli=((1e-3, 0.1), (0.1, 1.0), (1.0, 3.0), (0.05, 8.0))) -> float:
    """Worst ``|int_{r<=|y|<=R} y a(t,x,y) nu(dy)|`` over sampled ``t, x`` (only for ``alpha = 1``)."""
    if nu.alpha != 1:
        return 0.0
    from .quadrature import composite_nodes, geometric_edges
    worst = 0.0
    for r, R in annuli:
        nodes, wts = composite_nodes(geometric_edges(r, R), 8)
        for t in times:
            acc = np.zeros((grid.size, grid.d))
            for j, (th, w) in enumerate(zip(nu.directions, nu.weights)):
                vals = coeff.on_grid(t, grid, nodes[:, None] * th[None, :])
                dens = nu.m(nodes, j) / nodes
                acc += w * ((wts * dens) @ vals)[:, None] * th[None, :]
            worst = max(worst, float(np.max(np.linalg.norm(acc, axis=1))))
    return worst
