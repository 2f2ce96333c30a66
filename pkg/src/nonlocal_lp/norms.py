"""Function-space norms on the torus and empirical checks of their inequalities.

Conventions
-----------
* ``lp_norm`` is the grid quadrature of the torus ``L^p`` norm.
* ``(-Delta)^{beta/2}`` is the multiplier ``|k|^beta`` and removes the mean.
* The Bessel norm uses the equivalent sum form ``|f|_p + |(-Delta)^{beta/2} f|_p``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import zeta

from .errors import ArgumentError, DegenerateInputError, UnsupportedConfiguration
from .grid import GridFunction, derivative_multiplier, translate

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class NormOrder:
    """Smoothness ``beta`` in ``[0, 4]`` and integrability ``p > 1``."""

    beta: float
    p: float

    def __post_init__(self):
        if not self.p > 1:
            raise ArgumentError(f"p must exceed 1, got {self.p}")
        if not 0 <= self.beta <= 4:
            raise ArgumentError(f"beta must lie in [0, 4], got {self.beta}")


def lp_norm(f: GridFunction, p: float) -> float:
    """``(h^d sum_x |f(x)|^p)^(1/p)``; ``p = inf`` gives the max norm."""
    if p < 1:
        raise ArgumentError("p must be at least 1")
    vals = np.abs(f.nodal)
    if np.isinf(p):
        return float(np.max(vals))
    top = float(np.max(vals, initial=0.0))
    if top == 0.0:
        return 0.0
    return float(top * (f.grid.cell_volume * np.sum((vals / top) ** p)) ** (1.0 / p))


def fractional_laplacian(f: GridFunction, beta: float) -> GridFunction:
    """Multiply the coefficient at ``k`` by ``|k|^beta``; the mean is set to zero."""
    if beta < 0:
        raise ArgumentError("fractional order must be nonnegative")
    kmag = f.grid.kmag
    mult = np.where(kmag > 0, kmag ** beta if beta else 1.0, 0.0)
    return f.with_multiplier(mult)


def bessel_potential(f: GridFunction, beta: float) -> GridFunction:
    """``(I - Delta)^{beta/2} f`` for any real ``beta`` (negative orders smooth)."""
    return f.with_multiplier((1.0 + f.grid.kmag ** 2) ** (beta / 2))


def bessel_norm(f: GridFunction, order: NormOrder | float, p: float | None = None) -> float:
    """``|f|_p + |(-Delta)^{beta/2} f|_p``, reducing to ``|f|_p`` when ``beta = 0``."""
    if not isinstance(order, NormOrder):
        order = NormOrder(float(order), float(p))
    base = lp_norm(f, order.p)
    if order.beta == 0:
        return base
    return base + lp_norm(fractional_laplacian(f, order.beta), order.p)


def signed_order_norm(f: GridFunction, beta: float, p: float) -> float:
    """``H^{beta,p}`` norm for a possibly negative ``beta``.

    Nonnegative orders use :func:`bessel_norm`; negative orders use
    ``|(I - Delta)^{beta/2} f|_p``.
    """
    if beta >= 0:
        return bessel_norm(f, NormOrder(beta, p))
    return lp_norm(bessel_potential(f, beta), p)


# -- Sobolev-Slobodeckij -----------------------------------------------------

def _periodic_kernel(z: np.ndarray, q: float) -> np.ndarray:
    """``sum_m |z + 2 pi m|^{-q}`` for ``z`` in ``(0, 2 pi)`` via the Hurwitz zeta function."""
    u = z / TWO_PI
    return TWO_PI ** (-q) * (zeta(q, u) + zeta(q, 1.0 - u))


def _fractional_seminorm_1d(f: GridFunction, s: float, p: float) -> float:
    grid = f.grid
    n, h = grid.n, grid.h
    q = 1.0 + s * p
    vals = np.asarray(f.nodal).ravel()
    total = 0.0
    shifts = np.arange(1, n)
    kern = _periodic_kernel(shifts * h, q)
    for m, kz in zip(shifts, kern):
        total += kz * np.sum(np.abs(vals - np.roll(vals, -m)) ** p)
    total *= h * h
    # The omitted diagonal: near z = 0 the integrand is |f'(x)|^p |z|^mu, whose
    # trapezoid rule without the singular node is off by -2 zeta(-mu) h^{1+mu} |f'|^p.
    mu = p - 1.0 - s * p
    deriv = f.with_multiplier(derivative_multiplier(grid, 0))
    total += -2.0 * zeta(-mu) * h ** (1 + mu) * h * np.sum(np.abs(deriv.nodal) ** p)
    return float(max(total, 0.0) ** (1.0 / p))


def slobodeckij_seminorm(f: GridFunction, beta: float, p: float) -> float:
    """Double-integral seminorm of order ``beta`` (``d = 1`` only).

    For ``beta`` in ``(0, 1)`` this is
    ``(int_T int_R |f(x) - f(y)|^p / |x - y|^{1 + beta p} dy dx)^{1/p}``,
    evaluated on grid pairs with the periodised kernel.  For ``beta >= 1`` the
    fractional part acts on the ``floor(beta)``-th derivative; integer orders
    give ``|f^{(beta)}|_p``.
    """
    if f.grid.d != 1:
        raise UnsupportedConfiguration("the double-integral seminorm is implemented for d = 1 only")
    if beta <= 0:
        raise ArgumentError("beta must be positive")
    if p < 1:
        raise ArgumentError("p must be at least 1")
    k = int(np.floor(beta))
    frac = beta - k
    g = f
    for _ in range(k):
        g = g.with_multiplier(derivative_multiplier(f.grid, 0))
    if frac < 1e-12:
        return lp_norm(g, p)
    return _fractional_seminorm_1d(g, frac, p)


def slobodeckij_norm(f: GridFunction, beta: float, p: float) -> float:
    """``sum_{j <= floor(beta)} |f^{(j)}|_p`` plus the fractional seminorm."""
    total = lp_norm(f, p)
    g = f
    for _ in range(int(np.floor(beta))):
        g = g.with_multiplier(derivative_multiplier(f.grid, 0))
        total += lp_norm(g, p)
    if beta - np.floor(beta) > 1e-12:
        total += slobodeckij_seminorm(f, beta, p)
    return total


def spectral_seminorm_constant(beta: float) -> float:
    """``int_R |e^{iz} - 1|^2 |z|^{-1-2 beta} dz``: links the ``p = 2`` seminorm to ``|k|^beta``.

    For ``f = sum c_k e^{ikx}`` the squared seminorm equals
    ``2 pi * const * sum |c_k|^2 |k|^{2 beta}``.
    """
    from scipy.special import gamma
    # -4 Gamma(-2b) cos(pi b), rewritten by reflection so b = 1/2 is regular
    return float(2 * np.pi / (gamma(1 + 2 * beta) * np.sin(np.pi * beta)))


# -- inequality checks -------------------------------------------------------

def check_interpolation(f: GridFunction, beta: float, gamma: float, p: float):
    """``(lhs, lhs / (|f|_p^{1-beta/gamma} |(-Delta)^{gamma/2} f|_p^{beta/gamma}))``."""
    if not 0 < beta < gamma:
        raise ArgumentError("need 0 < beta < gamma")
    lhs = lp_norm(fractional_laplacian(f, beta), p)
    if lhs == 0.0:
        return 0.0, 0.0
    theta = beta / gamma
    rhs = lp_norm(f, p) ** (1 - theta) * lp_norm(fractional_laplacian(f, gamma), p) ** theta
    if rhs <= 1e-300:
        raise DegenerateInputError("interpolation denominator vanishes")
    return lhs, lhs / rhs


def check_translation_bound(f: GridFunction, y, beta: float, p: float) -> float:
    """``|f(. + y) - f|_p / (|y|^beta |(-Delta)^{beta/2} f|_p)``."""
    if not 0 < beta < 1:
        raise ArgumentError("beta must lie in (0, 1)")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    ynorm = float(np.linalg.norm(y))
    if ynorm > np.pi + 1e-12:
        raise ArgumentError("shift must not exceed half a period")
    denom = ynorm ** beta * lp_norm(fractional_laplacian(f, beta), p)
    if denom < 1e-14:
        raise DegenerateInputError("translation bound denominator vanishes")
    return lp_norm(translate(f, y) - f, p) / denom


# -- space-time norms --------------------------------------------------------

@dataclass
class SpaceTimeNorms:
    """Components of the parabolic solution norm; ``x_norm`` is their sum."""

    sup_lower: float
    y_norm: float
    dt_norm: float
    x_norm: float
    empirical_constants: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _time_integral(times: np.ndarray, vals: np.ndarray, p: float) -> float:
    return float(np.trapezoid(np.asarray(vals) ** p, times) ** (1.0 / p))


def spacetime_norms(u, alpha: float, p: float, beta: float | None = None,
                    lower_exponent: str = "alpha") -> SpaceTimeNorms:
    """Norms of a stored solution ``u`` (attributes ``times``, ``states``, ``rhs_history``).

    Parameters
    ----------
    beta : float, optional
        Top smoothness, defaults to ``alpha``.
    lower_exponent : {"alpha", "one"}
        The sup and time-derivative slots use order ``beta - alpha`` by
        default, or ``beta - 1`` with ``"one"``.
    """
    beta = alpha if beta is None else beta
    times = np.asarray(u.times, dtype=float)
    if len(times) < 2:
        raise ArgumentError("need at least two time nodes")
    if lower_exponent == "alpha":
        low = beta - alpha
    elif lower_exponent == "one":
        low = beta - 1.0
    else:
        raise ArgumentError("lower_exponent must be 'alpha' or 'one'")
    sup_lower = max(signed_order_norm(s, low, p) for s in u.states)
    top = [signed_order_norm(s, beta, p) for s in u.states]
    y_norm = _time_integral(times, top, p)
    dts = [signed_order_norm(r, low, p) for r in u.rhs_history]
    dt_norm = _time_integral(times, dts, p)
    return SpaceTimeNorms(sup_lower, y_norm, dt_norm, sup_lower + y_norm + dt_norm)


def check_embedding(u, alpha: float, p: float, beta: float | None = None) -> float:
    """Empirical constant in ``sup_t |u(t)|_{W^{beta - alpha/p, p}} <= C |u|_X``.

    Uses the double-integral norm in ``d = 1`` and the Bessel norm in ``d = 2``.
    """
    beta = alpha if beta is None else beta
    s = beta - alpha / p
    norms = spacetime_norms(u, alpha, p, beta)
    if norms.x_norm <= 1e-14:
        raise DegenerateInputError("solution norm vanishes")
    if u.states[0].grid.d == 1 and s > 0:
        lhs = max(slobodeckij_norm(st, s, p) for st in u.states)
    else:
        lhs = max(signed_order_norm(st, s, p) for st in u.states)
    return lhs / norms.x_norm
