"""Stable-type Levy measures built from an atomic spherical measure.

A stable reference measure with order ``alpha`` puts mass
``w_j r^(-1-alpha) dr`` on the ray through each atom direction ``theta_j``.
A :class:`BoundedLevyMeasure` multiplies this by a density ``m(r, theta)``
with ``m_lo <= m <= m_hi``, which sandwiches it between two stable measures.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ArgumentError, ConfigurationError, HypothesisViolation
from .quadrature import integrate_radial

DEFAULT_R_MAX = 16 * np.pi
NONDEGENERACY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SphericalMeasure:
    """Finite atomic measure on the unit sphere: ``sum_j w_j delta_{theta_j}``."""

    directions: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        dirs = np.atleast_2d(np.asarray(self.directions, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if dirs.size == 0 or w.size == 0:
            raise ConfigurationError("spherical measure needs at least one atom")
        if dirs.shape[0] != w.shape[0]:
            raise ConfigurationError("directions and weights differ in length")
        if dirs.shape[1] not in (1, 2):
            raise ConfigurationError(f"directions must live in R^1 or R^2, got dim {dirs.shape[1]}")
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ConfigurationError("every atom direction must have unit norm")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ConfigurationError("atom weights must be finite and strictly positive")
        dirs.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_atoms(cls, atoms, normalize: bool = False) -> "SphericalMeasure":
        """Build from ``[(direction, weight), ...]``."""
        if len(atoms) == 0:
            raise ConfigurationError("spherical measure needs at least one atom")
        dirs = np.array([np.atleast_1d(np.asarray(a[0], dtype=float)) for a in atoms])
        if normalize:
            dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
        return cls(dirs, np.array([float(a[1]) for a in atoms]))

    @classmethod
    def uniform(cls, d: int, count: int = 16, total: float | None = None) -> "SphericalMeasure":
        """Equal weights on equispaced directions (``d = 1`` always gives +-1)."""
        if d == 1:
            dirs = np.array([[1.0], [-1.0]])
        else:
            phi = 2 * np.pi * np.arange(count) / count
            dirs = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        w = np.full(len(dirs), 1.0 if total is None else total / len(dirs))
        return cls(dirs, w)

    @property
    def d(self) -> int:
        return self.directions.shape[1]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def rotated(self, angle: float) -> "SphericalMeasure":
        if self.d != 2:
            raise ArgumentError("rotation only defined for d = 2")
        c, s = np.cos(angle), np.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        dirs = self.directions @ rot.T
        dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
        return SphericalMeasure(dirs, self.weights.copy())

    def scaled(self, c: float) -> "SphericalMeasure":
        return SphericalMeasure(self.directions.copy(), self.weights * c)


# -- radial densities --------------------------------------------------------

class Density:
    """Density ``m(r, theta)`` modulating a stable measure.

    ``far_radius`` is the radius beyond which ``m`` no longer depends on ``r``;
    integrals past it are done analytically.
    """

    name = "density"
    m_lo: float = 1.0
    m_hi: float = 1.0
    far_radius: float = 0.0

    def __call__(self, r, theta):
        raise NotImplementedError

    def is_even(self) -> bool:
        return True

    def describe(self) -> str:
        return self.name


class ConstantDensity(Density):
    def __init__(self, c: float = 1.0):
        if c <= 0:
            raise ConfigurationError("constant density must be positive")
        self.c = float(c)
        self.m_lo = self.m_hi = self.c
        self.name = f"constant:{self.c:g}" if self.c != 1.0 else "constant"

    def __call__(self, r, theta):
        r = np.asarray(r, dtype=float)
        return np.full(np.broadcast_shapes(r.shape, np.shape(theta)[:-1]), self.c)


class RadialPowerDensity(Density):
    """``m(r) = 1 + (|r| ^ 1)^gamma / 2``: values in ``[1, 3/2]``, radially constant past ``r = 1``."""

    far_radius = 1.0

    def __init__(self, gamma: float):
        if gamma <= 0:
            raise ConfigurationError("radial-power exponent must be positive")
        self.gamma = float(gamma)
        self.m_lo, self.m_hi = 1.0, 1.5
        self.name = f"radial-power:{self.gamma:g}"

    def __call__(self, r, theta):
        r = np.asarray(r, dtype=float)
        val = 1.0 + 0.5 * np.minimum(np.abs(r), 1.0) ** self.gamma
        return np.broadcast_to(val, np.broadcast_shapes(r.shape, np.shape(theta)[:-1])).copy()


class AngularWobbleDensity(Density):
    """``m(theta) = 1 + delta cos(2 phi)`` with ``phi`` the polar angle; even in ``theta``."""

    def __init__(self, delta: float):
        if not abs(delta) < 1:
            raise ConfigurationError("angular-wobble amplitude must satisfy |delta| < 1")
        self.delta = float(delta)
        self.m_lo, self.m_hi = 1.0 - abs(self.delta), 1.0 + abs(self.delta)
        self.name = f"angular-wobble:{self.delta:g}"

    def __call__(self, r, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape[-1] == 1:
            phi = np.where(theta[..., 0] >= 0, 0.0, np.pi)
        else:
            phi = np.arctan2(theta[..., 1], theta[..., 0])
        val = 1.0 + self.delta * np.cos(2 * phi)
        return np.broadcast_to(val, np.broadcast_shapes(np.shape(r), val.shape)).copy()


class CallableDensity(Density):
    """Wrap an arbitrary vectorised callable with declared bounds."""

    def __init__(self, func, m_lo: float, m_hi: float, far_radius: float = DEFAULT_R_MAX,
                 even: bool = False, name: str = "callable"):
        self.func, self.m_lo, self.m_hi = func, float(m_lo), float(m_hi)
        self.far_radius, self._even, self.name = float(far_radius), even, name

    def __call__(self, r, theta):
        return np.asarray(self.func(np.asarray(r, dtype=float), np.asarray(theta, dtype=float)), dtype=float)

    def is_even(self) -> bool:
        return self._even


def parse_density(spec: str) -> Density:
    """Parse ``"constant"``, ``"constant:c"``, ``"radial-power:g"`` or ``"angular-wobble:d"``."""
    name, _, arg = spec.partition(":")
    try:
        if name == "constant":
            return ConstantDensity(float(arg) if arg else 1.0)
        if name == "radial-power":
            return RadialPowerDensity(float(arg))
        if name == "angular-wobble":
            return AngularWobbleDensity(float(arg))
    except ValueError as exc:
        raise ConfigurationError(f"bad density parameter in {spec!r}") from exc
    raise ConfigurationError(f"unknown density {spec!r}")


# -- measures ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StableLevyMeasure:
    alpha: float
    sigma: SphericalMeasure

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise ConfigurationError(f"alpha must lie in (0, 2), got {self.alpha}")
        # int 1 ^ |x|^2 dnu = sum_j w_j (1/(2 - alpha) + 1/alpha)
        mass = self.sigma.total_mass * (1 / (2 - self.alpha) + 1 / self.alpha)
        if not np.isfinite(mass):
            raise ConfigurationError("Levy integrability check failed")

    @property
    def d(self) -> int:
        return self.sigma.d


@dataclass(frozen=True, eq=False)
class BoundedLevyMeasure:
    """``nu(dy) = m(y) nu_ref(dy)`` so ``m_lo nu_ref <= nu <= m_hi nu_ref``."""

    reference: StableLevyMeasure
    density: Density = field(default_factory=ConstantDensity)
    r_max: float = DEFAULT_R_MAX

    def __post_init__(self):
        m = self.density
        if not 0 < m.m_lo <= m.m_hi:
            raise ConfigurationError("density bounds must satisfy 0 < m_lo <= m_hi")
        r = np.geomspace(1e-6, 4 * max(self.r_max, 1.0), 97)
        vals = np.array([m(r, th[None, :]) for th in self.directions])
        if np.any(vals < m.m_lo - 1e-12) or np.any(vals > m.m_hi + 1e-12):
            raise ConfigurationError("density leaves its declared [m_lo, m_hi] range")

    @classmethod
    def stable(cls, alpha: float, sigma: SphericalMeasure, density: Density | None = None,
               r_max: float = DEFAULT_R_MAX) -> "BoundedLevyMeasure":
        return cls(StableLevyMeasure(alpha, sigma), density or ConstantDensity(), r_max)

    @property
    def alpha(self) -> float:
        return self.reference.alpha

    @property
    def sigma(self) -> SphericalMeasure:
        return self.reference.sigma

    @property
    def d(self) -> int:
        return self.sigma.d

    @property
    def directions(self) -> np.ndarray:
        return self.sigma.directions

    @property
    def weights(self) -> np.ndarray:
        return self.sigma.weights

    @property
    def m_lo(self) -> float:
        return self.density.m_lo

    @property
    def m_hi(self) -> float:
        return self.density.m_hi

    @property
    def far_radius(self) -> float:
        return self.density.far_radius

    def m(self, r, j: int):
        return self.density(r, self.directions[j][None, :])

    def with_density_scale(self, c: float) -> "BoundedLevyMeasure":
        """The measure ``c * nu`` (used for intensities ``lambda nu``)."""
        return BoundedLevyMeasure(StableLevyMeasure(self.alpha, self.sigma.scaled(c)), self.density, self.r_max)

    def radial_integral(self, j: int, a: float, b: float, power: float) -> float:
        """``int_a^b m(r, theta_j) r^(-power) dr`` with an exact far-field tail (``b`` may be inf)."""
        if b <= a:
            return 0.0
        split = min(b, max(a, self.far_radius))
        total = 0.0
        if split > a:
            total += float(integrate_radial(lambda r: self.m(r, j) * r ** (-power), a, split))
        if b > split:
            m_far = float(self.m(np.array([split]), j)[0])
            if np.isinf(b):
                if power <= 1:
                    return np.inf
                total += m_far * split ** (1 - power) / (power - 1)
            elif abs(power - 1) < 1e-14:
                total += m_far * np.log(b / split)
            else:
                total += m_far * (split ** (1 - power) - b ** (1 - power)) / (power - 1)
        return total

    def mass_outside(self, eps: float, b: float = np.inf) -> float:
        """``nu({eps < |y| < b})``."""
        return float(sum(w * self.radial_integral(j, eps, b, 1 + self.alpha)
                         for j, w in enumerate(self.weights)))

    def first_moment(self, a: float, b: float) -> np.ndarray:
        """``int_{a < |y| < b} y nu(dy)``."""
        out = np.zeros(self.d)
        for j, (th, w) in enumerate(zip(self.directions, self.weights)):
            out += w * th * self.radial_integral(j, a, b, self.alpha)
        return out

    def second_moment(self, a: float, b: float) -> np.ndarray:
        """``int_{a < |y| < b} y y^T nu(dy)``."""
        out = np.zeros((self.d, self.d))
        for j, (th, w) in enumerate(zip(self.directions, self.weights)):
            out += w * np.outer(th, th) * self.radial_integral(j, a, b, self.alpha - 1)
        return out

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        """Atoms come in ``+-theta`` pairs with matching ``w m`` (odd parts cancel)."""
        dirs, w = self.directions, self.weights
        r = np.geomspace(1e-4, 2 * max(self.r_max, 1.0), 33)
        for j, th in enumerate(dirs):
            match = np.nonzero(np.all(np.abs(dirs + th) < 1e-12, axis=1))[0]
            if len(match) == 0:
                return False
            i = match[0]
            if np.max(np.abs(w[j] * self.m(r, j) - w[i] * self.m(r, i))) > tol * max(1.0, w[j]):
                return False
        return True


def check_nondegenerate(sigma: SphericalMeasure, alpha: float, resolution: int = 256) -> tuple[bool, float]:
    """Minimum over sampled unit ``theta0`` of ``int |theta0 . theta|^alpha Sigma(dtheta)``."""
    if sigma.directions.size == 0:
        raise ConfigurationError("empty spherical measure")
    if sigma.d == 1:
        probes = np.array([[1.0], [-1.0]])
    else:
        if resolution < 64:
            raise ArgumentError("resolution must be at least 64 directions")
        phi = 2 * np.pi * np.arange(resolution) / resolution
        probes = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    vals = np.abs(probes @ sigma.directions.T) ** alpha @ sigma.weights
    min_value = float(vals.min())
    return min_value > NONDEGENERACY_TOL, min_value


def check_alpha1_cancellation(nu: BoundedLevyMeasure, r: float, R: float) -> np.ndarray:
    """Annulus integral ``int_{r < |y| < R} y nu(dy)``; identically zero unless ``alpha = 1``."""
    if not 0 < r < R:
        raise ArgumentError(f"need 0 < r < R, got r={r}, R={R}")
    if nu.alpha != 1:
        return np.zeros(nu.d)
    return nu.first_moment(r, R)


def require_alpha1_cancellation(nu: BoundedLevyMeasure, tol: float = 1e-8) -> float:
    """Raise :class:`HypothesisViolation` if the odd part survives on some annulus."""
    if nu.alpha != 1:
        return 0.0
    worst = 0.0
    edges = [1e-4, 1e-2, 0.5, 1.0, 2.0, nu.r_max]
    for r, R in zip(edges[:-1], edges[1:]):
        worst = max(worst, float(np.linalg.norm(check_alpha1_cancellation(nu, r, R))))
    if worst > tol:
        raise HypothesisViolation(f"alpha = 1 cancellation fails: |int y nu(dy)| = {worst:.3e}")
    return worst


@dataclass(frozen=True)
class TailMass:
    """``nu(eps < |y| < R_max)`` by quadrature, plus an upper bound for ``|y| > R_max``."""

    quadrature: float
    remainder: float

    @property
    def total(self) -> float:
        return self.quadrature + self.remainder

    def __float__(self) -> float:
        return self.total


def tail_mass(nu: BoundedLevyMeasure, eps: float) -> TailMass:
    if eps <= 0:
        raise ArgumentError("eps must be positive")
    R = nu.r_max
    quad = nu.mass_outside(eps, R) if eps < R else 0.0
    remainder = float(nu.weights.sum() * nu.m_hi * max(eps, R) ** (-nu.alpha) / nu.alpha)
    return TailMass(quad, remainder)
