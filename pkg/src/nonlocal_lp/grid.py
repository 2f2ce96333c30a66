"""Periodic torus grids and grid functions with paired nodal/spectral data.

Everything lives on the torus ``[0, 2*pi)^d`` with ``d`` in ``{1, 2}``.  A
:class:`GridFunction` stores nodal samples together with the Fourier
coefficients ``c_k`` normalised so that ``f(x) = sum_k c_k exp(i k.x)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError

TWO_PI = 2.0 * np.pi

DEFAULT_POINTS = {1: 128, 2: 64}


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid with ``n`` points per axis on the ``d``-torus of period 2*pi."""

    d: int
    n: int = 0

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ConfigurationError(f"dimension must be 1 or 2, got {self.d}")
        if self.n == 0:
            object.__setattr__(self, "n", DEFAULT_POINTS[self.d])
        n = int(self.n)
        if n < 8 or n & (n - 1):
            raise ConfigurationError(f"points per axis must be a power of two >= 8, got {self.n}")
        object.__setattr__(self, "n", n)

    @property
    def period(self) -> float:
        return TWO_PI

    @property
    def h(self) -> float:
        return TWO_PI / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    @cached_property
    def axis(self) -> np.ndarray:
        return np.arange(self.n) * self.h

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Meshgrid of nodal coordinates, one array of ``shape`` per axis."""
        return tuple(np.meshgrid(*([self.axis] * self.d), indexing="ij"))

    @cached_property
    def points(self) -> np.ndarray:
        """Nodal coordinates flattened to shape ``(size, d)``."""
        return np.stack([c.ravel() for c in self.coords], axis=-1)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Integer wavenumbers along one axis in FFT order (Nyquist is ``-n/2``)."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n)

    @cached_property
    def kvec(self) -> np.ndarray:
        """Wave vectors in FFT order, shape ``shape + (d,)``."""
        ks = np.meshgrid(*([self.wavenumbers] * self.d), indexing="ij")
        return np.stack(ks, axis=-1)

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(np.sum(self.kvec**2, axis=-1))

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True on modes having a Nyquist component along some axis."""
        return np.any(self.kvec == -self.n // 2, axis=-1)

    def sample(self, func) -> "GridFunction":
        """Evaluate ``func(*coords)`` on the grid."""
        return GridFunction.from_nodal(self, func(*self.coords))

    def zeros(self) -> "GridFunction":
        return GridFunction.from_nodal(self, np.zeros(self.shape))

    def constant(self, c: float) -> "GridFunction":
        return GridFunction.from_nodal(self, np.full(self.shape, c))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """A field on a :class:`TorusGrid` with both nodal and spectral values.

    Construct through :meth:`from_nodal` or :meth:`from_spectral`; both
    representations are filled eagerly and the arrays are made read-only.
    """

    grid: TorusGrid
    nodal: np.ndarray
    spectral: np.ndarray
    is_real: bool = field(default=True)

    @classmethod
    def from_nodal(cls, grid: TorusGrid, values) -> "GridFunction":
        values = np.asarray(values)
        if values.shape != grid.shape:
            values = np.broadcast_to(values, grid.shape)
        is_real = not np.iscomplexobj(values)
        nodal = np.array(values, dtype=float if is_real else complex)
        spectral = np.fft.fftn(nodal) / grid.size
        nodal.flags.writeable = False
        spectral.flags.writeable = False
        return cls(grid, nodal, spectral, is_real)

    @classmethod
    def from_spectral(cls, grid: TorusGrid, coeffs, real: bool | None = None) -> "GridFunction":
        coeffs = np.array(coeffs, dtype=complex)
        if coeffs.shape != grid.shape:
            raise ConfigurationError(f"spectral shape {coeffs.shape} does not match grid {grid.shape}")
        nodal = np.fft.ifftn(coeffs) * grid.size
        if real is None:
            real = bool(np.max(np.abs(nodal.imag), initial=0.0) <= 1e-13 * max(1.0, np.max(np.abs(nodal))))
        if real:
            nodal = nodal.real.copy()
            coeffs = np.fft.fftn(nodal) / grid.size
        nodal.flags.writeable = False
        coeffs.flags.writeable = False
        return cls(grid, nodal, coeffs, bool(real))

    def with_multiplier(self, mult) -> "GridFunction":
        """Apply a Fourier multiplier; real inputs stay real (Nyquist symmetrised)."""
        coeffs = self.spectral * mult
        nodal = np.fft.ifftn(coeffs) * self.grid.size
        if self.is_real:
            return GridFunction.from_nodal(self.grid, nodal.real)
        return GridFunction.from_nodal(self.grid, nodal)

    @property
    def mean(self):
        return self.spectral.flat[0]

    def __add__(self, other):
        if isinstance(other, GridFunction):
            return GridFunction.from_nodal(self.grid, self.nodal + other.nodal)
        return GridFunction.from_nodal(self.grid, self.nodal + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            return GridFunction.from_nodal(self.grid, self.nodal - other.nodal)
        return GridFunction.from_nodal(self.grid, self.nodal - other)

    def __neg__(self):
        return GridFunction.from_nodal(self.grid, -self.nodal)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            return GridFunction.from_nodal(self.grid, self.nodal * other.nodal)
        return GridFunction.from_nodal(self.grid, self.nodal * other)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return GridFunction.from_nodal(self.grid, self.nodal / c)

    def evaluate(self, points) -> np.ndarray:
        """Evaluate the trigonometric interpolant at arbitrary points ``(m, d)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        k = self.grid.kvec.reshape(-1, self.grid.d)
        c = self.spectral.ravel()
        vals = np.exp(1j * pts @ k.T) @ c
        return vals.real if self.is_real else vals


def transform(f: GridFunction) -> GridFunction:
    """Return ``f`` with its spectral values populated.

    Spectral data is computed at construction, so this is the identity; it
    exists as the explicit nodal-to-spectral entry point.
    """
    return f


def translate(f: GridFunction, y) -> GridFunction:
    """Return ``g(x) = f(x + y)`` for any real shift ``y`` via spectral phases."""
    y = np.broadcast_to(np.asarray(y, dtype=float), (f.grid.d,))
    phase = np.exp(1j * np.tensordot(f.grid.kvec, y, axes=([-1], [0])))
    return f.with_multiplier(phase)


def derivative_multiplier(grid: TorusGrid, axis: int) -> np.ndarray:
    """Multiplier ``i k_axis`` with the Nyquist component removed."""
    k = grid.kvec[..., axis].astype(float)
    k = np.where(k == -grid.n // 2, 0.0, k)
    return 1j * k


def gradient(f: GridFunction) -> list[GridFunction]:
    """Spectral gradient, one component per axis."""
    return [f.with_multiplier(derivative_multiplier(f.grid, j)) for j in range(f.grid.d)]


def hessian(f: GridFunction) -> list[list[GridFunction]]:
    """Spectral Hessian ``H[i][j] = d_i d_j f``."""
    g = f.grid
    out = []
    for i in range(g.d):
        row = []
        for j in range(g.d):
            if i == j:
                mult = -(g.kvec[..., i].astype(float) ** 2)
            else:
                mult = derivative_multiplier(g, i) * derivative_multiplier(g, j)
            row.append(f.with_multiplier(mult))
        out.append(row)
    return out


def trig_polynomial(grid: TorusGrid, modes, coeffs) -> GridFunction:
    """Real trigonometric polynomial ``sum_j Re(c_j exp(i k_j.x))``."""
    x = grid.coords
    vals = np.zeros(grid.shape)
    for k, c in zip(modes, coeffs):
        k = np.broadcast_to(np.asarray(k, dtype=float), (grid.d,))
        phase = sum(kk * xx for kk, xx in zip(k, x))
        vals = vals + np.real(c * np.exp(1j * phase))
    return GridFunction.from_nodal(grid, vals)


def random_trig_polynomial(grid: TorusGrid, rng: np.random.Generator, max_mode: int = 8,
                           mean_zero: bool = True, min_mode: int = 1) -> GridFunction:
    """Random real trig polynomial with Gaussian coefficients on ``min_mode <= |k|_inf <= max_mode``."""
    coeffs = np.zeros(grid.shape, dtype=complex)
    kv = grid.kvec
    kinf = np.max(np.abs(kv), axis=-1)
    mask = (kinf >= min_mode) & (kinf <= max_mode) & ~grid.nyquist_mask
    coeffs[mask] = rng.standard_normal(mask.sum()) + 1j * rng.standard_normal(mask.sum())
    if not mean_zero:
        coeffs.flat[0] = rng.standard_normal()
    nodal = (np.fft.ifftn(coeffs) * grid.size).real
    return GridFunction.from_nodal(grid, nodal)


def random_trig_modes(rng: np.random.Generator, d: int, max_mode: int = 8, min_mode: int = 1,
                      decay: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``(modes, coeffs)`` for a real trig polynomial independently of any grid.

    Modes with ``min_mode <= |k|_inf <= max_mode`` are enumerated in a fixed
    order and given complex Gaussian coefficients scaled by ``(1 + |k|)^-decay``.
    The same generator state therefore yields the same function on every grid
    fine enough to resolve ``max_mode``.
    """
    ranges = [np.arange(-max_mode, max_mode + 1)] * d
    modes = np.stack([m.ravel() for m in np.meshgrid(*ranges, indexing="ij")], axis=-1)
    kinf = np.max(np.abs(modes), axis=-1)
    modes = modes[(kinf >= min_mode) & (kinf <= max_mode)]
    n = len(modes)
    coeffs = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / (1.0 + np.linalg.norm(modes, axis=1)) ** decay
    return modes, coeffs
