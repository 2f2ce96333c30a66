"""Strict JSON run configuration and builders for library objects.

Every section accepts only its documented keys.  Physics parameters (the
stability index, the spherical atoms, the kernel and the drift) have no
defaults; numerical knobs (grid size, step counts, cut-off radius) do.

Example
-------
.. code-block:: json

    {
      "measure": {"alpha": 1.5, "atoms": [{"direction": [1], "weight": 1},
                                          {"direction": [-1], "weight": 1}],
                  "density": "constant"},
      "coefficient": {"type": "constant", "value": 1.0},
      "drift": {"type": "zero"},
      "grid": {"n": 64},
      "problem": {"T": 1.0, "p": 2.0,
                  "initial": {"modes": [[1]], "coeffs": [[0.0, -1.0]]}},
      "solver": {"route": "duhamel", "n_steps": 16}
    }
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .coefficients import ConstantDrift, ConstantKernel, CosineDrift, SeparableKernel, ZeroDrift
from .errors import ConfigurationError
from .grid import TorusGrid, trig_polynomial
from .measure import BoundedLevyMeasure, SphericalMeasure, parse_density
from .operator import QuadratureScheme

__all__ = ["RunConfig", "load_config", "parse_config", "config_digest", "TrigData"]

_SCHEMA = {
    "measure": {"alpha", "atoms", "density"},
    "coefficient": {"type", "value", "base", "x_amp", "y_amp", "xy_amp", "y_exp", "x_mode", "x_phase", "time_amp"},
    "drift": {"type", "value", "amp", "mode", "phase"},
    "grid": {"n"},
    "quadrature": {"r_min", "ratio", "order"},
    "problem": {"T", "p", "initial", "forcing"},
    "solver": {"route", "n_steps", "tol"},
    "nonlinear": {"potential", "kappa"},
    "sampler": {"r_cut", "n_paths", "seed", "t_end", "n_nodes", "gaussian_correction", "lam", "vartheta"},
    "verify": {"ensemble_size", "seed", "n", "alphas", "ps", "n_paths"},
}
_TRIG_KEYS = {"modes", "coeffs", "time_amp"}
_ATOM_KEYS = {"direction", "weight"}
ROUTES = ("duhamel", "imex", "continuity", "nonlinear")


def _strict(block, allowed: set, where: str) -> dict:
    if not isinstance(block, dict):
        raise ConfigurationError(f"{where} must be an object")
    extra = set(block) - allowed
    if extra:
        raise ConfigurationError(f"unknown keys in {where}: {sorted(extra)}")
    return block


def _require(block: dict, key: str, where: str):
    if key not in block:
        raise ConfigurationError(f"{where}.{key} is required")
    return block[key]


def config_digest(raw: dict) -> str:
    """SHA-256 of the canonical JSON form (sorted keys, compact separators)."""
    text = json.dumps(raw, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class TrigData:
    """``sum_j Re(c_j (1 + time_amp t) e^{i k_j.x})`` read from a config block."""

    modes: np.ndarray
    coeffs: np.ndarray
    time_amp: float = 0.0

    @classmethod
    def parse(cls, block, d: int, where: str) -> "TrigData":
        _strict(block, _TRIG_KEYS, where)
        modes = np.asarray(_require(block, "modes", where), dtype=float)
        raw = _require(block, "coeffs", where)
        try:
            coeffs = np.array([complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c) for c in raw])
        except (TypeError, ValueError, IndexError) as exc:
            raise ConfigurationError(f"{where}.coeffs must hold numbers or [re, im] pairs") from exc
        modes = modes.reshape(len(coeffs), -1) if modes.size else modes.reshape(0, d)
        if modes.shape != (len(coeffs), d):
            raise ConfigurationError(f"{where}.modes must have one length-{d} entry per coefficient")
        return cls(modes, coeffs, float(block.get("time_amp", 0.0)))

    def at(self, grid: TorusGrid, t: float = 0.0):
        return trig_polynomial(grid, self.modes, self.coeffs * (1.0 + self.time_amp * t))


class RunConfig:
    """Parsed configuration with lazy builders; ``raw`` keeps the original mapping."""

    def __init__(self, raw: dict):
        _strict(raw, set(_SCHEMA), "config")
        for key, allowed in _SCHEMA.items():
            if key in raw:
                _strict(raw[key], allowed, key)
        self.raw = raw
        self.digest = config_digest(raw)

    def section(self, name: str) -> dict:
        return self.raw.get(name, {})

    # -- physics -------------------------------------------------------------
    @property
    def alpha(self) -> float:
        return float(_require(self._need("measure"), "alpha", "measure"))

    def _need(self, name: str) -> dict:
        if name not in self.raw:
            raise ConfigurationError(f"section {name!r} is required")
        return self.raw[name]

    def measure(self) -> BoundedLevyMeasure:
        block = self._need("measure")
        atoms = _require(block, "atoms", "measure")
        if not isinstance(atoms, list) or not atoms:
            raise ConfigurationError("measure.atoms must be a non-empty list")
        parsed = []
        for i, a in enumerate(atoms):
            _strict(a, _ATOM_KEYS, f"measure.atoms[{i}]")
            parsed.append((_require(a, "direction", f"measure.atoms[{i}]"), float(_require(a, "weight", f"measure.atoms[{i}]"))))
        sigma = SphericalMeasure.from_atoms(parsed)
        density = parse_density(block.get("density", "constant"))
        return BoundedLevyMeasure.stable(self.alpha, sigma, density)

    @property
    def d(self) -> int:
        return self.measure().d

    def coefficient(self):
        block = self._need("coefficient")
        kind = _require(block, "type", "coefficient")
        if kind == "constant":
            return ConstantKernel(float(_require(block, "value", "coefficient")))
        if kind == "separable":
            kw = {k: block[k] for k in ("base", "x_amp", "y_amp", "xy_amp", "y_exp", "x_mode", "x_phase", "time_amp")
                  if k in block}
            return SeparableKernel(**kw)
        raise ConfigurationError(f"unknown coefficient type {kind!r}")

    def drift(self):
        block = self._need("drift")
        kind = _require(block, "type", "drift")
        if kind == "zero":
            return ZeroDrift()
        if kind == "constant":
            return ConstantDrift(_require(block, "value", "drift"))
        if kind == "cosine":
            return CosineDrift(float(_require(block, "amp", "drift")), mode=block.get("mode", (1,)),
                               phase=float(block.get("phase", 0.0)))
        raise ConfigurationError(f"unknown drift type {kind!r}")

    # -- numerics ------------------------------------------------------------
    def grid(self) -> TorusGrid:
        n = int(self.section("grid").get("n", 64 if self.d == 1 else 32))
        return TorusGrid(self.d, n)

    def scheme(self, grid: TorusGrid) -> QuadratureScheme:
        block = self.section("quadrature")
        base = QuadratureScheme.for_grid(grid)
        return QuadratureScheme(float(block.get("r_min", base.r_min)), base.r_max,
                                float(block.get("ratio", base.ratio)), int(block.get("order", base.order)))

    def initial(self, grid: TorusGrid):
        block = self.section("problem")
        if "initial" not in block:
            raise ConfigurationError("problem.initial is required")
        return TrigData.parse(block["initial"], grid.d, "problem.initial").at(grid)

    def forcing(self, grid: TorusGrid):
        block = self.section("problem")
        if "forcing" not in block:
            return None
        data = TrigData.parse(block["forcing"], grid.d, "problem.forcing")
        return lambda t: data.at(grid, t)

    def problem(self, check: bool = True):
        from .solver import Problem
        grid = self.grid()
        block = self.section("problem")
        return Problem(self.measure(), self.initial(grid), self.coefficient(), self.drift(), self.forcing(grid),
                       float(block.get("T", 1.0)), float(block.get("p", 2.0)), self.scheme(grid), check)


def parse_config(text: str) -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"invalid JSON: {exc}") from exc
    return RunConfig(raw)


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigurationError(f"cannot read config: {exc}") from exc
