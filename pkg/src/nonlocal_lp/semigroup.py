"""Levy processes driven by ``lambda(t) dt nu(dy)`` and the semigroups they generate.

Paths are compound Poisson in the jumps with ``|y| > r_cut``; the small jumps
are replaced by a Gaussian with matching covariance (plus their mean when
``alpha < 1``, where small jumps are not compensated).  Every path owns a
Philox stream keyed by ``(seed, path index)`` so results do not depend on
how paths are batched.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate

from .errors import ConfigurationError, NumericalError
from .grid import GridFunction
from .measure import BoundedLevyMeasure, require_alpha1_cancellation
from .operator import QuadratureScheme, levy_symbol

_MAJORANT_SAMPLES = 33
_MAJORANT_PIECES = 16


def _as_time_function(value, d: int | None = None):
    if callable(value):
        return value
    if d is None:
        c = float(value)
        return lambda t: c
    v = np.broadcast_to(np.asarray(value, dtype=float), (d,)).copy()
    return lambda t: v


@dataclass(frozen=True)
class SamplerConfig:
    """Settings for path sampling.

    Parameters
    ----------
    r_cut : float
        Jumps with ``|y| <= r_cut`` are not sampled individually.
    gaussian_correction : bool
        Replace the small jumps by a Gaussian (else drop them and report the variance).
    n_paths : int
    seed : int
    lam : float or callable
        Intensity ``lambda(t)``.
    vartheta : float, array or callable
        Drift ``vartheta(t)``.
    lambda_floor : float, optional
        Declared lower bound ``lambda_0``; defaults to the sampled minimum.
    chunk : int
        Paths per batch in ensemble averages.
    """

    r_cut: float
    gaussian_correction: bool = True
    n_paths: int = 10_000
    seed: int = 0
    lam: object = 1.0
    vartheta: object = 0.0
    lambda_floor: float | None = None
    chunk: int = 512
    allow_zero_intensity: bool = field(default=False, repr=False)

    def __post_init__(self):
        if not 0 < self.r_cut <= 1:
            raise ConfigurationError("r_cut must lie in (0, 1]")
        if self.n_paths < 100 and not self.allow_zero_intensity:
            raise ConfigurationError("need at least 100 paths")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")
        if self.lambda_floor is not None and self.lambda_floor <= 0 and not self.allow_zero_intensity:
            raise ConfigurationError("lambda_0 must be positive")

    def intensity(self):
        return _as_time_function(self.lam)

    def drift(self, d: int):
        return _as_time_function(self.vartheta, d)

    def validate_intensity(self, s: float, t: float) -> float:
        """Check ``lambda >= lambda_0`` on a sample of ``[s, t]``; returns the floor used."""
        lam = self.intensity()
        ts = np.linspace(s, t, 257)
        vals = np.array([lam(x) for x in ts])
        floor = float(np.min(vals)) if self.lambda_floor is None else self.lambda_floor
        if np.any(vals < floor - 1e-12):
            raise ConfigurationError("lambda(t) drops below the declared floor")
        if floor <= 0 and not self.allow_zero_intensity:
            raise ConfigurationError("lambda(t) must stay positive")
        return floor


@dataclass
class LevyPathSample:
    """One path: ``X`` at ``time_nodes``, the big-jump ledger and the Gaussian pieces."""

    time_nodes: np.ndarray
    increments: np.ndarray
    jump_times: np.ndarray
    jumps: np.ndarray
    gaussian_increments: np.ndarray
    deterministic_increments: np.ndarray
    seed_used: int
    path_index: int
    dropped_variance: np.ndarray | None = None

    @property
    def jump_ledger(self) -> list:
        return list(zip(self.jump_times.tolist(), [tuple(j) for j in self.jumps]))

    def recompute(self) -> np.ndarray:
        """Rebuild ``X`` at the nodes from the ledger and the stored continuous parts."""
        d = self.increments.shape[1]
        out = np.zeros((len(self.time_nodes), d))
        for i in range(1, len(self.time_nodes)):
            lo, hi = self.time_nodes[i - 1], self.time_nodes[i]
            sel = (self.jump_times > lo) & (self.jump_times <= hi)
            step = self.deterministic_increments[i - 1] + self.gaussian_increments[i - 1] + self.jumps[sel].sum(axis=0)
            out[i] = out[i - 1] + step
        return out

    def to_csv(self) -> str:
        d = self.jumps.shape[1] if self.jumps.ndim == 2 else 1
        head = "time," + ",".join(f"jump{i + 1}" for i in range(d))
        rows = [f"{t!r}," + ",".join(repr(float(v)) for v in j) for t, j in zip(self.jump_times, self.jumps)]
        return "\n".join([head] + rows) + "\n"


# -- measure moments over small balls -----------------------------------------

def _radial_from_zero(nu: BoundedLevyMeasure, j: int, b: float, power: float) -> float:
    """``int_0^b m(r, theta_j) r^{-power} dr`` for ``power < 1``."""
    a = b * 1e-9
    head = float(nu.m(np.array([a]), j)[0]) * a ** (1 - power) / (1 - power)
    return head + nu.radial_integral(j, a, b, power)


def small_jump_mean(nu: BoundedLevyMeasure, r_cut: float) -> np.ndarray:
    """``int_{|y| <= r_cut} y nu(dy)`` (finite only for ``alpha < 1``)."""
    out = np.zeros(nu.d)
    for j, (th, w) in enumerate(zip(nu.directions, nu.weights)):
        out += w * th * _radial_from_zero(nu, j, r_cut, nu.alpha)
    return out


def small_jump_covariance(nu: BoundedLevyMeasure, r_cut: float) -> np.ndarray:
    """``int_{|y| <= r_cut} y y^T nu(dy)``."""
    out = np.zeros((nu.d, nu.d))
    for j, (th, w) in enumerate(zip(nu.directions, nu.weights)):
        out += w * np.outer(th, th) * _radial_from_zero(nu, j, r_cut, nu.alpha - 1)
    return out


def big_jump_compensator(nu: BoundedLevyMeasure, r_cut: float) -> np.ndarray:
    """Per-unit-intensity compensator of the sampled jumps."""
    if nu.alpha > 1:
        return nu.first_moment(r_cut, np.inf)
    if nu.alpha == 1 and r_cut < 1:
        return nu.first_moment(r_cut, 1.0)
    return np.zeros(nu.d)


# -- sampling ----------------------------------------------------------------

@dataclass(frozen=True)
class _Plan:
    """Everything a path needs besides its random stream."""

    s: float
    t: float
    edges: np.ndarray
    lam_max: np.ndarray
    lam_integral: np.ndarray
    drift: np.ndarray
    proposal_rate: float
    atom_cdf: np.ndarray
    compensator: np.ndarray
    gauss_mean: np.ndarray
    gauss_chol: np.ndarray
    dropped_cov: np.ndarray | None


def _plan(nu: BoundedLevyMeasure, cfg: SamplerConfig, s: float, t: float, nodes=None) -> _Plan:
    if nu.alpha == 1:
        require_alpha1_cancellation(nu)
    if t > s:
        cfg.validate_intensity(s, t)
    lam = cfg.intensity()
    drift = cfg.drift(nu.d)
    if nodes is None:
        nodes = np.array([s, t])
    nodes = np.asarray(nodes, dtype=float)
    pieces = np.unique(np.concatenate([nodes, np.linspace(s, t, _MAJORANT_PIECES + 1)]))
    lam_max, lam_int, drift_int = [], [], []
    for lo, hi in zip(pieces[:-1], pieces[1:]):
        vals = np.array([lam(x) for x in np.linspace(lo, hi, _MAJORANT_SAMPLES)])
        # a smooth intensity can peak between samples; pad by the largest sample-to-sample change
        pad = float(np.max(np.abs(np.diff(vals)))) if len(vals) > 1 else 0.0
        lam_max.append((vals.max() + pad) * (1 + 1e-9))
        lam_int.append(integrate.quad(lam, lo, hi, epsabs=1e-13, epsrel=1e-12)[0])
        drift_int.append([integrate.quad(lambda x, i=i: drift(x)[i], lo, hi, epsabs=1e-13, epsrel=1e-12)[0]
                          for i in range(nu.d)])
    alpha = nu.alpha
    w = nu.weights
    rate = nu.m_hi * float(np.sum(w)) * cfg.r_cut ** (-alpha) / alpha
    cov = small_jump_covariance(nu, cfg.r_cut)
    mean = small_jump_mean(nu, cfg.r_cut) if alpha < 1 else np.zeros(nu.d)
    chol = np.linalg.cholesky(cov + 1e-300 * np.eye(nu.d)) if cfg.gaussian_correction else np.zeros((nu.d, nu.d))
    if not cfg.gaussian_correction:
        mean = np.zeros(nu.d)
    return _Plan(s, t, pieces, np.array(lam_max), np.array(lam_int), np.array(drift_int).reshape(-1, nu.d),
                 rate, np.cumsum(w) / np.sum(w), big_jump_compensator(nu, cfg.r_cut), mean, chol,
                 None if cfg.gaussian_correction else cov)


def _rng(seed: int, index: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index), int(stream)])))


def _sample_pieces(nu: BoundedLevyMeasure, cfg: SamplerConfig, plan: _Plan, rng: np.random.Generator):
    """Jumps (times, vectors) and per-piece Gaussian increments of one path."""
    d = nu.d
    lengths = np.diff(plan.edges)
    counts = rng.poisson(plan.lam_max * lengths * plan.proposal_rate)
    total = int(counts.sum())
    lam = cfg.intensity()
    if total:
        starts = np.repeat(plan.edges[:-1], counts)
        times = starts + np.repeat(lengths, counts) * rng.random(total)
        radii = cfg.r_cut * rng.random(total) ** (-1.0 / nu.alpha)
        atoms = np.searchsorted(plan.atom_cdf, rng.random(total), side="right")
        atoms = np.minimum(atoms, len(plan.atom_cdf) - 1)
        lam_vals = np.array([lam(x) for x in times])
        majorant = np.repeat(plan.lam_max, counts)
        if np.any(lam_vals > majorant * (1 + 1e-9)):
            raise NumericalError("intensity exceeds its per-interval majorant")
        dens = np.empty(total)
        for j in np.unique(atoms):
            sel = atoms == j
            dens[sel] = nu.m(radii[sel], j)
        accept = rng.random(total) < (lam_vals / majorant) * (dens / nu.m_hi)
        times, radii, atoms = times[accept], radii[accept], atoms[accept]
        order = np.argsort(times, kind="stable")
        times, radii, atoms = times[order], radii[order], atoms[order]
        jumps = radii[:, None] * nu.directions[atoms]
    else:
        times, jumps = np.zeros(0), np.zeros((0, d))
    gauss = np.zeros((len(lengths), d))
    if cfg.gaussian_correction:
        z = rng.standard_normal((len(lengths), d))
        gauss = (np.sqrt(plan.lam_integral)[:, None] * z) @ plan.gauss_chol.T
        gauss += plan.lam_integral[:, None] * plan.gauss_mean[None, :]
    return times, jumps, gauss


def _increment(nu, cfg, plan, rng) -> np.ndarray:
    times, jumps, gauss = _sample_pieces(nu, cfg, plan, rng)
    det = plan.drift.sum(axis=0) - plan.lam_integral.sum() * plan.compensator
    return det + gauss.sum(axis=0) + jumps.sum(axis=0)


def sample_path(nu: BoundedLevyMeasure, cfg: SamplerConfig, t_end: float, time_nodes=None,
                path_index: int = 0, t_start: float = 0.0) -> LevyPathSample:
    """Simulate one path on ``[t_start, t_end]`` and record ``X`` at ``time_nodes``.

    Raises
    ------
    HypothesisViolation
        ``alpha = 1`` with a measure failing the cancellation condition.
    """
    if t_end <= t_start:
        raise ConfigurationError("t_end must exceed the start time")
    nodes = np.linspace(t_start, t_end, 2) if time_nodes is None else np.asarray(time_nodes, dtype=float)
    if nodes[0] != t_start or nodes[-1] != t_end or np.any(np.diff(nodes) <= 0):
        raise ConfigurationError("time nodes must increase from the start to the end time")
    plan = _plan(nu, cfg, t_start, t_end, nodes)
    rng = _rng(cfg.seed, path_index)
    times, jumps, gauss = _sample_pieces(nu, cfg, plan, rng)
    det = plan.drift - plan.lam_integral[:, None] * plan.compensator[None, :]
    # collapse the majorant pieces onto the requested nodes
    owner = np.searchsorted(nodes, plan.edges[1:], side="left") - 1
    k = len(nodes) - 1
    det_n = np.zeros((k, nu.d))
    gauss_n = np.zeros((k, nu.d))
    np.add.at(det_n, owner, det)
    np.add.at(gauss_n, owner, gauss)
    sample = LevyPathSample(nodes, np.zeros((len(nodes), nu.d)), times, jumps, gauss_n, det_n,
                            int(cfg.seed), int(path_index),
                            None if plan.dropped_cov is None else plan.dropped_cov * plan.lam_integral.sum())
    sample.increments = sample.recompute()
    return sample


def sample_increments(nu: BoundedLevyMeasure, cfg: SamplerConfig, s: float, t: float, stream: int = 0,
                      n_paths: int | None = None) -> np.ndarray:
    """``X_t - X_s`` for every path, shape ``(n_paths, d)``."""
    n_paths = cfg.n_paths if n_paths is None else n_paths
    if t == s:
        return np.zeros((n_paths, nu.d))
    plan = _plan(nu, cfg, s, t)
    out = np.empty((n_paths, nu.d))
    for i in range(n_paths):
        out[i] = _increment(nu, cfg, plan, _rng(cfg.seed, i, stream))
    return out


# -- characteristic exponent (independent oracle) ----------------------------

def _quad(func, a, b, tol: float = 1e-14, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(func, a, b, limit=400, epsabs=tol, epsrel=1e-12, **kw)
        except integrate.IntegrationWarning as exc:
            raise NumericalError(f"adaptive quadrature did not converge: {exc}") from exc
    return val, err


def _fourier_tail(w: float, a: float, s: float) -> tuple[float, float]:
    """``(int_a^inf cos(w r) r^{-s} dr, int_a^inf sin(w r) r^{-s} dr)`` for ``w > 0``.

    Rescaled to ``u = w r``; the non-oscillatory stretch up to ``u = 2 pi`` is
    integrated directly and the rest with QUADPACK's Fourier-integral rule.
    """
    u0 = w * a
    u1 = max(u0, 2 * np.pi)
    f = lambda u: u ** (-s)
    c = s_ = 0.0
    if u1 > u0:
        c += _quad(lambda u: np.cos(u) * f(u), u0, u1)[0]
        s_ += _quad(lambda u: np.sin(u) * f(u), u0, u1)[0]
    c += _quad(f, u1, np.inf, weight="cos", wvar=1.0, tol=1e-13)[0]
    s_ += _quad(f, u1, np.inf, weight="sin", wvar=1.0, tol=1e-13)[0]
    scale = w ** (s - 1)
    return scale * c, scale * s_


def _direction_exponent(nu: BoundedLevyMeasure, j: int, omega: float) -> complex:
    """``int_0^inf (e^{i omega r} - 1 - i omega r comp(r)) m(r) r^{-1-alpha} dr`` by adaptive quadrature."""
    alpha = nu.alpha
    if abs(omega) < 1e-12:
        return 0.0
    m = lambda r: float(nu.m(np.array([r]), j)[0])
    split = max(1.0, nu.far_radius)

    def re_in(r):
        return -2.0 * np.sin(0.5 * omega * r) ** 2 * m(r) * r ** (-1 - alpha)

    def im_in(r):
        z = omega * r
        core = -z ** 3 / 6 * (1 - z * z / 20) if abs(z) < 1e-3 else np.sin(z) - z
        comp = 1.0 if alpha > 1 or (alpha == 1 and r <= 1) else 0.0
        near = 1.0 if alpha < 1 and r <= 1 else 0.0
        return (core + (1 - comp - near) * z) * m(r) * r ** (-1 - alpha)

    pts = [x for x in (1.0, nu.far_radius) if 0 < x < split]
    re = _quad(re_in, 0.0, split, points=pts or None)[0]
    im = _quad(im_in, 0.0, split, points=pts or None)[0]
    if alpha < 1:
        # uncompensated omega r^{-alpha} on (0, 1]: the algebraic-weight rule absorbs the endpoint singularity
        im += omega * _quad(m, 0.0, 1.0, weight="alg", wvar=(-alpha, 0.0))[0]
    # beyond ``split`` the density is constant: oscillatory Fourier integrals plus closed forms
    m_far = m(split)
    w = abs(omega)
    sgn = np.sign(omega)
    cos_part, sin_part = _fourier_tail(w, split, 1 + alpha)
    re += m_far * (cos_part - split ** (-alpha) / alpha)
    im += m_far * sgn * sin_part
    if alpha > 1:
        im -= m_far * omega * split ** (1 - alpha) / (alpha - 1)
    return complex(re, im)


def char_exponent(nu: BoundedLevyMeasure, k, alpha: float | None = None) -> complex:
    """Levy exponent ``psi(k)`` with ``E e^{i k.X_1} = e^{psi(k)}`` for unit intensity and no drift.

    Computed by adaptive quadrature along every atom, independently of the
    operator's radial scheme.

    Raises
    ------
    NumericalError
        Adaptive quadrature fails to converge, or ``Re psi > 0``.
    """
    if alpha is not None and alpha != nu.alpha:
        raise ConfigurationError("alpha does not match the measure")
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if k.shape != (nu.d,):
        raise ConfigurationError(f"wave vector must have {nu.d} components")
    total = 0.0 + 0.0j
    for j, (th, w) in enumerate(zip(nu.directions, nu.weights)):
        total += w * _direction_exponent(nu, j, float(k @ th))
    if total.real > 1e-12 * max(1.0, abs(total)):
        raise NumericalError(f"positive real part in the exponent: {total}")
    return total


# -- propagators -------------------------------------------------------------

def propagate_spectral(phi: GridFunction, nu: BoundedLevyMeasure, s: float, t: float, lambda_const: float = 1.0,
                       vartheta_const=0.0, scheme: QuadratureScheme | None = None) -> GridFunction:
    """Exact multiplier ``exp((t - s)(lambda psi(k) + i k.vartheta))`` for constant intensity and drift."""
    if t == s:
        return phi
    grid = phi.grid
    theta = np.broadcast_to(np.asarray(vartheta_const, dtype=float), (grid.d,))
    psi = levy_symbol(grid, nu, scheme)
    mult = np.exp((t - s) * (lambda_const * psi + 1j * (grid.kvec @ theta)))
    return phi.with_multiplier(mult)


def _mc_average(phi: GridFunction, increments: np.ndarray, factor=None, chunk: int = 512):
    """Pointwise mean and standard error of ``phi(x + X_p)`` (optionally after a multiplier)."""
    grid = phi.grid
    coef = phi.spectral if factor is None else phi.spectral * factor
    kflat = grid.kvec.reshape(-1, grid.d)
    n = len(increments)
    s1 = np.zeros(grid.size, dtype=complex)
    s2 = np.zeros(grid.size)
    for lo in range(0, n, chunk):
        X = increments[lo:lo + chunk]
        phase = np.exp(1j * X @ kflat.T).reshape((len(X),) + grid.shape)
        vals = np.fft.ifftn(coef[None] * phase, axes=tuple(range(1, grid.d + 1))) * grid.size
        vals = vals.reshape(len(X), -1)
        if phi.is_real:
            vals = vals.real
        s1 += vals.sum(axis=0)
        s2 += (np.abs(vals) ** 2).sum(axis=0)
    mean = s1 / n
    var = np.maximum(s2 / n - np.abs(mean) ** 2, 0.0) * n / max(n - 1, 1)
    se = np.sqrt(var / n)
    values = mean.real if phi.is_real else mean
    return GridFunction.from_nodal(grid, values.reshape(grid.shape)), se


def propagate_mc(phi: GridFunction, nu: BoundedLevyMeasure, cfg: SamplerConfig, s: float, t: float,
                 return_pointwise: bool = False):
    """Monte Carlo ``E phi(x + X_t - X_s)``; returns ``(mean, max pointwise standard error)``."""
    if t < s:
        raise ConfigurationError("need t >= s")
    if t == s:
        return (phi, 0.0, np.zeros(phi.grid.size)) if return_pointwise else (phi, 0.0)
    inc = sample_increments(nu, cfg, s, t)
    mean, se = _mc_average(phi, inc, chunk=cfg.chunk)
    if return_pointwise:
        return mean, float(se.max()), se
    return mean, float(se.max())


@dataclass
class FactorizationReport:
    discrepancy: float
    combined_se: float
    max_z: float

    @property
    def within(self) -> bool:
        return self.max_z <= 3.0


def check_factorization(phi: GridFunction, nu: BoundedLevyMeasure, cfg: SamplerConfig, s: float, t: float,
                        lambda0: float | None = None, scheme: QuadratureScheme | None = None) -> FactorizationReport:
    """Compare ``E phi(x + X_t - X_s)`` with ``E [T^{lambda0} phi](x + X1_t - X1_s)``.

    ``X1`` carries intensity ``lambda - lambda0`` and the full drift; the
    ``lambda0`` part is applied exactly in Fourier space.  The two Monte Carlo
    averages use independent streams.
    """
    floor = cfg.validate_intensity(s, t)
    lambda0 = floor if lambda0 is None else float(lambda0)
    lam = cfg.intensity()
    if lambda0 <= 0:
        raise ConfigurationError("lambda_0 must be positive")
    if floor < lambda0 - 1e-12:
        raise ConfigurationError("lambda(t) drops below lambda_0")
    full, _, se_full = propagate_mc(phi, nu, cfg, s, t, return_pointwise=True)
    reduced = replace(cfg, lam=lambda x: max(lam(x) - lambda0, 0.0), lambda_floor=0.0, allow_zero_intensity=True)
    inc = sample_increments(nu, reduced, s, t, stream=1)
    psi = levy_symbol(phi.grid, nu, scheme)
    factor = np.exp((t - s) * lambda0 * psi)
    split, se_split = _mc_average(phi, inc, factor, chunk=cfg.chunk)
    diff = np.abs(full.nodal.ravel() - split.nodal.ravel())
    comb = np.sqrt(se_full ** 2 + se_split ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(comb > 0, diff / comb, np.where(diff > 1e-12, np.inf, 0.0))
    return FactorizationReport(float(diff.max()), float(comb.max()), float(z.max()))


def empirical_char_function(nu: BoundedLevyMeasure, cfg: SamplerConfig, wavevectors, t: float = 1.0) -> list:
    """Empirical ``E e^{i k.X_t}`` against ``exp(t psi(k))`` for each wave vector.

    Returns JSON-ready records ``{k, psi_re, psi_im, emp_re, emp_im, se_re, se_im, se}``.
    """
    inc = sample_increments(nu, cfg, 0.0, t)
    lam = cfg.intensity()
    lam_int = integrate.quad(lam, 0.0, t)[0]
    theta = cfg.drift(nu.d)
    drift = np.array([integrate.quad(lambda x, i=i: theta(x)[i], 0.0, t)[0] for i in range(nu.d)])
    out = []
    for k in wavevectors:
        k = np.atleast_1d(np.asarray(k, dtype=float))
        psi = char_exponent(nu, k)
        target = np.exp(lam_int * psi + 1j * k @ drift)
        vals = np.exp(1j * inc @ k)
        n = len(vals)
        se_re = float(np.std(vals.real, ddof=1) / np.sqrt(n))
        se_im = float(np.std(vals.imag, ddof=1) / np.sqrt(n))
        emp = vals.mean()
        out.append({"k": k.tolist(), "psi_re": psi.real, "psi_im": psi.imag,
                    "target_re": float(target.real), "target_im": float(target.imag),
                    "emp_re": float(emp.real), "emp_im": float(emp.imag),
                    "se_re": se_re, "se_im": se_im, "se": float(np.hypot(se_re, se_im))})
    return out
