"""Composite Gauss-Legendre rules on geometric radial cells."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def geometric_edges(a: float, b: float, ratio: float = 1.25, breakpoints=(1.0,)) -> np.ndarray:
    """Cell edges from ``a`` to ``b`` with consecutive ratio at most ``ratio``.

    Every breakpoint strictly inside ``(a, b)`` becomes an edge, so kinks of the
    integrand (e.g. at ``|y| = 1``) never fall inside a cell.
    """
    if not 0 < a < b:
        raise ValueError(f"need 0 < a < b, got a={a}, b={b}")
    stops = [a] + sorted(p for p in breakpoints if a < p < b) + [b]
    edges = [a]
    for lo, hi in zip(stops[:-1], stops[1:]):
        m = max(1, int(np.ceil(np.log(hi / lo) / np.log(ratio) - 1e-12)))
        edges.extend(lo * (hi / lo) ** (np.arange(1, m + 1) / m))
    out = np.array(edges)
    out[-1] = b
    return out


def composite_nodes(edges: np.ndarray, order: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the composite GL rule over consecutive ``edges``."""
    x, w = gauss_legendre(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = 0.5 * (hi + lo) + half * x
    weights = half * w
    return nodes.ravel(), weights.ravel()


def integrate_radial(func, a: float, b: float, ratio: float = 1.25, order: int = 8,
                     breakpoints=(1.0,)) -> np.ndarray:
    """Integrate ``func(r)`` over ``[a, b]``; ``func`` maps ``(m,)`` to ``(m, ...)``."""
    if b <= a:
        return np.asarray(0.0 * func(np.array([a]))[0])
    nodes, weights = composite_nodes(geometric_edges(a, b, ratio, breakpoints), order)
    vals = np.asarray(func(nodes))
    return np.tensordot(weights, vals, axes=(0, 0))
