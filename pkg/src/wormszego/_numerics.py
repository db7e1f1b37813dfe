"""Small numerical helpers shared by the modules: quadrature rules and
overflow-safe hyperbolic functions."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

# below this |x| the series for sinh(x)/x is used
SINHC_SERIES_CUTOFF = 1e-4


@lru_cache(maxsize=64)
def _legendre_reference(n: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = leggauss(n)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the ``n``-point Gauss-Legendre rule on ``[a, b]``."""
    if n < 1:
        raise ValueError("need at least one quadrature node")
    s, w = _legendre_reference(n)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * s, half * w


def log_cosh(x):
    """``log(cosh(x))`` without overflow."""
    ax = np.abs(np.asarray(x, dtype=float))
    return ax + np.log1p(np.exp(-2.0 * ax)) - np.log(2.0)


def sinhc(x):
    """``sinh(x)/x`` with the removable singularity at 0 filled in."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SINHC_SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    x2 = x * x
    series = 1.0 + x2 / 6.0 + x2 * x2 / 120.0
    return np.where(small, series, np.sinh(safe) / safe)


def log_sinhc(x):
    """``log(sinh(x)/x)`` without overflow; even in ``x``."""
    ax = np.abs(np.asarray(x, dtype=float))
    small = ax < SINHC_SERIES_CUTOFF
    safe = np.where(small, 1.0, ax)
    x2 = ax * ax
    series = np.log1p(x2 / 6.0 + x2 * x2 / 120.0)
    big = safe + np.log1p(-np.exp(-2.0 * safe)) - np.log(2.0 * safe)
    return np.where(small, series, big)


def trapezoid_uniform(values, step: float, axis: int = -1):
    """Trapezoid rule on a uniform grid (end weights 1/2)."""
    values = np.asarray(values)
    total = values.sum(axis=axis)
    first = np.take(values, 0, axis=axis)
    last = np.take(values, -1, axis=axis)
    return step * (total - 0.5 * (first + last))


def lstsq_slope(x, y) -> float:
    """Least-squares slope of ``y`` against ``x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
