"""Boundary geometry of the model worm domain.

The domain is

    D'_beta = {(z1, z2) : |Im z1 - log|z2|^2| < pi/2,  |log|z2|^2| < beta - pi/2}

and its boundary (up to a set of measure zero) is the union of four sheets.
Every sheet is parametrized by ``(x, v, theta)`` with ``z1 = x + i v`` and
``z2 = exp(lambda_l(v)/2 + i theta)``; only the vertical coordinate ``v``
ranges over a sheet-dependent open interval ``I_l``:

    ======  ===========================  ====================  ========
    sheet   interval ``I_l``             ``lambda_l(v)``       kind
    ======  ===========================  ====================  ========
    1       (pi - beta, beta)            v - pi/2              slanted
    2       (beta - pi, beta)            beta - pi/2           flat
    3       (-beta, beta - pi)           v + pi/2              slanted
    4       (-beta, pi - beta)           -(beta - pi/2)        flat
    ======  ===========================  ====================  ========

Discretized boundary functions (:class:`BoundaryField`) are stored on a
tensor grid per sheet: a periodic uniform grid on ``[-L, L)`` in ``x``,
Gauss-Legendre nodes on ``I_l`` in ``v`` and a uniform grid in ``theta``.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ._numerics import gauss_legendre

HALF_PI = 0.5 * math.pi


class DomainError(ValueError):
    """A point or parameter lies outside the region where a formula applies."""


@dataclass(frozen=True)
class WormParams:
    """The geometric parameter ``beta > pi/2`` of the domain."""

    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta > HALF_PI):
            raise DomainError(f"beta must exceed pi/2, got {self.beta!r}")

    @property
    def half_width(self) -> float:
        """``beta - pi/2``, the bound on ``|log|z2|^2|``."""
        return self.beta - HALF_PI

    def interval(self, sheet: int) -> tuple[float, float]:
        b = self.beta
        return {
            1: (math.pi - b, b),
            2: (b - math.pi, b),
            3: (-b, b - math.pi),
            4: (-b, math.pi - b),
        }[int(sheet)]

    def interval_table(self) -> dict[int, tuple[float, float]]:
        return {s: self.interval(s) for s in SHEETS}


class SheetId(enum.IntEnum):
    E1 = 1
    E2 = 2
    E3 = 3
    E4 = 4

    @property
    def slanted(self) -> bool:
        return self in (SheetId.E1, SheetId.E3)


SHEETS = tuple(SheetId)


@dataclass(frozen=True)
class SheetChart:
    sheet: SheetId
    interval: tuple[float, float]
    x_range: tuple[float, float]
    theta_period: float = 2.0 * math.pi

    @property
    def length(self) -> float:
        return self.interval[1] - self.interval[0]


def sheet_chart(sheet: int, params: WormParams, L: float = 20.0) -> SheetChart:
    return SheetChart(SheetId(sheet), params.interval(sheet), (-L, L))


@dataclass(frozen=True)
class BoundaryPoint:
    sheet: SheetId
    x: float
    v: float
    theta: float


def _check_in_interval(sheet, v, params):
    a, b = params.interval(sheet)
    v = np.asarray(v, dtype=float)
    if np.any((v <= a) | (v >= b)):
        raise DomainError(f"v outside the open interval ({a}, {b}) of sheet {int(sheet)}")


def log_mod_z2(sheet: int, v, params: WormParams):
    """``log|z2|^2`` at the boundary point of ``sheet`` with height ``v``.

    Flat sheets accept any ``v``; slanted sheets require ``v`` in ``I_l``.
    """
    sheet = SheetId(sheet)
    v = np.asarray(v, dtype=float)
    h = params.half_width
    if sheet is SheetId.E1:
        _check_in_interval(sheet, v, params)
        out = v - HALF_PI
    elif sheet is SheetId.E3:
        _check_in_interval(sheet, v, params)
        out = v + HALF_PI
    elif sheet is SheetId.E2:
        out = np.full_like(v, h)
    else:
        out = np.full_like(v, -h)
    return out if out.ndim else float(out)


def log_mod_z2_slope(sheet: int) -> float:
    """``d lambda_l / dv``: 1 on slanted sheets, 0 on flat ones."""
    return 1.0 if SheetId(sheet).slanted else 0.0


def embed(point: BoundaryPoint, params: WormParams) -> tuple[complex, complex]:
    """Map chart coordinates to the point ``(z1, z2)`` of the boundary."""
    _check_in_interval(point.sheet, point.v, params)
    lam = log_mod_z2(point.sheet, point.v, params)
    z1 = complex(point.x, point.v)
    z2 = complex(math.exp(0.5 * lam) * math.cos(point.theta), math.exp(0.5 * lam) * math.sin(point.theta))
    return z1, z2


def chart_coordinates(z1: complex, z2: complex, sheet: int) -> BoundaryPoint:
    """Inverse of :func:`embed` on a given sheet (``theta`` in ``[0, 2 pi)``)."""
    theta = math.atan2(z2.imag, z2.real) % (2.0 * math.pi)
    return BoundaryPoint(SheetId(sheet), z1.real, z1.imag, theta)


def surface_weight(sheet: int, v, params: WormParams):
    """Density of surface measure in ``dx dv dtheta`` on ``sheet``."""
    sheet = SheetId(sheet)
    lam = np.asarray(log_mod_z2(sheet, v, params), dtype=float)
    if sheet.slanted:
        out = 0.5 * np.exp(lam) * np.sqrt(1.0 + 4.0 * np.exp(-lam))
    else:
        out = np.exp(0.5 * lam)
    return out if out.ndim else float(out)


def lambda_weight(sheet: int, v, params: WormParams):
    """Scalar factor of the chart isomorphism ``Lambda_l``.

    ``1/sqrt(1 + 4 exp(-lambda_l(v)))`` on slanted sheets and
    ``exp(-lambda_l/2)`` (a constant) on flat ones.
    """
    sheet = SheetId(sheet)
    lam = np.asarray(log_mod_z2(sheet, v, params), dtype=float)
    if sheet.slanted:
        out = 1.0 / np.sqrt(1.0 + 4.0 * np.exp(-lam))
    else:
        out = np.exp(-0.5 * lam)
    return out if out.ndim else float(out)


def lambda_weight_log_derivative(sheet: int, v, params: WormParams):
    """``d/dv log lambda_weight``; zero on flat sheets."""
    sheet = SheetId(sheet)
    v = np.asarray(v, dtype=float)
    if not sheet.slanted:
        return np.zeros_like(v)
    lam = np.asarray(log_mod_z2(sheet, v, params), dtype=float)
    e = 4.0 * np.exp(-lam)
    return 0.5 * e / (1.0 + e)


# ---------------------------------------------------------------------------
# discretization


@dataclass(frozen=True)
class BoundaryGrid:
    """Tensor grids ``(x, v, theta)`` shared by all four sheets.

    ``x`` is the periodic grid ``-L + k * 2L/n_x``; ``v`` uses ``n_v``
    Gauss-Legendre nodes on each sheet interval.
    """

    params: WormParams
    L: float = 20.0
    n_x: int = 512
    n_v: int = 64
    n_theta: int = 32

    def __post_init__(self):
        if min(self.n_x, self.n_v, self.n_theta) < 1:
            raise ValueError("grid sizes must be positive")
        if not self.L > 0:
            raise ValueError("L must be positive")

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (4, self.n_x, self.n_v, self.n_theta)

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.n_x

    @property
    def dtheta(self) -> float:
        return 2.0 * math.pi / self.n_theta

    @property
    def x(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.n_x)

    @property
    def theta(self) -> np.ndarray:
        return self.dtheta * np.arange(self.n_theta)

    def v_rule(self, sheet: int) -> tuple[np.ndarray, np.ndarray]:
        return gauss_legendre(self.n_v, *self.params.interval(sheet))

    @property
    def v_nodes(self) -> np.ndarray:
        """Array ``(4, n_v)`` of vertical nodes."""
        return np.stack([self.v_rule(s)[0] for s in SHEETS])

    @property
    def v_weights(self) -> np.ndarray:
        return np.stack([self.v_rule(s)[1] for s in SHEETS])

    @property
    def sigma(self) -> np.ndarray:
        """Surface weight at the vertical nodes, shape ``(4, n_v)``."""
        return np.stack([surface_weight(s, self.v_rule(s)[0], self.params) for s in SHEETS])

    @property
    def lambda_factors(self) -> np.ndarray:
        return np.stack([lambda_weight(s, self.v_rule(s)[0], self.params) for s in SHEETS])

    def measure(self) -> np.ndarray:
        """Quadrature weights of surface measure, broadcastable to ``shape``."""
        vw = self.v_weights * self.sigma
        return (self.dx * self.dtheta) * vw[:, None, :, None]

    def chart_measure(self) -> np.ndarray:
        """Quadrature weights of ``dx dv dtheta`` on the charts."""
        return (self.dx * self.dtheta) * self.v_weights[:, None, :, None]

    def mesh(self, sheet: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        v = self.v_rule(sheet)[0]
        return np.meshgrid(self.x, v, self.theta, indexing="ij")

    def x_tail_bound(self, decay_rate: float) -> float:
        """Relative L^2 mass beyond ``|x| = L`` of a profile ``exp(-rate |x|)``."""
        return math.exp(-decay_rate * self.L)


@dataclass(frozen=True)
class BoundaryField:
    """Complex samples of a function on the four sheets, indexed
    ``(sheet, x, v, theta)``."""

    grid: BoundaryGrid
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=complex)
        if arr.shape != self.grid.shape:
            raise ValueError(f"samples have shape {arr.shape}, grid expects {self.grid.shape}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def params(self) -> WormParams:
        return self.grid.params

    @classmethod
    def zeros(cls, grid: BoundaryGrid) -> "BoundaryField":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    @classmethod
    def from_function(cls, grid: BoundaryGrid, func: Callable, sheets=SHEETS) -> "BoundaryField":
        """Sample ``func(sheet, x, v, theta)`` (vectorized) on the listed sheets."""
        out = np.zeros(grid.shape, dtype=complex)
        for s in sheets:
            X, V, T = grid.mesh(s)
            out[int(s) - 1] = func(SheetId(s), X, V, T)
        return cls(grid, out)

    @classmethod
    def from_holomorphic(cls, grid: BoundaryGrid, f: Callable) -> "BoundaryField":
        """Boundary trace of ``f(z1, z2)``."""
        def trace(sheet, X, V, T):
            lam = log_mod_z2(sheet, V, grid.params)
            return f(X + 1j * V, np.exp(0.5 * lam + 1j * T))
        return cls.from_function(grid, trace)

    def with_samples(self, samples) -> "BoundaryField":
        return BoundaryField(self.grid, samples)

    def __add__(self, other: "BoundaryField") -> "BoundaryField":
        _check_same_grid(self, other)
        return self.with_samples(self.samples + other.samples)

    def __sub__(self, other: "BoundaryField") -> "BoundaryField":
        _check_same_grid(self, other)
        return self.with_samples(self.samples - other.samples)

    def __mul__(self, c) -> "BoundaryField":
        return self.with_samples(complex(c) * self.samples)

    __rmul__ = __mul__

    def conj(self) -> "BoundaryField":
        return self.with_samples(self.samples.conj())


def _check_same_grid(a: BoundaryField, b: BoundaryField):
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


def inner(phi: BoundaryField, psi: BoundaryField) -> complex:
    """``<phi, psi>`` in L^2 of surface measure (linear in ``phi``)."""
    _check_same_grid(phi, psi)
    return complex(np.sum(phi.samples * psi.samples.conj() * phi.grid.measure()))


def hardy_norm_p(field: BoundaryField, p: float = 2.0) -> float:
    """Boundary ``L^p`` norm of a field with respect to surface measure."""
    if p < 1:
        raise DomainError("p must be at least 1")
    if field.samples.size == 0:
        raise ValueError("empty grid")
    integrand = np.abs(field.samples) ** p * field.grid.measure()
    return float(np.sum(integrand) ** (1.0 / p))


def chart_norm_p(field: BoundaryField, p: float = 2.0, sheet: int | None = None) -> float:
    """``L^p(dx dv dtheta)`` norm of ``Lambda_l phi`` over one or all charts."""
    lam = field.grid.lambda_factors[:, None, :, None]
    integrand = np.abs(lam * field.samples) ** p * field.grid.chart_measure()
    if sheet is not None:
        integrand = integrand[int(sheet) - 1]
    return float(np.sum(integrand) ** (1.0 / p))


def norm_equivalence_constants(sheet: int, params: WormParams, p: float = 2.0, n: int = 2001):
    """Bounds ``(c, C)`` with ``c ||phi||_{E_l} <= ||Lambda_l phi|| <= C ||phi||_{E_l}``.

    ``(lambda_weight^p / surface_weight)^(1/p)`` evaluated on a fine grid of
    the closed interval (the ratio is monotone on every sheet).
    """
    a, b = params.interval(sheet)
    eps = 1e-12 * (b - a)
    v = np.linspace(a + eps, b - eps, n)
    ratio = (lambda_weight(sheet, v, params) ** p / surface_weight(sheet, v, params)) ** (1.0 / p)
    ratio = np.atleast_1d(ratio)
    return float(ratio.min()), float(ratio.max())


# ---------------------------------------------------------------------------
# CSV serialization

FIELD_COLUMNS = ("sheet", "x", "v", "theta", "re", "im")


def write_field_csv(field: BoundaryField, path) -> None:
    grid = field.grid
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FIELD_COLUMNS)
        for s in SHEETS:
            X, V, T = grid.mesh(s)
            vals = field.samples[int(s) - 1]
            for x, v, t, z in zip(X.ravel(), V.ravel(), T.ravel(), vals.ravel()):
                w.writerow((int(s), repr(float(x)), repr(float(v)), repr(float(t)),
                            repr(float(z.real)), repr(float(z.imag))))


def read_field_csv(path, params: WormParams) -> BoundaryField:
    """Read a field written by :func:`write_field_csv`; the grid is inferred
    from the coordinate columns and checked against the Gauss-Legendre rule."""
    data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(FIELD_COLUMNS):
        raise ValueError("unexpected column count in field CSV")
    sheet = data[:, 0].astype(int)
    xs = np.unique(data[:, 1])
    ts = np.unique(data[:, 3])
    n_x, n_theta = xs.size, ts.size
    n_v = np.unique(data[sheet == 1, 2]).size
    dx = xs[1] - xs[0] if n_x > 1 else 2.0 * abs(xs[0])
    L = -xs[0]
    if n_x > 1 and not math.isclose(2 * L, n_x * dx, rel_tol=1e-9):
        raise ValueError("x column is not a periodic grid on [-L, L)")
    grid = BoundaryGrid(params, L=float(L), n_x=n_x, n_v=n_v, n_theta=n_theta)
    if data.shape[0] != 4 * n_x * n_v * n_theta:
        raise ValueError("row count does not match a full tensor grid")
    samples = np.empty(grid.shape, dtype=complex)
    ix = np.rint((data[:, 1] + L) / grid.dx).astype(int)
    it = np.rint(data[:, 3] / grid.dtheta).astype(int)
    for s in SHEETS:
        mask = sheet == int(s)
        nodes = grid.v_rule(s)[0]
        iv = np.searchsorted(nodes, data[mask, 2] - 1e-9 * (1 + np.abs(nodes).max()))
        iv = np.clip(iv, 0, n_v - 1)
        if not np.allclose(nodes[iv], data[mask, 2], rtol=1e-9, atol=1e-12):
            raise ValueError(f"v column of sheet {int(s)} is not the Gauss-Legendre grid")
        samples[int(s) - 1, ix[mask], iv, it[mask]] = data[mask, 4] + 1j * data[mask, 5]
    return BoundaryField(grid, samples)
