"""Weighted Bergman spaces of the strip ``S_beta = {|Im z| < beta}``.

Each theta-mode ``j`` of the Hardy space is a weighted Bergman space on the
strip with weight ``omega_j(y)``.  The Paley-Wiener correspondence

    f(z) = (1/2pi) int exp(i z xi) g(xi) dxi,     ||f||^2 = int |g|^2 nu(xi, j) dxi

identifies it with ``L^2(nu(xi, j) dxi)``, where ``nu`` is the two-sided
Laplace transform of ``omega_j`` at ``-2 xi`` divided by ``2 pi``.  The
reproducing kernel is then

    k_j(z, w) = (1/(4 pi^2)) int exp(i (z - conj(w)) xi) / nu(xi, j) dxi.

Closed forms are evaluated in log space throughout; ``nu`` spans hundreds of
orders of magnitude over the frequency ranges used here.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._numerics import gauss_legendre, log_cosh, log_sinhc, sinhc, trapezoid_uniform
from .geometry import DomainError, WormParams

# |a| above which the s-integral switches to the endpoint-mapped rule
DIRECT_RULE_MAX_EXPONENT = 30.0
# the mapped rule integrates exp(-u) on [0, MAPPED_RULE_CUTOFF]
MAPPED_RULE_CUTOFF = 60.0
# ln(1e-14) with margin: endpoint magnitude required for k_j
KERNEL_TAIL_LOG = -36.0


class UnreliableTailWarning(RuntimeWarning):
    """A truncated frequency integral still carries non-negligible mass at
    its ends."""


# ---------------------------------------------------------------------------
# the weight omega_j and its transform nu


def omega_j(y, j: int, params: WormParams):
    """Weight of the ``j``-th mode space on the strip.

    The four indicator functions are taken closed at the interior breakpoints
    ``+-(beta - pi)`` (a null set), so the weight is positive on all of
    ``(-beta, beta)``.
    """
    y = np.asarray(y, dtype=float)
    b = params.beta
    if np.any(np.abs(y) >= b):
        raise DomainError("omega_j is defined on |y| < beta only")
    h = params.half_width
    pi = math.pi
    in1 = (y >= pi - b)
    in2 = (y >= b - pi)
    in3 = (y <= b - pi)
    in4 = (y <= pi - b)
    lam1 = y - 0.5 * pi
    lam3 = y + 0.5 * pi
    t1 = np.where(in1, pi * np.exp(lam1 * (j + 1)) * np.sqrt(1.0 + 4.0 * np.exp(-lam1)), 0.0)
    t2 = np.where(in2, 2.0 * pi * math.exp(h * (j + 0.5)), 0.0)
    t3 = np.where(in3, pi * np.exp(lam3 * (j + 1)) * np.sqrt(1.0 + 4.0 * np.exp(-lam3)), 0.0)
    t4 = np.where(in4, 2.0 * pi * math.exp(-h * (j + 0.5)), 0.0)
    out = t1 + t2 + t3 + t4
    return out if out.ndim else float(out)


def omega_breakpoints(params: WormParams) -> list[float]:
    """``[-beta, ..., beta]`` with the interior jumps of ``omega_j``."""
    b = params.beta
    inner = sorted({math.pi - b, b - math.pi})
    return [-b, *inner, b]


def log_s_integral(a, params: WormParams, n: int = 64, root_coefficient: float = 4.0):
    """``log int_{-1}^{1} exp(-a s) sqrt(1 + k exp(-h s)) ds`` with ``h = beta - pi/2``
    and ``k = root_coefficient`` (4 for the transform of the weight).

    Moderate ``|a|`` uses the ``n``-point Gauss-Legendre rule directly.  For
    large ``|a|`` the mass sits in a boundary layer of width ``1/|a|`` at
    ``s = -sign(a)``; the substitution ``s = -sign(a) (1 - u/|a|)`` turns the
    integral into ``exp(|a|)/|a| int_0^{2|a|} exp(-u) r(s(u)) du`` which the same
    rule resolves on ``[0, 60]``.
    """
    a = np.asarray(a, dtype=float)
    h = params.half_width
    s, w = gauss_legendre(n)
    out = np.empty(a.shape)
    flat_a = a.reshape(-1)
    flat_out = out.reshape(-1)
    direct = np.abs(flat_a) <= DIRECT_RULE_MAX_EXPONENT
    if np.any(direct):
        ad = flat_a[direct][:, None]
        expo = -ad * s
        shift = np.abs(ad)
        vals = np.exp(expo - shift) * np.sqrt(1.0 + root_coefficient * np.exp(-h * s))
        flat_out[direct] = shift[:, 0] + np.log(vals @ w)
    if np.any(~direct):
        am = flat_a[~direct]
        u, wu = gauss_legendre(n, 0.0, MAPPED_RULE_CUTOFF)
        sign = np.sign(am)[:, None]
        absa = np.abs(am)[:, None]
        sm = -sign * (1.0 - u / absa)
        vals = np.exp(-u) * np.sqrt(1.0 + root_coefficient * np.exp(-h * sm))
        flat_out[~direct] = absa[:, 0] - np.log(absa[:, 0]) + np.log(vals @ wu)
    return out if out.ndim else float(out)


def _nu_exponents(xi, j, params: WormParams):
    xi = np.asarray(xi, dtype=float)
    j = np.asarray(j, dtype=float)
    h = params.half_width
    return xi, j, h, h * (2.0 * xi - (j + 1.0)), h * (2.0 * xi - (j + 0.5))


def log_nu(xi, j, params: WormParams, n: int = 64):
    """``log nu(xi, j)``, finite for all real ``xi`` and integer ``j``.

    Both summands of the closed form are positive; each is evaluated as a
    logarithm and the two are combined with ``logaddexp``.
    """
    xi, j, h, a, b = _nu_exponents(xi, j, params)
    slant = math.log(h) + log_cosh(math.pi * xi) + log_s_integral(a, params, n)
    flat = math.log(2.0 * math.pi) + log_cosh(b) + log_sinhc(math.pi * xi)
    out = np.logaddexp(slant, flat)
    return out if out.ndim else float(out)


def nu(xi, j, params: WormParams, n: int = 64):
    """Plancherel density ``nu(xi, j)`` of the ``j``-th mode space.

    Evaluated directly from the closed form; overflows to ``inf`` where the
    value is not representable (use :func:`log_nu` there).
    """
    xi, j, h, a, b = _nu_exponents(xi, j, params)
    with np.errstate(over="ignore"):
        slant = h * np.cosh(math.pi * xi) * np.exp(log_s_integral(a, params, n))
        flat = 2.0 * np.cosh(b) * math.pi * sinhc(math.pi * xi)
    out = slant + flat
    return out if out.ndim else float(out)


def decay_constant_fit(j_range, xi_range, params: WormParams, n_xi: int = 801) -> float:
    """``sup exp(2 beta |xi|) / nu(xi, j)`` over ``j in j_range`` and a uniform
    grid of ``n_xi`` points on ``[-xi_max, xi_max]``."""
    js = np.asarray(list(j_range), dtype=float)
    xi_max = float(xi_range)
    if js.size == 0 or xi_max <= 0:
        raise ValueError("ranges must be non-empty")
    xi = np.linspace(-xi_max, xi_max, n_xi)
    logs = 2.0 * params.beta * np.abs(xi)[None, :] - log_nu(xi[None, :], js[:, None], params)
    return float(np.exp(logs.max()))


def decay_profile(j_values, xi_max: float, params: WormParams, n_xi: int = 801) -> dict:
    """Per-``j`` sups of ``exp(2 beta |xi|)/nu`` and of the same quantity
    divided by ``1 + |xi|`` (which removes the algebraic growth in ``xi``)."""
    xi = np.linspace(-xi_max, xi_max, n_xi)
    out = {}
    for j in j_values:
        g = 2.0 * params.beta * np.abs(xi) - log_nu(xi, j, params)
        out[int(j)] = (float(np.exp(g.max())), float(np.exp((g - np.log1p(np.abs(xi))).max())))
    return out


@dataclass
class SymmetryReport:
    j: int
    xi_max: float
    max_asymmetry: float
    max_normalized_asymmetry: float
    min_nu: float


def nu_symmetry_scan(params: WormParams, j: int, xi_max: float, n_xi: int = 401) -> SymmetryReport:
    """Measure how far ``nu(., j)`` is from even.

    ``max_asymmetry`` compares ``nu(xi, j)`` with ``nu(-xi, j)`` at fixed ``j``;
    ``max_normalized_asymmetry`` compares the two at fixed
    ``eta = h (2 xi - (j + 1))``, i.e. after reflecting ``xi`` in the affine
    coordinates where the symbol factorizes.
    """
    xi = np.linspace(-xi_max, xi_max, n_xi)
    lp = log_nu(xi, j, params)
    lm = log_nu(-xi, j, params)
    asym = np.abs(np.expm1(lm - lp))
    # fixed eta: the partner of (xi, j) is (-xi, j - 4 xi) with j continuous
    lm_norm = log_nu(-xi, j - 4.0 * xi, params)
    asym_norm = np.abs(np.expm1(lm_norm - lp))
    return SymmetryReport(j, xi_max, float(asym.max()), float(asym_norm.max()), float(np.exp(lp.min())))


# ---------------------------------------------------------------------------
# Paley-Wiener transform


def check_strip_point(z: complex, params: WormParams) -> complex:
    z = complex(z)
    if not abs(z.imag) < params.beta:
        raise DomainError(f"{z} is not inside the strip |Im z| < {params.beta}")
    return z


@dataclass(frozen=True)
class StripFunction:
    """A function on the strip given by its density ``g = hat f_0`` sampled on
    a uniform ``xi``-grid."""

    params: WormParams
    j: int
    xi_grid: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)

    def __post_init__(self):
        xi = np.asarray(self.xi_grid, dtype=float)
        g = np.asarray(self.density, dtype=complex)
        if xi.ndim != 1 or xi.shape != g.shape or xi.size < 2:
            raise ValueError("xi_grid and density must be matching 1-d arrays")
        d = np.diff(xi)
        if not np.allclose(d, d[0], rtol=1e-9, atol=0):
            raise ValueError("xi_grid must be uniform")
        object.__setattr__(self, "xi_grid", xi)
        object.__setattr__(self, "density", g)

    @classmethod
    def from_callable(cls, params, j, g, xi_max: float = 12.0, n: int = 1201) -> "StripFunction":
        xi = np.linspace(-xi_max, xi_max, n)
        return cls(params, j, xi, g(xi))

    @property
    def step(self) -> float:
        return float(self.xi_grid[1] - self.xi_grid[0])

    def scaled(self, c) -> "StripFunction":
        return StripFunction(self.params, self.j, self.xi_grid, complex(c) * self.density)

    def spectral_norm_sq(self) -> float:
        """``int |g|^2 nu(xi, j) dxi`` by the trapezoid rule."""
        lw = log_nu(self.xi_grid, self.j, self.params)
        vals = np.abs(self.density) ** 2 * np.exp(lw)
        return float(trapezoid_uniform(vals, self.step))

    def tail_ratio(self, y: float) -> float:
        """Endpoint-to-peak ratio of ``|exp(-y xi) g(xi)|``."""
        mag = np.abs(self.density) * np.exp(-y * self.xi_grid)
        peak = mag.max()
        if peak == 0:
            return 0.0
        return float(max(mag[0], mag[-1]) / peak)

    def norm_tail_ratio(self) -> float:
        """Endpoint-to-peak ratio of ``|g|^2 nu``."""
        lw = log_nu(self.xi_grid, self.j, self.params)
        with np.errstate(divide="ignore"):
            lg = 2.0 * np.log(np.abs(self.density)) + lw
        top = lg.max()
        if not np.isfinite(top):
            return 0.0
        return float(np.exp(max(lg[0], lg[-1]) - top))


TAIL_TOLERANCE = 1e-12


def pw_inverse(f: StripFunction, z: complex) -> complex:
    """``(1/2pi) int exp(i z xi) g(xi) dxi`` by the trapezoid rule.

    Warns with :class:`UnreliableTailWarning` if the integrand at the ends of
    the grid exceeds ``1e-12`` of its peak.
    """
    z = check_strip_point(z, f.params)
    if f.tail_ratio(z.imag) > TAIL_TOLERANCE:
        warnings.warn(f"density not negligible at the grid ends for Im z = {z.imag}", UnreliableTailWarning)
    vals = np.exp(1j * z * f.xi_grid) * f.density
    return complex(trapezoid_uniform(vals, f.step) / (2.0 * math.pi))


def pw_inverse_grid(f: StripFunction, x, y) -> np.ndarray:
    """:func:`pw_inverse` on the tensor grid ``x`` (rows) by ``y`` (columns)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) >= f.params.beta):
        raise DomainError("grid leaves the strip")
    worst = max(f.tail_ratio(float(yy)) for yy in (y.min(), y.max()))
    if worst > TAIL_TOLERANCE:
        warnings.warn("density not negligible at the grid ends", UnreliableTailWarning)
    wq = np.full(f.xi_grid.size, f.step)
    wq[[0, -1]] *= 0.5
    right = (f.density * wq)[:, None] * np.exp(-np.outer(f.xi_grid, y))
    left = np.exp(1j * np.outer(x, f.xi_grid))
    return (left @ right) / (2.0 * math.pi)


def strip_y_rule(params: WormParams, n_per_panel: int = 40) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on ``(-beta, beta)`` split at the jumps of
    ``omega_j``."""
    br = omega_breakpoints(params)
    ys, ws = [], []
    for a, b in zip(br[:-1], br[1:]):
        if b - a > 0:
            y, w = gauss_legendre(n_per_panel, a, b)
            ys.append(y)
            ws.append(w)
    return np.concatenate(ys), np.concatenate(ws)


def weighted_strip_norm_sq(values: np.ndarray, x_step: float, y_nodes, y_weights, j, params) -> float:
    """``int |F|^2 omega_j dA`` for samples ``values[x, y]``: trapezoid in
    ``x`` and the given rule in ``y``."""
    om = omega_j(y_nodes, j, params)
    col = trapezoid_uniform(np.abs(values) ** 2, x_step, axis=0)
    return float(np.sum(col * om * y_weights))


def parseval_residual(f: StripFunction, L: float = 30.0, x_step: float | None = None,
                      n_per_panel: int = 40) -> float:
    """Relative gap between the spatial norm ``int_{S_beta} |f|^2 omega_j dA`` and
    the spectral norm ``int |g|^2 nu dxi``.

    The spatial side synthesizes ``f`` with :func:`pw_inverse_grid` on a
    tensor grid (trapezoid in ``x`` on ``[-L, L]``, composite Gauss-Legendre
    in ``y``); no use is made of ``nu``.
    """
    if x_step is None:
        x_step = min(0.2, 0.5 * math.pi / max(abs(f.xi_grid[0]), abs(f.xi_grid[-1])))
    nx = int(math.ceil(2 * L / x_step)) + 1
    x = np.linspace(-L, L, nx)
    y, wy = strip_y_rule(f.params, n_per_panel)
    F = pw_inverse_grid(f, x, y)
    spatial = weighted_strip_norm_sq(F, x[1] - x[0], y, wy, f.j, f.params)
    if f.norm_tail_ratio() > TAIL_TOLERANCE:
        warnings.warn("density not negligible at the grid ends", UnreliableTailWarning)
    spectral = f.spectral_norm_sq()
    return abs(spatial - spectral) / spectral


# ---------------------------------------------------------------------------
# reproducing kernels


def _frequency_window(tau: float, j: int, params: WormParams, extra: float = 0.0):
    """Interval outside of which ``-tau xi - log nu(xi, j)`` is below its
    maximum by more than ``-KERNEL_TAIL_LOG``."""
    center = 0.5 * (j + 0.5)
    width = 8.0
    while True:
        xi = np.linspace(center - width, center + width, 1601)
        g = -tau * xi - log_nu(xi, j, params)
        top = g.max()
        if g[0] < top + KERNEL_TAIL_LOG and g[-1] < top + KERNEL_TAIL_LOG:
            keep = np.nonzero(g >= top + KERNEL_TAIL_LOG)[0]
            lo = xi[max(keep[0] - 1, 0)]
            hi = xi[min(keep[-1] + 1, xi.size - 1)]
            return lo, hi, top
        width *= 2.0
        if width > 1e5:
            raise RuntimeError("kernel integrand does not decay; is the point inside the strip?")


def log_kernel_integral(zeta: complex, j: int, params: WormParams, rtol: float = 1e-12):
    """``int exp(i zeta xi) / nu(xi, j) dxi`` as ``(log_scale, mantissa)``.

    The value is ``exp(log_scale) * mantissa``.  The trapezoid step is halved
    until two levels agree to ``rtol`` relative to ``int |integrand|``.
    """
    tau = zeta.imag
    if not abs(tau) < 2.0 * params.beta:
        raise DomainError("kernel integral diverges for |Im zeta| >= 2 beta")
    lo, hi, top = _frequency_window(tau, j, params)
    re = zeta.real
    step = min(0.05, 0.25 / (abs(re) + 1.0))
    prev = None
    for _ in range(12):
        n = int(math.ceil((hi - lo) / step))
        xi = np.linspace(lo, hi, n + 1)
        dxi = xi[1] - xi[0]
        mag = np.exp(-tau * xi - log_nu(xi, j, params) - top)
        vals = mag * np.exp(1j * re * xi)
        cur = complex(trapezoid_uniform(vals, dxi))
        scale = float(trapezoid_uniform(mag, dxi))
        if prev is not None and abs(cur - prev) <= rtol * scale:
            return top, cur
        prev = cur
        step *= 0.5
    warnings.warn("kernel quadrature did not reach the requested tolerance", UnreliableTailWarning)
    return top, cur


def k_j(z1: complex, w1: complex, j: int, params: WormParams) -> complex:
    """Reproducing kernel of the ``j``-th mode space at ``(z1, w1)``."""
    z1 = check_strip_point(z1, params)
    w1 = check_strip_point(w1, params)
    top, mant = log_kernel_integral(z1 - w1.conjugate(), j, params)
    return math.exp(top) * mant / (4.0 * math.pi ** 2)


def k_j_density(w1: complex, j: int, params: WormParams, xi_grid) -> np.ndarray:
    """Paley-Wiener density of ``k_j(., w1)``: ``exp(-i conj(w1) xi) / (2 pi nu)``."""
    xi = np.asarray(xi_grid, dtype=float)
    w1 = check_strip_point(w1, params)
    return np.exp(-1j * w1.conjugate() * xi - log_nu(xi, j, params)) / (2.0 * math.pi)


def kernel_strip_function(w1: complex, j: int, params: WormParams, xi_max: float | None = None,
                          step: float = 0.01) -> StripFunction:
    """``k_j(., w1)`` as a :class:`StripFunction` with a grid wide enough for
    the whole closed strip."""
    if xi_max is None:
        rate = 2.0 * params.beta - params.beta - abs(w1.imag)
        xi_max = abs(0.5 * (j + 0.5)) + 40.0 / max(rate, 0.05) + 5.0
    n = int(round(2 * xi_max / step)) + 1
    xi = np.linspace(-xi_max, xi_max, n)
    return StripFunction(params, j, xi, k_j_density(w1, j, params, xi))


def reproducing_inner_product(w0: complex, w1: complex, j: int, params: WormParams,
                              L: float = 60.0, x_step: float = 0.05, n_per_panel: int = 48) -> complex:
    """``<k_j(., w0), k_j(., w1)>`` in ``L^2(S_beta, omega_j dA)`` by direct
    quadrature over the truncated strip."""
    f0 = kernel_strip_function(w0, j, params)
    f1 = kernel_strip_function(w1, j, params)
    nx = int(round(2 * L / x_step)) + 1
    x = np.linspace(-L, L, nx)
    y, wy = strip_y_rule(params, n_per_panel)
    F0 = pw_inverse_grid(f0, x, y)
    F1 = pw_inverse_grid(f1, x, y)
    om = omega_j(y, j, params)
    col = trapezoid_uniform(F0 * F1.conj(), x[1] - x[0], axis=0)
    return complex(np.sum(col * om * wy))
