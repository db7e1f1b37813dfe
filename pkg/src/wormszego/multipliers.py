"""Normalized symbols of the projection blocks and numerical certificates
for their multiplier bounds.

In the coordinates ``xi_n = pi xi``, ``eta_n = h (2 xi - (j + 1))`` with
``h = beta - pi/2``, every block symbol factors as

    exp(-c) * exp(gamma xi_n + alpha eta_n) / nu_tilde(xi_n, eta_n)
        = exp(-c) * m_{alpha,gamma}(xi_n, eta_n) * Q(xi_n, eta_n),

with ``m_{alpha,gamma} = exp(gamma xi + alpha eta) / D`` and ``Q = D / nu_tilde``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._numerics import gauss_legendre, log_cosh, log_sinhc, lstsq_slope
from .geometry import DomainError, SheetId, WormParams, log_mod_z2
from .projector import SheetPairMultiplier, log_unified_multiplier
from .strip import log_s_integral

# ---------------------------------------------------------------------------
# coordinates and exponents


@dataclass(frozen=True)
class NormalizedCoords:
    xi_n: float
    eta_n: float


def to_normalized(xi, j, params: WormParams) -> NormalizedCoords:
    h = params.half_width
    xi = np.asarray(xi, dtype=float)
    j = np.asarray(j, dtype=float)
    xn, en = math.pi * xi, h * (2.0 * xi - (j + 1.0))
    if xn.ndim == 0:
        return NormalizedCoords(float(xn), float(en))
    return NormalizedCoords(xn, en)


def from_normalized(coords: NormalizedCoords, params: WormParams):
    """Inverse of :func:`to_normalized`; ``j`` is returned as a float."""
    h = params.half_width
    xi = np.asarray(coords.xi_n, dtype=float) / math.pi
    j = 2.0 * xi - 1.0 - np.asarray(coords.eta_n, dtype=float) / h
    if xi.ndim == 0:
        return float(xi), float(j)
    return xi, j


class PairKind(enum.Enum):
    DIAGONAL = "diagonal"
    OFF_DIAGONAL = "off_diagonal"
    GAP = "gap"


GAP_PAIRS = frozenset({(3, 1), (4, 2), (1, 3), (2, 4)})


def pair_kind(out_sheet: int, in_sheet: int) -> PairKind:
    if out_sheet == in_sheet:
        return PairKind.DIAGONAL
    if (int(out_sheet), int(in_sheet)) in GAP_PAIRS:
        return PairKind.GAP
    return PairKind.OFF_DIAGONAL


@dataclass(frozen=True)
class NormalizedMultiplier:
    """Exponents of ``m_{alpha,gamma}`` for one block and heights ``(y, t)``.

    ``log_prefactor`` is ``-c``; the block symbol equals
    ``exp(log_prefactor) * exp(gamma xi_n + alpha eta_n) / nu_tilde``.
    """

    alpha: float
    gamma: float
    kind: PairKind
    log_prefactor: float

    @property
    def margin(self) -> float:
        """``(1 - |alpha|) + (1 - |gamma|)``; positive for every block."""
        return (1.0 - abs(self.alpha)) + (1.0 - abs(self.gamma))


def block_exponents(out_sheet: int, in_sheet: int, y, t, params: WormParams):
    """Vectorized ``(alpha, gamma, c)`` for heights ``y`` (out) and ``t`` (in)."""
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    c = 0.5 * (np.asarray(log_mod_z2(out_sheet, y, params)) + np.asarray(log_mod_z2(in_sheet, t, params)))
    alpha = -c / params.half_width
    gamma = (2.0 * c - (t + y)) / math.pi
    return alpha, gamma, c


def alpha_gamma_of(pair: SheetPairMultiplier, params: WormParams) -> NormalizedMultiplier:
    pair.check(params)
    alpha, gamma, c = block_exponents(pair.out_sheet, pair.in_sheet, pair.y, pair.t, params)
    return NormalizedMultiplier(float(alpha), float(gamma), pair_kind(pair.out_sheet, pair.in_sheet), -float(c))


# ---------------------------------------------------------------------------
# symbols


def log_D(xi, eta):
    """``log D`` with ``D = cosh(eta) sinh(xi)/xi + sinh(eta)/eta cosh(xi)``."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return np.logaddexp(log_cosh(eta) + log_sinhc(xi), log_sinhc(eta) + log_cosh(xi))


def D_fn(xi, eta):
    out = np.exp(log_D(xi, eta))
    return out if out.ndim else float(out)


def log_nu_tilde(xi_n, eta_n, params: WormParams, root_coefficient: float = 4.0):
    """``log`` of ``nu`` in normalized coordinates,

        2 pi sinh(xi)/xi cosh(eta + h/2) + h cosh(xi) int_{-1}^{1} exp(-eta s) sqrt(1 + k exp(-h s)) ds,

    with ``k = 4`` for the transform of the weight.  ``root_coefficient=1``
    gives the variant without the factor 4 under the root.
    """
    h = params.half_width
    xi_n = np.asarray(xi_n, dtype=float)
    eta_n = np.asarray(eta_n, dtype=float)
    flat = math.log(2.0 * math.pi) + log_sinhc(xi_n) + log_cosh(eta_n + 0.5 * h)
    slant = math.log(h) + log_cosh(xi_n) + log_s_integral(eta_n, params, root_coefficient=root_coefficient)
    return np.logaddexp(flat, slant)


def nu_tilde(xi_n, eta_n, params: WormParams, root_coefficient: float = 4.0):
    out = np.exp(log_nu_tilde(xi_n, eta_n, params, root_coefficient))
    return out if out.ndim else float(out)


def log_Q(xi, eta, params: WormParams):
    return log_D(xi, eta) - log_nu_tilde(xi, eta, params)


def Q_fn(xi, eta, params: WormParams):
    out = np.exp(log_Q(xi, eta, params))
    return out if out.ndim else float(out)


def _check_unit(name: str, value: float):
    if not 0.0 < value < 1.0:
        raise DomainError(f"{name} = {value} must lie in (0, 1)")


def log_m_alpha_gamma(xi, eta, alpha: float, gamma: float):
    _check_unit("alpha", alpha)
    _check_unit("gamma", gamma)
    return gamma * np.asarray(xi, dtype=float) + alpha * np.asarray(eta, dtype=float) - log_D(xi, eta)


def m_alpha_gamma_fn(xi, eta, alpha: float, gamma: float):
    out = np.exp(log_m_alpha_gamma(xi, eta, alpha, gamma))
    return out if out.ndim else float(out)


def log_m_alpha(xi, eta, alpha: float):
    _check_unit("alpha", alpha)
    return np.asarray(xi, dtype=float) + alpha * np.asarray(eta, dtype=float) - log_D(xi, eta)


def m_alpha_fn(xi, eta, alpha: float):
    out = np.exp(log_m_alpha(xi, eta, alpha))
    return out if out.ndim else float(out)


def multiplier_consistency(pair: SheetPairMultiplier, params: WormParams, xi, j) -> float:
    """Largest relative gap between the block symbol and its normalized
    factorization ``exp(-c) exp(gamma xi_n + alpha eta_n) / nu_tilde``."""
    nm = alpha_gamma_of(pair, params)
    coords = to_normalized(xi, j, params)
    lhs = log_unified_multiplier(pair, xi, j, params)
    rhs = (nm.log_prefactor + nm.gamma * coords.xi_n + nm.alpha * coords.eta_n
           - log_nu_tilde(coords.xi_n, coords.eta_n, params))
    return float(np.max(np.abs(np.expm1(rhs - lhs))))


# ---------------------------------------------------------------------------
# finite differences

_FIRST = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_SECOND = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_OFFSETS = np.arange(-2, 3)

DERIVATIVE_ORDERS = ((0, 0), (1, 0), (0, 1), (2, 0), (0, 2), (1, 1))


def _fd_from_log(log_symbol: Callable, X, Y, hx, hy) -> dict:
    """All derivatives of ``exp(g)`` up to ``DERIVATIVE_ORDERS`` from
    fourth-order differences of ``g``."""
    def g(i, k):
        return log_symbol(X + i * hx, Y + k * hy)

    g0 = g(0, 0)
    gx_vals = [g(o, 0) for o in _OFFSETS]
    gy_vals = [g(0, o) for o in _OFFSETS]
    gx = sum(c * v for c, v in zip(_FIRST, gx_vals)) / hx
    gy = sum(c * v for c, v in zip(_FIRST, gy_vals)) / hy
    gxx = sum(c * v for c, v in zip(_SECOND, gx_vals)) / hx ** 2
    gyy = sum(c * v for c, v in zip(_SECOND, gy_vals)) / hy ** 2
    gxy = 0.0
    for a, ca in zip(_OFFSETS, _FIRST):
        for b, cb in zip(_OFFSETS, _FIRST):
            if ca != 0.0 and cb != 0.0:
                gxy = gxy + ca * cb * g(a, b)
    gxy = gxy / (hx * hy)
    m = np.exp(g0)
    return {
        (0, 0): m,
        (1, 0): m * gx,
        (0, 1): m * gy,
        (2, 0): m * (gxx + gx * gx),
        (0, 2): m * (gyy + gy * gy),
        (1, 1): m * (gxy + gx * gy),
    }


def richardson_derivatives(log_symbol: Callable, X, Y, hx, hy):
    """Derivatives at steps ``h`` and ``h/2`` combined by Richardson
    extrapolation; returns ``(estimates, error_estimates)``."""
    coarse = _fd_from_log(log_symbol, X, Y, hx, hy)
    fine = _fd_from_log(log_symbol, X, Y, 0.5 * hx, 0.5 * hy)
    est = {k: fine[k] + (fine[k] - coarse[k]) / 15.0 for k in coarse}
    err = {k: np.abs(fine[k] - coarse[k]) / 15.0 for k in coarse}
    return est, err


def log_axis(points_per_decade: int, lo: int = -3, hi: int = 5) -> np.ndarray:
    """Symmetric axis with ``|x|`` log-spaced on ``[10^lo, 10^hi]``."""
    k = np.arange(int((hi - lo) * points_per_decade) + 1)
    a = 10.0 ** (lo + k / points_per_decade)
    return np.concatenate([-a[::-1], a])


@dataclass
class MarcinkiewiczEntry:
    order: tuple[int, int]
    sup: float
    location: tuple[float, float]
    rel_error: float

    def reliable(self, rtol: float) -> bool:
        return self.rel_error <= rtol


@dataclass
class MarcinkiewiczTable:
    """Weighted sups ``|xi|^a |eta|^b |d_xi^a d_eta^b m|`` for one symbol."""

    label: str
    points_per_decade: int
    entries: dict = field(default_factory=dict)
    rtol: float = 1e-4

    @property
    def constant(self) -> float:
        return max(e.sup for e in self.entries.values())

    @property
    def reliable(self) -> bool:
        return all(e.reliable(self.rtol) for e in self.entries.values())

    def rows(self):
        for k, e in self.entries.items():
            yield {"symbol": self.label, "order": f"{k[0]}{k[1]}", "sup": e.sup,
                   "xi": e.location[0], "eta": e.location[1], "rel_error": e.rel_error,
                   "points_per_decade": self.points_per_decade}


def marcinkiewicz_scan(log_symbol: Callable, points_per_decade: int = 10, decades: tuple[int, int] = (-3, 5),
                       step: float = 0.05, rtol: float = 1e-4, label: str = "") -> MarcinkiewiczTable:
    """Scan the Marcinkiewicz quantities of ``exp(log_symbol)``.

    The grid is symmetric in both variables with log-spaced magnitudes; the
    difference step is ``step * max(1, |coordinate|)`` because at large
    arguments the symbols vary on the scale of the coordinate itself.  An
    entry is unreliable when the Richardson error estimate exceeds ``rtol``
    of the sup.
    """
    axis = log_axis(points_per_decade, *decades)
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    hx = step * np.maximum(1.0, np.abs(X))
    hy = step * np.maximum(1.0, np.abs(Y))
    with np.errstate(over="ignore", under="ignore"):
        est, err = richardson_derivatives(log_symbol, X, Y, hx, hy)
    table = MarcinkiewiczTable(label, points_per_decade, rtol=rtol)
    for order in DERIVATIVE_ORDERS:
        w = np.abs(X) ** order[0] * np.abs(Y) ** order[1]
        vals = w * np.abs(est[order])
        i = int(np.argmax(vals))
        top = float(vals.flat[i])
        worst = float(np.max(w * err[order]))
        rel = worst / top if top > 0 else (0.0 if worst == 0 else math.inf)
        table.entries[order] = MarcinkiewiczEntry(order, top, (float(X.flat[i]), float(Y.flat[i])), rel)
    return table


@dataclass
class BlowupFit:
    """Fit of ``C(param) ~ C0 / gap(param)`` over a list of parameters."""

    labels: list
    gaps: np.ndarray
    constants: np.ndarray
    refined_constants: np.ndarray
    factor: float = 3.0

    @property
    def scaled(self) -> np.ndarray:
        return self.constants * self.gaps

    @property
    def C0(self) -> float:
        return float(np.exp(np.mean(np.log(self.scaled))))

    @property
    def within_band(self) -> bool:
        s = self.scaled
        return bool(np.all(s <= self.factor * self.C0) and np.all(s >= self.C0 / self.factor))

    @property
    def exponent(self) -> float:
        """Slope of ``log C`` against ``log gap`` (``-1`` for ``C0/gap``)."""
        if len(set(np.round(self.gaps, 12))) < 2:
            return math.nan
        return lstsq_slope(np.log(self.gaps), np.log(self.constants))

    @property
    def refinement_change(self) -> float:
        return float(np.max(np.abs(self.refined_constants / self.constants - 1.0)))


def alpha_blowup_fit(alphas, points_per_decade: int = 10, **scan_kw) -> tuple[BlowupFit, list]:
    """Scan ``m_alpha`` for each alpha at two grid densities and fit ``C0/(1 - alpha)``."""
    tables, consts, refined = [], [], []
    for a in alphas:
        def g(x, y, a=a):
            return log_m_alpha(x, y, a)
        t1 = marcinkiewicz_scan(g, points_per_decade, label=f"m_alpha[{a}]", **scan_kw)
        t2 = marcinkiewicz_scan(g, 2 * points_per_decade, label=f"m_alpha[{a}]", **scan_kw)
        tables += [t1, t2]
        consts.append(t1.constant)
        refined.append(t2.constant)
    gaps = 1.0 - np.asarray(alphas, dtype=float)
    return BlowupFit(list(alphas), gaps, np.array(consts), np.array(refined)), tables


def alpha_gamma_blowup_fit(pairs, points_per_decade: int = 10, **scan_kw) -> tuple[BlowupFit, list]:
    """Scan ``m_{alpha,gamma}`` for each ``(alpha, gamma)`` and fit
    ``C0/((1 - alpha) + (1 - gamma))``."""
    tables, consts, refined = [], [], []
    for a, gm in pairs:
        def g(x, y, a=a, gm=gm):
            return log_m_alpha_gamma(x, y, a, gm)
        t1 = marcinkiewicz_scan(g, points_per_decade, label=f"m_alpha_gamma[{a},{gm}]", **scan_kw)
        t2 = marcinkiewicz_scan(g, 2 * points_per_decade, label=f"m_alpha_gamma[{a},{gm}]", **scan_kw)
        tables += [t1, t2]
        consts.append(t1.constant)
        refined.append(t2.constant)
    gaps = np.array([(1.0 - a) + (1.0 - gm) for a, gm in pairs])
    return BlowupFit(list(pairs), gaps, np.array(consts), np.array(refined)), tables


# ---------------------------------------------------------------------------
# the one-variable factor of nu_tilde


def F_tilde(eta, params: WormParams):
    """``int_{-1}^{1} exp(-eta s) sqrt(1 + 4 exp(-h s)) ds / cosh(eta)``."""
    eta = np.asarray(eta, dtype=float)
    out = np.exp(log_s_integral(eta, params) - log_cosh(eta))
    return out if out.ndim else float(out)


def F_fn(eta, params: WormParams):
    """Same integral divided by ``cosh(eta + h/2)``."""
    eta = np.asarray(eta, dtype=float)
    out = np.exp(log_s_integral(eta, params) - log_cosh(eta + 0.5 * params.half_width))
    return out if out.ndim else float(out)


def _tanhc(x):
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - x * x / 3.0, np.tanh(safe) / safe)


@dataclass
class FDecayReport:
    sup_first: float
    sup_second: float
    sup_first_refined: float
    sup_second_refined: float
    c_lower: float
    c_upper: float

    @property
    def refinement_change(self) -> float:
        return max(abs(self.sup_first_refined / self.sup_first - 1.0),
                   abs(self.sup_second_refined / self.sup_second - 1.0))


def _F_tilde_sups(params: WormParams, n: int, eta_max: float, step: float):
    mag = np.linspace(1.0, eta_max, n)
    eta = np.concatenate([-mag[::-1], mag])
    h = step * np.maximum(1.0, np.abs(eta))

    def diffs(hh):
        vals = [F_tilde(eta + o * hh, params) for o in _OFFSETS]
        d1 = sum(c * v for c, v in zip(_FIRST, vals)) / hh
        d2 = sum(c * v for c, v in zip(_SECOND, vals)) / hh ** 2
        return d1, d2

    c1, c2 = diffs(h)
    f1, f2 = diffs(0.5 * h)
    d1 = f1 + (f1 - c1) / 15.0
    d2 = f2 + (f2 - c2) / 15.0
    return float(np.max(eta ** 2 * np.abs(d1))), float(np.max(np.abs(eta) ** 3 * np.abs(d2)))


def F_decay_check(params: WormParams, n: int = 400, eta_max: float = 50.0, step: float = 0.02) -> FDecayReport:
    """Weighted derivative sups of ``F_tilde`` on ``1 <= |eta| <= eta_max``
    (``n`` and ``2n`` points per side) and the constants of
    ``c1 tanh(eta)/eta <= F(eta) <= c2 tanh(eta)/eta``."""
    s1, s2 = _F_tilde_sups(params, n, eta_max, step)
    r1, r2 = _F_tilde_sups(params, 2 * n, eta_max, step)
    eta = np.linspace(-eta_max, eta_max, 4 * n + 1)
    ratio = F_fn(eta, params) / _tanhc(eta)
    return FDecayReport(s1, s2, r1, r2, float(ratio.min()), float(ratio.max()))


# ---------------------------------------------------------------------------
# closed-form derivatives of m_alpha


def _parts(xi, eta):
    sx, cx, se, ce = np.sinh(xi), np.cosh(xi), np.sinh(eta), np.cosh(eta)
    D = ce * sx / xi + se / eta * cx
    phi = np.exp(-eta) * (sx / xi - cx / eta) + cx * se / eta ** 2
    return sx, cx, se, ce, D, phi


def closed_d_xi(xi, eta, alpha):
    sx, cx, se, ce, D, _ = _parts(xi, eta)
    psi = np.exp(alpha * eta) / D ** 2
    return psi * (se / eta - ce / xi + ce * sx / xi ** 2 * np.exp(xi))


def closed_d_eta(xi, eta, alpha):
    sx, cx, se, ce, D, phi = _parts(xi, eta)
    m = np.exp(xi + alpha * eta) / D
    return ((alpha - 1.0) + phi / D) * m


def closed_d_eta_eta(xi, eta, alpha):
    """Square of the first-order factor plus ``m (phi_eta D - phi D_eta) / D^2``."""
    sx, cx, se, ce, D, phi = _parts(xi, eta)
    m = np.exp(xi + alpha * eta) / D
    e = np.exp(-eta)
    phi_eta = -e * (sx / xi - cx / eta) + e * cx / eta ** 2 + cx * (ce / eta ** 2 - 2.0 * se / eta ** 3)
    D_eta = se * sx / xi + cx * (ce / eta - se / eta ** 2)
    first = ((alpha - 1.0) + phi / D) ** 2 * m
    return first + m * (phi_eta * D - phi * D_eta) / D ** 2


def _second_term_bracket(xi, eta, eta_weight: bool):
    sx, cx, se, ce, _, _ = _parts(xi, eta)
    sinhc_x = sx / xi
    sinhc_e = se / eta
    third = (eta * sinhc_x) ** 2 if eta_weight else sinhc_x ** 2
    return (2.0 * cx * sinhc_x + cx ** 2 - third - cx ** 2 * sinhc_e ** 2 - 2.0 * cx * ce * sinhc_x * sinhc_e)


def closed_d_eta_eta_expanded(xi, eta, alpha, corrected: bool = True):
    """Same derivative with the second term fully expanded.

    ``corrected=False`` uses the bracket with ``sinh(xi)^2/xi^2`` as its third
    term; the expansion requires ``eta^2 sinh(xi)^2/xi^2`` there.
    """
    sx, cx, se, ce, D, phi = _parts(xi, eta)
    m = np.exp(xi + alpha * eta) / D
    first = ((alpha - 1.0) + phi / D) ** 2 * m
    return first + m / (eta ** 2 * D ** 2) * _second_term_bracket(xi, eta, corrected)


def closed_d_xi_xi(xi, eta, alpha):
    sx, cx, se, ce, D, _ = _parts(xi, eta)
    psi = np.exp(alpha * eta) / D ** 2
    ex = np.exp(xi)
    bracket = se / eta - ce / xi + ce * sx / xi ** 2 * ex
    D_xi = ce * (cx / xi - sx / xi ** 2) + se / eta * sx
    tail = ce / xi ** 2 + ce * cx / xi ** 2 * ex - 2.0 * ce * sx / xi ** 3 * ex + ce * sx / xi ** 2 * ex
    return psi * (-2.0 * D_xi / D * bracket + tail)


def closed_d_xi_eta(xi, eta, alpha):
    sx, cx, se, ce, D, phi = _parts(xi, eta)
    m = np.exp(xi + alpha * eta) / D
    tail = m / D ** 2 / (xi * eta) * (1.0 - cx * sx / xi) * (1.0 - ce * se / eta)
    return closed_d_xi(xi, eta, alpha) * ((alpha - 1.0) + phi / D) + tail


CLOSED_FORMS = {
    "d_xi": ((1, 0), closed_d_xi),
    "d_eta": ((0, 1), closed_d_eta),
    "d_eta_eta": ((0, 2), closed_d_eta_eta),
    "d_eta_eta_expanded": ((0, 2), closed_d_eta_eta_expanded),
    "d_eta_eta_expanded_uncorrected": ((0, 2), lambda x, y, a: closed_d_eta_eta_expanded(x, y, a, corrected=False)),
    "d_xi_xi": ((2, 0), closed_d_xi_xi),
    "d_xi_eta": ((1, 1), closed_d_xi_eta),
}

DEFAULT_DERIVATIVE_GRID = tuple((x, e) for x in (-2.3, -0.6, 0.8, 2.1, 4.4) for e in (-1.7, 0.9, 2.0, 3.6))


@dataclass
class DerivativeCheckRow:
    name: str
    order: tuple[int, int]
    max_rel_residual: float
    fd_rel_error: float


def derivative_formula_check(alpha: float, points=DEFAULT_DERIVATIVE_GRID, step: float = 0.01,
                             names=None) -> list[DerivativeCheckRow]:
    """Compare each closed form for derivatives of ``m_alpha`` with
    Richardson-extrapolated finite differences on ``points``."""
    _check_unit("alpha", alpha)
    pts = np.asarray(points, dtype=float)
    if np.any(pts == 0.0):
        raise DomainError("closed forms need points off the coordinate axes")
    X, Y = pts[:, 0], pts[:, 1]
    h = np.full(X.shape, step)
    est, err = richardson_derivatives(lambda x, y: log_m_alpha(x, y, alpha), X, Y, h, h)
    rows = []
    for name in names or CLOSED_FORMS:
        order, fn = CLOSED_FORMS[name]
        closed = fn(X, Y, alpha)
        fd = est[order]
        scale = np.maximum(np.abs(fd), 1e-8 * np.max(np.abs(fd)))
        rows.append(DerivativeCheckRow(name, order, float(np.max(np.abs(closed - fd) / scale)),
                                       float(np.max(err[order] / scale))))
    return rows


# ---------------------------------------------------------------------------
# Schur test for the t-integration kernels


def graded_rule(a: float, b: float, levels: int = 60, order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre panels on ``(a, b)`` refined geometrically (ratio 2)
    toward both endpoints; integrable power singularities and near-singular
    kernels at the ends are resolved to near machine precision."""
    half = 0.5 * (b - a)
    s, w = gauss_legendre(order, 0.0, 1.0)
    edges = half * 2.0 ** -np.arange(levels + 1, dtype=float)
    lo = np.concatenate([edges[1:], [0.0]])
    hi = edges
    d = (lo[:, None] + (hi - lo)[:, None] * s[None, :]).ravel()
    wd = ((hi - lo)[:, None] * w[None, :]).ravel()
    nodes = np.concatenate([a + d, b - d])
    weights = np.concatenate([wd, wd])
    # panels below the floating-point resolution of the endpoints carry negligible mass
    keep = (nodes > a) & (nodes < b)
    return nodes[keep], weights[keep]


@dataclass(frozen=True)
class SchurKernelSpec:
    """A positive kernel ``N(y, t)`` on ``out_interval x in_interval`` with
    test functions ``(dist to each singular end)^(-1/(p q))``."""

    out_interval: tuple[float, float]
    in_interval: tuple[float, float]
    p: float
    kernel: Callable = field(compare=False)
    label: str = ""
    singular_ends: tuple[bool, bool] = (True, True)

    def __post_init__(self):
        if not self.p > 1.0:
            raise DomainError("Schur exponent p must exceed 1")

    @property
    def q(self) -> float:
        return self.p / (self.p - 1.0)

    def test_function(self, v, interval, power: float):
        """``phi(v)^power`` with ``phi = prod(dist)^(-1/(p q))``."""
        a, b = interval
        e = power / (self.p * self.q)
        out = np.ones_like(np.asarray(v, dtype=float))
        if self.singular_ends[0]:
            out = out * (v - a) ** -e
        if self.singular_ends[1]:
            out = out * (b - v) ** -e
        return out


def pair_schur_spec(out_sheet: int, in_sheet: int, p: float, params: WormParams) -> SchurKernelSpec:
    """Kernel ``1/((1 - |alpha|) + (1 - |gamma|))`` of the block ``(out, in)``."""
    def kernel(y, t):
        alpha, gamma, _ = block_exponents(out_sheet, in_sheet, y, t, params)
        return 1.0 / ((1.0 - np.abs(alpha)) + (1.0 - np.abs(gamma)))
    return SchurKernelSpec(params.interval(out_sheet), params.interval(in_sheet), p, kernel,
                           f"pair({int(out_sheet)},{int(in_sheet)})")


def corner_schur_spec(p: float, params: WormParams) -> SchurKernelSpec:
    """Kernel ``1/((beta - pi + t) + (beta - pi + y))`` on ``I_1 x I_1``,
    singular only at the lower corner."""
    shift = params.beta - math.pi
    iv = params.interval(SheetId.E1)
    return SchurKernelSpec(iv, iv, p, lambda y, t: 1.0 / ((shift + t) + (shift + y)), "corner(1,1)",
                           singular_ends=(True, False))


def control_schur_spec(p: float, params: WormParams) -> SchurKernelSpec:
    iv = params.interval(SheetId.E1)
    return SchurKernelSpec(iv, iv, p, lambda y, t: 1.0 / (1.0 + (t - y) ** 2), "control",
                           singular_ends=(False, False))


def _graded_points(interval, points_per_decade: int, decades: int) -> np.ndarray:
    a, b = interval
    half = 0.5 * (b - a)
    k = np.arange(decades * points_per_decade + 1)
    d = half * 10.0 ** (-k / points_per_decade)
    return np.unique(np.concatenate([a + d, b - d]))


def _schur_side(spec: SchurKernelSpec, points_per_decade: int, decades: int, levels: int):
    yo = _graded_points(spec.out_interval, points_per_decade, decades)
    to = _graded_points(spec.in_interval, points_per_decade, decades)
    tn, tw = graded_rule(*spec.in_interval, levels=levels)
    yn, yw = graded_rule(*spec.out_interval, levels=levels)
    p, q = spec.p, spec.q
    # p-side: integrate over t for every y
    K = spec.kernel(yo[:, None], tn[None, :])
    p_vals = (K * (tw * spec.test_function(tn, spec.in_interval, p))[None, :]).sum(axis=1)
    p_ratio = p_vals / spec.test_function(yo, spec.out_interval, p)
    # q-side: integrate over y for every t
    K = spec.kernel(yn[:, None], to[None, :])
    q_vals = (K * (yw * spec.test_function(yn, spec.out_interval, q))[:, None]).sum(axis=0)
    q_ratio = q_vals / spec.test_function(to, spec.in_interval, q)
    return float(p_ratio.max()), float(q_ratio.max())


@dataclass
class SchurReport:
    label: str
    p: float
    p_side: float
    q_side: float
    p_side_refined: float
    q_side_refined: float

    @property
    def finite(self) -> bool:
        return all(math.isfinite(v) for v in (self.p_side, self.q_side, self.p_side_refined, self.q_side_refined))

    @property
    def refinement_change(self) -> float:
        return max(abs(self.p_side_refined / self.p_side - 1.0), abs(self.q_side_refined / self.q_side - 1.0))


def schur_test(spec: SchurKernelSpec, points_per_decade: int = 8, decades: int = 10, levels: int = 60) -> SchurReport:
    """Sups of ``int N(y,t) phi(t)^p dt / phi(y)^p`` over ``y`` and of the
    ``q``-analog over ``t``, on a grid graded toward the interval ends, and
    again with twice the grid density and quadrature depth."""
    p1, q1 = _schur_side(spec, points_per_decade, decades, levels)
    p2, q2 = _schur_side(spec, 2 * points_per_decade, decades, 2 * levels)
    return SchurReport(spec.label, spec.p, p1, q1, p2, q2)


def corner_schur_bounds(p: float) -> tuple[float, float]:
    """Half-line values ``(pi/sin(pi/q), pi/sin(pi/p))`` bounding the corner
    kernel's two ratios."""
    q = p / (p - 1.0)
    return math.pi / math.sin(math.pi / q), math.pi / math.sin(math.pi / p)
