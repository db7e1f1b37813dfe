"""The Szego projection on discretized boundary fields.

On each Fourier fiber ``(xi, j)`` (``x``-transform and ``theta``-mode) the
boundary values of the Hardy space form the one-dimensional span of

    G_l(v) = exp(j lambda_l(v) / 2 - v xi),      l = 1..4,  v in I_l,

whose squared norm in ``sum_l L^2(I_l, sigma_l dv)`` is ``nu(xi, j)``.  The
projection is therefore fiberwise rank one, and in chart coordinates the
sheet-pair block ``T_{l,l'}`` has the symbol

    exp(c j - (t + y) xi - log nu(xi, j)),   c = (lambda_l(y) + lambda_l'(t)) / 2,

integrated over ``t in I_l'`` against ``sigma_l'(t)`` and the chart weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import legvander

from ._numerics import gauss_legendre
from .geometry import (
    SHEETS,
    BoundaryField,
    BoundaryGrid,
    DomainError,
    SheetId,
    WormParams,
    hardy_norm_p,
    inner,
    lambda_weight,
    lambda_weight_log_derivative,
    log_mod_z2,
    surface_weight,
)
from .strip import kernel_strip_function, log_nu, pw_inverse_grid


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class SheetPairMultiplier:
    """The symbol of the block ``T_{out, in}`` at heights ``y`` (out) and ``t`` (in)."""

    out_sheet: SheetId
    in_sheet: SheetId
    y: float
    t: float

    def __post_init__(self):
        object.__setattr__(self, "out_sheet", SheetId(self.out_sheet))
        object.__setattr__(self, "in_sheet", SheetId(self.in_sheet))

    def check(self, params: WormParams) -> "SheetPairMultiplier":
        for sheet, v in ((self.out_sheet, self.y), (self.in_sheet, self.t)):
            a, b = params.interval(sheet)
            if not a < v < b:
                raise DomainError(f"{v} is outside I_{int(sheet)} = ({a}, {b})")
        return self

    def exponent_c(self, params: WormParams) -> float:
        lam_y = log_mod_z2(self.out_sheet, self.y, params)
        lam_t = log_mod_z2(self.in_sheet, self.t, params)
        return 0.5 * (float(lam_y) + float(lam_t))


def log_unified_multiplier(pair: SheetPairMultiplier, xi, j, params: WormParams):
    pair.check(params)
    xi = np.asarray(xi, dtype=float)
    j = np.asarray(j)
    c = pair.exponent_c(params)
    return c * j - (pair.t + pair.y) * xi - log_nu(xi, j, params)


def unified_multiplier(pair: SheetPairMultiplier, xi, j, params: WormParams):
    """``exp(c j - (t + y) xi) / nu(xi, j)``, evaluated in log space."""
    out = np.exp(log_unified_multiplier(pair, xi, j, params))
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# transforms


@dataclass(frozen=True)
class SpectralField:
    """Transform-domain samples indexed ``(sheet, xi-bin, v, j-mode)``.

    ``xi`` is ``None`` when only the ``theta``-transform has been applied
    (the second axis is then still ``x``).
    """

    grid: BoundaryGrid
    coefficients: np.ndarray = field(repr=False)
    modes: np.ndarray = field(repr=False)
    xi: np.ndarray | None = field(default=None, repr=False)

    def mode(self, j: int) -> np.ndarray:
        """Coefficients of one ``theta``-mode, shape ``(4, n, n_v)``."""
        hits = np.nonzero(self.modes == j)[0]
        if hits.size == 0:
            raise KeyError(f"mode {j} not resolved by n_theta = {self.grid.n_theta}")
        return self.coefficients[..., hits[0]]


def theta_modes(n_theta: int) -> np.ndarray:
    """Integer modes in FFT order."""
    return np.rint(np.fft.fftfreq(n_theta) * n_theta).astype(int)


def xi_bins(grid: BoundaryGrid) -> np.ndarray:
    """Frequencies dual to the periodic ``x``-grid, in FFT order."""
    return 2.0 * math.pi * np.fft.fftfreq(grid.n_x, d=grid.dx)


def theta_mode_decompose(field: BoundaryField) -> SpectralField:
    """``(1/2pi) int f(.., theta) exp(-i j theta) dtheta`` for every resolved ``j``."""
    coeffs = np.fft.fft(field.samples, axis=-1) / field.grid.n_theta
    return SpectralField(field.grid, coeffs, theta_modes(field.grid.n_theta))


def theta_mode_compose(spec: SpectralField) -> BoundaryField:
    if spec.xi is not None:
        raise ValueError("field is still transformed in x")
    samples = np.fft.ifft(spec.coefficients, axis=-1) * spec.grid.n_theta
    return BoundaryField(spec.grid, samples)


def _x_forward(values: np.ndarray, grid: BoundaryGrid, axis: int) -> np.ndarray:
    """Scaled DFT approximating ``int psi(x) exp(-i x xi) dx``."""
    phase = np.exp(1j * grid.L * xi_bins(grid))
    shape = [1] * values.ndim
    shape[axis] = grid.n_x
    return grid.dx * np.fft.fft(values, axis=axis) * phase.reshape(shape)


def _x_inverse(values: np.ndarray, grid: BoundaryGrid, axis: int) -> np.ndarray:
    """Inverse of :func:`_x_forward`: ``(1/2pi) int hat psi exp(i x xi) dxi``."""
    phase = np.exp(-1j * grid.L * xi_bins(grid))
    shape = [1] * values.ndim
    shape[axis] = grid.n_x
    return np.fft.ifft(values * phase.reshape(shape), axis=axis) / grid.dx


def spectral_transform(field: BoundaryField) -> SpectralField:
    spec = theta_mode_decompose(field)
    coeffs = _x_forward(spec.coefficients, field.grid, axis=1)
    return SpectralField(field.grid, coeffs, spec.modes, xi_bins(field.grid))


def spectral_inverse(spec: SpectralField) -> BoundaryField:
    vals = _x_inverse(spec.coefficients, spec.grid, axis=1)
    return theta_mode_compose(SpectralField(spec.grid, vals, spec.modes))


# ---------------------------------------------------------------------------
# quadrature in the vertical variable


@lru_cache(maxsize=32)
def _log_nu_table(params: WormParams, L: float, n_x: int, n_theta: int) -> np.ndarray:
    grid = BoundaryGrid(params, L=L, n_x=n_x, n_v=1, n_theta=n_theta)
    xi = xi_bins(grid)[:, None]
    j = theta_modes(n_theta)[None, :]
    table = log_nu(xi, j, params)
    table.setflags(write=False)
    return table


def log_nu_table(grid: BoundaryGrid) -> np.ndarray:
    """``log nu`` on the ``(xi-bin, j-mode)`` lattice, shape ``(n_x, n_theta)``."""
    return _log_nu_table(grid.params, grid.L, grid.n_x, grid.n_theta)


def legendre_interpolation_matrix(n_from: int, n_to: int) -> np.ndarray:
    """Map values at ``n_from`` Gauss-Legendre nodes to ``n_to`` nodes through
    the interpolating polynomial (identity when the sizes agree)."""
    if n_from == n_to:
        return np.eye(n_from)
    src, _ = gauss_legendre(n_from)
    dst, _ = gauss_legendre(n_to)
    return legvander(dst, n_from - 1) @ np.linalg.inv(legvander(src, n_from - 1))


def _log_profile(sheet: SheetId, v: np.ndarray, grid: BoundaryGrid) -> np.ndarray:
    """``log G_l(v) - log(nu)/2`` with shape ``(n_x, len(v), n_theta)``."""
    lam = np.asarray(log_mod_z2(sheet, v, grid.params), dtype=float)
    xi = xi_bins(grid)
    j = theta_modes(grid.n_theta)
    half_lnu = 0.5 * log_nu_table(grid)
    return (0.5 * lam[None, :, None] * j[None, None, :]
            - v[None, :, None] * xi[:, None, None]
            - half_lnu[:, None, :])


def _check_psi(psi: np.ndarray, grid: BoundaryGrid) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    want = (grid.n_x, grid.n_v, grid.n_theta)
    if psi.shape != want:
        raise GridMismatchError(f"chart field has shape {psi.shape}, grid expects {want}")
    return psi


# ---------------------------------------------------------------------------
# the operator


def apply_T(out_sheet: int, in_sheet: int, psi: np.ndarray, grid: BoundaryGrid,
            n_t: int | None = None, y=None) -> np.ndarray:
    """Chart block ``T_{out,in} = Lambda_out P_{out,in} Lambda_in^{-1}``.

    ``psi`` is sampled on ``(x, v, theta)`` of ``in_sheet`` (shape
    ``(n_x, n_v, n_theta)``).  It is interpolated to ``n_t`` Gauss-Legendre
    nodes; for every node ``t`` the slice is transformed in ``(x, theta)``,
    multiplied by the symbol for every output height and accumulated with the
    ``t``-weight.  The output is sampled at ``y`` (default: the grid nodes of
    ``out_sheet``), shape ``(n_x, len(y), n_theta)``.
    """
    out_sheet, in_sheet = SheetId(out_sheet), SheetId(in_sheet)
    params = grid.params
    psi = _check_psi(psi, grid)
    n_t = grid.n_v if n_t is None else int(n_t)
    y = grid.v_rule(out_sheet)[0] if y is None else np.atleast_1d(np.asarray(y, dtype=float))
    a, b = params.interval(out_sheet)
    if np.any((y <= a) | (y >= b)):
        raise DomainError(f"output heights must lie inside I_{int(out_sheet)}")

    t_nodes, t_weights = gauss_legendre(n_t, *params.interval(in_sheet))
    psi_t = np.einsum("tv,xvk->xtk", legendre_interpolation_matrix(grid.n_v, n_t), psi)
    in_weight = t_weights * surface_weight(in_sheet, t_nodes, params) / lambda_weight(in_sheet, t_nodes, params)

    xi = xi_bins(grid)
    j = theta_modes(grid.n_theta)
    lnu = log_nu_table(grid)
    lam_y = np.asarray(log_mod_z2(out_sheet, y, params), dtype=float)
    lam_t = np.asarray(log_mod_z2(in_sheet, t_nodes, params), dtype=float)

    acc = np.zeros((grid.n_x, y.size, grid.n_theta), dtype=complex)
    for k in range(n_t):
        slice_hat = _x_forward(np.fft.fft(psi_t[:, k, :], axis=-1) / grid.n_theta, grid, axis=0)
        c = 0.5 * (lam_y + lam_t[k])
        log_m = (c[None, :, None] * j[None, None, :]
                 - (t_nodes[k] + y)[None, :, None] * xi[:, None, None]
                 - lnu[:, None, :])
        acc += in_weight[k] * np.exp(log_m) * slice_hat[:, None, :]
    out = np.fft.ifft(_x_inverse(acc, grid, axis=0), axis=-1) * grid.n_theta
    return lambda_weight(out_sheet, y, params)[None, :, None] * out


def _apply_P_dense(field: BoundaryField, n_t: int | None) -> BoundaryField:
    grid = field.grid
    lam = grid.lambda_factors
    out = np.zeros(grid.shape, dtype=complex)
    for lo in SHEETS:
        for li in SHEETS:
            psi = lam[int(li) - 1][None, :, None] * field.samples[int(li) - 1]
            out[int(lo) - 1] += apply_T(lo, li, psi, grid, n_t=n_t)
        out[int(lo) - 1] /= lam[int(lo) - 1][None, :, None]
    return BoundaryField(grid, out)


def _apply_P_factorized(field: BoundaryField, n_t: int | None) -> BoundaryField:
    grid = field.grid
    params = grid.params
    n_t = grid.n_v if n_t is None else int(n_t)
    spec = spectral_transform(field)
    interp = legendre_interpolation_matrix(grid.n_v, n_t)
    amplitude = np.zeros((grid.n_x, grid.n_theta), dtype=complex)
    for s in SHEETS:
        t, wt = gauss_legendre(n_t, *params.interval(s))
        coeff_t = np.einsum("tv,xvk->xtk", interp, spec.coefficients[int(s) - 1])
        weight = (wt * surface_weight(s, t, params))[None, :, None]
        amplitude += np.sum(weight * np.exp(_log_profile(s, t, grid)) * coeff_t, axis=1)
    out = np.empty_like(spec.coefficients)
    for s in SHEETS:
        out[int(s) - 1] = np.exp(_log_profile(s, grid.v_rule(s)[0], grid)) * amplitude[:, None, :]
    return spectral_inverse(SpectralField(grid, out, spec.modes, spec.xi))


def apply_P(field: BoundaryField, n_t: int | None = None, method: str = "factorized") -> BoundaryField:
    """Szego projection of a boundary field.

    ``method="dense"`` sums ``Lambda_l^{-1} T_{l,l'} Lambda_l'`` over the 16
    sheet pairs with :func:`apply_T`; ``"factorized"`` uses the rank-one
    structure of each fiber and is about ``n_v`` times cheaper.  Both use
    ``n_t`` nodes (default ``n_v``) for the inner integral.
    """
    if method == "factorized":
        return _apply_P_factorized(field, n_t)
    if method == "dense":
        return _apply_P_dense(field, n_t)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# test fields and diagnostics


def kernel_trace_field(grid: BoundaryGrid, w0: complex, j0: int) -> BoundaryField:
    """Boundary values of ``f(z) = k_{j0}(z1, w0) z2^{j0}``, a Hardy space member."""
    params = grid.params
    f = kernel_strip_function(w0, j0, params)
    out = np.zeros(grid.shape, dtype=complex)
    for s in SHEETS:
        v = grid.v_rule(s)[0]
        base = pw_inverse_grid(f, grid.x, v)
        lam = np.asarray(log_mod_z2(s, v, params), dtype=float)
        radial = np.exp(0.5 * j0 * lam)
        out[int(s) - 1] = (base * radial[None, :])[:, :, None] * np.exp(1j * j0 * grid.theta)[None, None, :]
    return BoundaryField(grid, out)


def _bump(u):
    """Smooth bump supported on ``|u| < 1``."""
    inside = np.abs(u) < 1.0
    safe = np.where(inside, u, 0.0)
    return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - safe * safe)), 0.0)


def random_smooth_field(grid: BoundaryGrid, rng: np.random.Generator, n_terms: int = 2,
                        max_mode: int = 3, max_degree: int = 3, support: float | None = None) -> BoundaryField:
    """Random field, smooth and compactly supported in ``|x| < support``
    (default ``L/2``).

    Each sheet carries ``n_terms`` products of a bump in ``x``, a random
    Legendre polynomial in ``v`` and a random trigonometric polynomial in
    ``theta``.
    """
    out = np.zeros(grid.shape, dtype=complex)
    modes = np.arange(-max_mode, max_mode + 1)
    half = 0.5 * grid.L if support is None else float(support)
    if half > grid.L:
        raise ValueError("support exceeds the x-window")
    for s in SHEETS:
        a, b = grid.params.interval(s)
        v = grid.v_rule(s)[0]
        u = (2.0 * v - (a + b)) / (b - a)
        for _ in range(n_terms):
            width = rng.uniform(1.0, 0.5 * half)
            center = rng.uniform(-half + width, half - width)
            prof_x = _bump((grid.x - center) / width)
            cv = rng.standard_normal(max_degree + 1) + 1j * rng.standard_normal(max_degree + 1)
            prof_v = legvander(u, max_degree) @ cv
            ct = rng.standard_normal(modes.size) + 1j * rng.standard_normal(modes.size)
            prof_t = np.exp(1j * np.outer(grid.theta, modes)) @ ct
            out[int(s) - 1] += prof_x[:, None, None] * prof_v[None, :, None] * prof_t[None, None, :]
    return BoundaryField(grid, out)


def _norm(field: BoundaryField) -> float:
    return math.sqrt(max(inner(field, field).real, 0.0))


@dataclass
class ProjectionResiduals:
    idempotence: float
    self_adjointness: float


def projection_residuals(phi: BoundaryField, psi: BoundaryField, n_t: int | None = None,
                         method: str = "factorized") -> ProjectionResiduals:
    """``||P P phi - P phi|| / ||P phi||`` and
    ``|<P phi, psi> - <phi, P psi>| / (||phi|| ||psi||)``."""
    p_phi = apply_P(phi, n_t, method)
    pp_phi = apply_P(p_phi, n_t, method)
    p_psi = apply_P(psi, n_t, method)
    idem = _norm(pp_phi - p_phi) / _norm(p_phi)
    sa = abs(inner(p_phi, psi) - inner(phi, p_psi)) / (_norm(phi) * _norm(psi))
    return ProjectionResiduals(idem, sa)


def fixed_point_residual(phi: BoundaryField, n_t: int | None = None) -> float:
    return _norm(apply_P(phi, n_t) - phi) / _norm(phi)


def annihilation_check(field: BoundaryField, n_t: int | None = None) -> float:
    """``|<P phi, phi>| / ||phi||^2`` (0 for the zero field)."""
    nrm2 = inner(field, field).real
    if nrm2 == 0.0:
        return 0.0
    return abs(inner(apply_P(field, n_t), field)) / nrm2


def rayleigh_quotient(field: BoundaryField, n_t: int | None = None) -> float:
    """``||P phi||^2 / ||phi||^2`` in surface measure."""
    projected = apply_P(field, n_t)
    return inner(projected, projected).real / inner(field, field).real


def lp_ratio(field: BoundaryField, p: float, n_t: int | None = None) -> float:
    return hardy_norm_p(apply_P(field, n_t), p) / hardy_norm_p(field, p)


# ---------------------------------------------------------------------------
# vertical derivative


def _x_theta_derivative(psi: np.ndarray, grid: BoundaryGrid, slope: float) -> np.ndarray:
    """Spectral ``(i d/dx - (i slope / 2) d/dtheta) psi``."""
    xi = xi_bins(grid)[:, None, None]
    j = theta_modes(grid.n_theta)[None, None, :]
    hat = np.fft.fft(np.fft.fft(psi, axis=0), axis=-1)
    return np.fft.ifft(np.fft.ifft((-xi + 0.5 * slope * j) * hat, axis=-1), axis=0)


def sobolev_commutation_residual(out_sheet: int, in_sheet: int, psi: np.ndarray, grid: BoundaryGrid,
                                 y0: float | None = None, dy: float = 1e-3,
                                 n_t: int | None = None) -> float:
    """Relative mismatch between a centered difference in ``y`` of
    ``T psi`` and the commuted form

        T[(i d/dx - (i s / 2) d/dtheta) psi] + (log lambda_weight)'(y) T psi,

    where ``s = 1`` on slanted and ``0`` on flat output sheets.
    """
    out_sheet = SheetId(out_sheet)
    params = grid.params
    a, b = params.interval(out_sheet)
    if y0 is None:
        y0 = 0.5 * (a + b)
    if not (a < y0 - dy and y0 + dy < b):
        raise DomainError("difference stencil leaves the interval")
    psi = _check_psi(psi, grid)
    pts = np.array([y0 - dy, y0, y0 + dy])
    vals = apply_T(out_sheet, in_sheet, psi, grid, n_t=n_t, y=pts)
    fd = (vals[:, 2, :] - vals[:, 0, :]) / (2.0 * dy)
    slope = 1.0 if out_sheet.slanted else 0.0
    dpsi = _x_theta_derivative(psi, grid, slope)
    commuted = apply_T(out_sheet, in_sheet, dpsi, grid, n_t=n_t, y=[y0])[:, 0, :]
    commuted = commuted + float(lambda_weight_log_derivative(out_sheet, y0, params)) * vals[:, 1, :]
    return float(np.linalg.norm(fd - commuted) / np.linalg.norm(commuted))
