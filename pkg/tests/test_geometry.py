from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate

from wormszego.geometry import (
    SHEETS,
    BoundaryField,
    BoundaryGrid,
    BoundaryPoint,
    DomainError,
    SheetId,
    WormParams,
    chart_coordinates,
    chart_norm_p,
    embed,
    hardy_norm_p,
    inner,
    lambda_weight,
    lambda_weight_log_derivative,
    log_mod_z2,
    norm_equivalence_constants,
    read_field_csv,
    surface_weight,
    write_field_csv,
)

BETAS = [0.6 * math.pi, math.pi, 1.5 * math.pi]


def gram_volume(sheet, x, v, theta, params, h=1e-6):
    """Surface density from the Gram determinant of the embedding in R^4."""
    def real_embed(x, v, theta):
        z1, z2 = embed(BoundaryPoint(sheet, x, v, theta), params)
        return np.array([z1.real, z1.imag, z2.real, z2.imag])
    cols = []
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        p = np.array([x, v, theta])
        cols.append((real_embed(*(p + e)) - real_embed(*(p - e))) / (2 * h))
    J = np.stack(cols, axis=1)
    return math.sqrt(np.linalg.det(J.T @ J))


def test_rejects_small_beta():
    with pytest.raises(DomainError):
        WormParams(0.5 * math.pi)
    with pytest.raises(DomainError):
        WormParams(float("nan"))


@pytest.mark.parametrize("beta", BETAS)
def test_intervals_cover_the_strip(beta):
    params = WormParams(beta)
    # slanted sheets are where Im z1 - log|z2|^2 = -+pi/2 meets |log|z2|^2| < h
    h = params.half_width
    assert_allclose(params.interval(1), (-h + math.pi / 2, h + math.pi / 2))
    assert_allclose(params.interval(3), (-h - math.pi / 2, h - math.pi / 2))
    lo = min(params.interval(s)[0] for s in SHEETS)
    hi = max(params.interval(s)[1] for s in SHEETS)
    assert_allclose((lo, hi), (-beta, beta))


@pytest.mark.parametrize("beta", BETAS)
@pytest.mark.parametrize("sheet", SHEETS)
def test_boundary_points_satisfy_defining_equations(beta, sheet):
    params = WormParams(beta)
    a, b = params.interval(sheet)
    h = params.half_width
    for v in np.linspace(a, b, 7)[1:-1]:
        z1, z2 = embed(BoundaryPoint(sheet, 0.3, v, 1.1), params)
        lam = math.log(abs(z2) ** 2)
        gap_im = abs(z1.imag - lam)
        gap_mod = abs(lam)
        if sheet.slanted:
            assert gap_im == pytest.approx(math.pi / 2, abs=1e-12)
            assert gap_mod < h
        else:
            assert gap_mod == pytest.approx(h, abs=1e-12)
            assert gap_im <= math.pi / 2 + 1e-12


@pytest.mark.parametrize("sheet", SHEETS)
def test_chart_coordinates_invert_embed(sheet):
    params = WormParams(math.pi)
    a, b = params.interval(sheet)
    pt = BoundaryPoint(sheet, -1.3, 0.5 * (a + b), 2.0)
    back = chart_coordinates(*embed(pt, params), sheet)
    assert_allclose((back.x, back.v, back.theta), (pt.x, pt.v, pt.theta), atol=1e-14)


@pytest.mark.parametrize("beta", BETAS)
@pytest.mark.parametrize("sheet", SHEETS)
def test_surface_weight_matches_gram_determinant(beta, sheet):
    params = WormParams(beta)
    a, b = params.interval(sheet)
    for v in np.linspace(a, b, 5)[1:-1]:
        assert surface_weight(sheet, v, params) == pytest.approx(gram_volume(sheet, 0.2, v, 0.7, params), rel=1e-8)


def test_slanted_sheets_reject_points_outside_interval():
    params = WormParams(math.pi)
    with pytest.raises(DomainError):
        log_mod_z2(SheetId.E1, params.interval(1)[0] - 0.1, params)
    with pytest.raises(DomainError):
        surface_weight(SheetId.E3, params.beta + 1.0, params)


@pytest.mark.parametrize("sheet", [SheetId.E1, SheetId.E3])
def test_lambda_weight_log_derivative(sheet):
    params = WormParams(1.2 * math.pi)
    a, b = params.interval(sheet)
    v = np.linspace(a, b, 9)[1:-1]
    h = 1e-6
    fd = (np.log(lambda_weight(sheet, v + h, params)) - np.log(lambda_weight(sheet, v - h, params))) / (2 * h)
    assert_allclose(lambda_weight_log_derivative(sheet, v, params), fd, rtol=1e-7)


@pytest.mark.parametrize("sheet", SHEETS)
def test_norm_equivalence_constants_bound_the_ratio(sheet):
    params = WormParams(math.pi)
    c, C = norm_equivalence_constants(sheet, params)
    assert 0 < c <= C < math.inf


def small_grid(beta=math.pi):
    return BoundaryGrid(WormParams(beta), L=4.0, n_x=16, n_v=6, n_theta=4)


def test_measure_integrates_surface_area():
    grid = small_grid()
    ones = BoundaryField(grid, np.ones(grid.shape))
    area = 0.0
    for s in SHEETS:
        a, b = grid.params.interval(s)
        area += integrate.quad(lambda v: gram_volume(s, 0.0, v, 0.0, grid.params), a, b, epsabs=0, epsrel=1e-10)[0]
    area *= 2 * grid.L * 2 * math.pi
    assert inner(ones, ones).real == pytest.approx(area, rel=1e-7)
    assert hardy_norm_p(ones, 2.0) ** 2 == pytest.approx(area, rel=1e-7)


def test_field_arithmetic_and_conjugation():
    grid = small_grid()
    rng = np.random.default_rng(3)
    a = BoundaryField(grid, rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))
    b = BoundaryField(grid, rng.standard_normal(grid.shape))
    assert_allclose((a + b - b).samples, a.samples)
    assert_allclose((a * 2j).samples, 2j * a.samples)
    assert inner(a, b) == pytest.approx(inner(b, a).conjugate())
    assert inner(a.conj(), a.conj()) == pytest.approx(inner(a, a))


def test_field_shape_mismatch():
    grid = small_grid()
    with pytest.raises(ValueError):
        BoundaryField(grid, np.zeros((4, 3, 3, 3)))


def test_chart_norm_is_equivalent_to_surface_norm():
    grid = small_grid()
    rng = np.random.default_rng(5)
    f = BoundaryField(grid, rng.standard_normal(grid.shape))
    for s in SHEETS:
        only = BoundaryField(grid, np.where(np.arange(4)[:, None, None, None] == int(s) - 1, f.samples, 0))
        c, C = norm_equivalence_constants(s, grid.params)
        r = chart_norm_p(only, 2.0, sheet=s) / hardy_norm_p(only, 2.0)
        assert c * (1 - 1e-9) <= r <= C * (1 + 1e-9)


def test_holomorphic_trace_of_monomial():
    grid = small_grid()
    f = BoundaryField.from_holomorphic(grid, lambda z1, z2: z2 ** 2)
    X, V, T = grid.mesh(SheetId.E2)
    h = grid.params.half_width
    assert_allclose(f.samples[1], np.exp(h + 2j * T))


def test_field_csv_round_trip(tmp_path):
    grid = small_grid(1.3 * math.pi)
    rng = np.random.default_rng(7)
    f = BoundaryField(grid, rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))
    path = tmp_path / "field.csv"
    write_field_csv(f, path)
    g = read_field_csv(path, grid.params)
    assert g.grid == grid
    assert_allclose(g.samples, f.samples, rtol=1e-15)
