from __future__ import annotations

import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wormszego.geometry import DomainError, SheetId, WormParams
from wormszego.multipliers import (
    CLOSED_FORMS,
    F_decay_check,
    NormalizedCoords,
    PairKind,
    alpha_blowup_fit,
    alpha_gamma_of,
    block_exponents,
    closed_d_xi,
    control_schur_spec,
    corner_schur_bounds,
    corner_schur_spec,
    D_fn,
    derivative_formula_check,
    from_normalized,
    graded_rule,
    log_Q,
    log_m_alpha,
    m_alpha_fn,
    m_alpha_gamma_fn,
    marcinkiewicz_scan,
    multiplier_consistency,
    nu_tilde,
    pair_kind,
    pair_schur_spec,
    schur_test,
    to_normalized,
)
from wormszego.projector import SheetPairMultiplier
from wormszego.strip import nu

PARAMS = WormParams(1.3 * math.pi)
PAIRS = list(itertools.product(range(1, 5), repeat=2))


def mid_heights(out_sheet, in_sheet, params=PARAMS, frac=(0.3, 0.6)):
    a, b = params.interval(out_sheet)
    c, d = params.interval(in_sheet)
    return a + frac[0] * (b - a), c + frac[1] * (d - c)


def test_normalized_round_trip():
    xi, j = 0.37, -4
    c = to_normalized(xi, j, PARAMS)
    assert from_normalized(c, PARAMS) == pytest.approx((xi, j))
    assert c == NormalizedCoords(math.pi * xi, PARAMS.half_width * (2 * xi - (j + 1)))


@pytest.mark.parametrize("xi,j", [(0.0, 0), (0.8, -3), (-1.2, 2), (3.0, 7)])
def test_nu_tilde_is_nu_in_normalized_coordinates(xi, j):
    c = to_normalized(xi, j, PARAMS)
    assert nu_tilde(c.xi_n, c.eta_n, PARAMS) == pytest.approx(nu(xi, j, PARAMS), rel=1e-13)
    # without the factor 4 under the root the identity fails
    assert abs(nu_tilde(c.xi_n, c.eta_n, PARAMS, root_coefficient=1.0) / nu(xi, j, PARAMS) - 1) > 1e-3


@pytest.mark.parametrize("out_sheet,in_sheet", PAIRS)
def test_factorization_matches_block_symbol(out_sheet, in_sheet):
    y, t = mid_heights(out_sheet, in_sheet)
    pair = SheetPairMultiplier(out_sheet, in_sheet, y, t)
    xi = np.linspace(-3, 3, 13)
    for j in (-4, 0, 5):
        assert multiplier_consistency(pair, PARAMS, xi, j) < 1e-12


def expected_exponents(out_sheet, in_sheet, y, t, beta):
    """Exponents derived by hand for each block."""
    h = beta - math.pi / 2
    table = {
        (1, 1): ((math.pi - y - t) / (2 * h), -1.0),
        (2, 2): (-1.0, (2 * h - t - y) / math.pi),
        (4, 4): (1.0, (-2 * h - t - y) / math.pi),
        (4, 1): ((beta - t) / (2 * h), -(beta + y) / math.pi),
        (2, 3): (-(beta + t) / (2 * h), (beta - y) / math.pi),
        (3, 1): (-(t + y) / (2 * h), 0.0),
        (1, 3): (-(t + y) / (2 * h), 0.0),
        (4, 2): (0.0, -(t + y) / math.pi),
        (4, 3): ((beta - math.pi - t) / (2 * h), (math.pi - beta - y) / math.pi),
    }
    return table[(out_sheet, in_sheet)]


@pytest.mark.parametrize("out_sheet,in_sheet", [(1, 1), (2, 2), (4, 4), (4, 1), (2, 3), (3, 1), (1, 3), (4, 2),
                                                (4, 3)])
def test_exponents_against_hand_derivation(out_sheet, in_sheet):
    y, t = mid_heights(out_sheet, in_sheet)
    alpha, gamma, _ = block_exponents(out_sheet, in_sheet, y, t, PARAMS)
    ea, eg = expected_exponents(out_sheet, in_sheet, y, t, PARAMS.beta)
    assert float(alpha) == pytest.approx(ea, abs=1e-14)
    assert float(gamma) == pytest.approx(eg, abs=1e-14)


@pytest.mark.parametrize("out_sheet,in_sheet", PAIRS)
def test_margin_is_positive_but_alpha_may_reach_one(out_sheet, in_sheet):
    rng = np.random.default_rng(out_sheet * 10 + in_sheet)
    for _ in range(20):
        y, t = mid_heights(out_sheet, in_sheet, frac=rng.uniform(0.001, 0.999, 2))
        nm = alpha_gamma_of(SheetPairMultiplier(out_sheet, in_sheet, y, t), PARAMS)
        assert nm.margin > 0
        assert abs(nm.alpha) <= 1 + 1e-15 and abs(nm.gamma) <= 1 + 1e-15
    if (out_sheet, in_sheet) in ((2, 2), (4, 4)):
        assert abs(nm.alpha) == pytest.approx(1.0)


def test_pair_kinds():
    assert pair_kind(2, 2) is PairKind.DIAGONAL
    assert pair_kind(1, 3) is PairKind.GAP
    assert pair_kind(1, 2) is PairKind.OFF_DIAGONAL


def test_D_and_symbols():
    xi, eta = 0.7, -1.1
    D = math.cosh(eta) * math.sinh(xi) / xi + math.sinh(eta) / eta * math.cosh(xi)
    assert D_fn(xi, eta) == pytest.approx(D, rel=1e-14)
    assert m_alpha_fn(xi, eta, 0.4) == pytest.approx(math.exp(xi + 0.4 * eta) / D, rel=1e-14)
    assert m_alpha_gamma_fn(xi, eta, 0.4, 0.2) == pytest.approx(math.exp(0.2 * xi + 0.4 * eta) / D, rel=1e-14)
    assert D_fn(0.0, 0.0) == pytest.approx(2.0)


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.5, 1.5])
def test_symbols_reject_parameters_outside_unit_interval(bad):
    with pytest.raises(DomainError):
        m_alpha_fn(0.5, 0.5, bad)
    with pytest.raises(DomainError):
        m_alpha_gamma_fn(0.5, 0.5, 0.5, bad)


def test_closed_derivative_against_arbitrary_precision():
    xi, eta, alpha = 0.8, 2.0, 0.5
    with mpmath.workdps(40):
        def m(x):
            return mpmath.e ** (x + alpha * eta) / (mpmath.cosh(eta) * mpmath.sinh(x) / x
                                                   + mpmath.sinh(eta) / eta * mpmath.cosh(x))
        ref = mpmath.diff(m, xi)
    assert closed_d_xi(xi, eta, alpha) == pytest.approx(float(ref), rel=1e-13)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.9])
def test_derivative_displays(alpha):
    rows = {r.name: r for r in derivative_formula_check(alpha)}
    for name in ("d_xi", "d_eta", "d_eta_eta", "d_eta_eta_expanded", "d_xi_xi", "d_xi_eta"):
        assert rows[name].max_rel_residual < 1e-6, name
    # the expansion with sinh(xi)^2/xi^2 in place of eta^2 sinh(xi)^2/xi^2 is wrong
    assert rows["d_eta_eta_expanded_uncorrected"].max_rel_residual > 0.1
    assert set(rows) == set(CLOSED_FORMS)


def test_derivative_check_rejects_axis_points():
    with pytest.raises(DomainError):
        derivative_formula_check(0.5, points=[(0.0, 1.0)])


def test_marcinkiewicz_scan_of_m_alpha_is_finite_and_stable():
    g = lambda x, y: log_m_alpha(x, y, 0.5)
    coarse = marcinkiewicz_scan(g, 10, label="m")
    fine = marcinkiewicz_scan(g, 20, label="m")
    assert coarse.reliable and fine.reliable
    for k, e in coarse.entries.items():
        assert math.isfinite(e.sup) and e.sup > 0
        assert abs(fine.entries[k].sup / e.sup - 1) < 0.05
    rows = list(fine.rows())
    assert {r["order"] for r in rows} == {"00", "10", "01", "20", "02", "11"}


def test_blowup_follows_inverse_gap():
    fit, _ = alpha_blowup_fit([0.5, 0.9, 0.99])
    assert fit.within_band
    assert fit.exponent == pytest.approx(-1.0, abs=0.1)
    assert fit.refinement_change < 0.05


def test_Q_is_bounded():
    t = marcinkiewicz_scan(lambda x, y: log_Q(x, y, PARAMS), 5, label="Q")
    assert all(math.isfinite(e.sup) for e in t.entries.values())
    assert t.entries[(0, 0)].sup < 1.0


def test_F_tilde_decay():
    r = F_decay_check(WormParams(math.pi), n=200)
    assert math.isfinite(r.sup_first) and math.isfinite(r.sup_second)
    assert 0 < r.c_lower <= r.c_upper < math.inf
    assert r.refinement_change < 0.05


def test_graded_rule_resolves_endpoint_singularities():
    x, w = graded_rule(0.0, 1.0)
    assert np.all((x > 0) & (x < 1))
    # panels closer to 1 than the float spacing are dropped; for an inverse
    # square root that loses mass of order sqrt(machine epsilon)
    assert np.sum(w * x ** -0.5 * (1 - x) ** -0.5) == pytest.approx(math.pi, rel=1e-7)
    assert np.sum(w * x ** -0.5) == pytest.approx(2.0, rel=1e-8)
    assert np.sum(w * np.log(x)) == pytest.approx(-1.0, rel=1e-13)


@pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
def test_corner_kernel_approaches_half_line_constants(p):
    r = schur_test(corner_schur_spec(p, PARAMS))
    bp, bq = corner_schur_bounds(p)
    assert r.p_side <= bp * (1 + 1e-6) or r.p_side <= bq * (1 + 1e-6)
    assert max(r.p_side, r.q_side) <= max(bp, bq) * (1 + 1e-6)
    assert r.refinement_change < 0.05


def test_corner_bounds_at_p_two():
    assert corner_schur_bounds(2.0) == pytest.approx((math.pi, math.pi))


@pytest.mark.parametrize("out_sheet,in_sheet", [(1, 1), (2, 2), (2, 1), (4, 3)])
@pytest.mark.parametrize("p", [1.1, 2.0, 4.0])
def test_pair_schur_sides_are_finite_and_stable(out_sheet, in_sheet, p):
    r = schur_test(pair_schur_spec(out_sheet, in_sheet, p, PARAMS))
    assert r.finite
    assert r.refinement_change < 0.05


def test_control_kernel_is_bounded():
    r = schur_test(control_schur_spec(2.0, PARAMS))
    a, b = PARAMS.interval(SheetId.E1)
    assert r.p_side <= (b - a) + 1e-12


def test_schur_exponent_must_exceed_one():
    with pytest.raises(DomainError):
        corner_schur_spec(1.0, PARAMS)


@settings(max_examples=200, deadline=None)
@given(out_sheet=st.integers(1, 4), in_sheet=st.integers(1, 4),
       fy=st.floats(1e-6, 1 - 1e-6), ft=st.floats(1e-6, 1 - 1e-6),
       beta=st.floats(0.55 * math.pi, 3 * math.pi))
def test_margin_positive_everywhere(out_sheet, in_sheet, fy, ft, beta):
    params = WormParams(beta)
    y, t = mid_heights(out_sheet, in_sheet, params, frac=(fy, ft))
    nm = alpha_gamma_of(SheetPairMultiplier(out_sheet, in_sheet, y, t), params)
    assert nm.margin > 0


@settings(max_examples=200, deadline=None)
@given(xi=st.floats(-50, 50), j=st.integers(-40, 40))
def test_normalized_coordinates_invert(xi, j):
    back = from_normalized(to_normalized(xi, j, PARAMS), PARAMS)
    assert back[0] == pytest.approx(xi, abs=1e-12)
    assert back[1] == pytest.approx(j, abs=1e-9)
