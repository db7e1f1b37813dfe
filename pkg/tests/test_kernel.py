from __future__ import annotations

import cmath
import math
import warnings

import numpy as np
import pytest

from wormszego.geometry import DomainError, WormParams
from wormszego.kernel import (
    ConvergenceWarning,
    DivergenceAlarm,
    InteriorPoint,
    mode_decay_profile,
    szego_eval,
)
from wormszego.strip import k_j

PARAMS = WormParams(math.pi)
Z = InteriorPoint(0.2 + 0.1j, cmath.rect(math.exp(0.1), 0.4))
W = InteriorPoint(-0.5 - 0.3j, cmath.rect(math.exp(-0.2), 2.0))


@pytest.fixture(scope="module")
def kzw():
    return szego_eval(Z, W, PARAMS, j_max=32)


def test_interior_check():
    with pytest.raises(DomainError):
        InteriorPoint(0j, 0j).check(PARAMS)
    with pytest.raises(DomainError):
        # |log|z2|^2| beyond the half width
        InteriorPoint(0j, complex(math.exp(PARAMS.half_width), 0)).check(PARAMS)
    with pytest.raises(DomainError):
        InteriorPoint(2.0j, 1 + 0j).check(PARAMS)
    assert Z.check(PARAMS) is Z


def test_hermitian(kzw):
    other = szego_eval(W, Z, PARAMS, j_max=32)
    assert abs(kzw.value - other.value.conjugate()) / abs(kzw.value) < 1e-10


@pytest.mark.parametrize("phi", [0.3, 2.0, -1.1])
def test_rotation_invariance(kzw, phi):
    rot = szego_eval(Z.rotated(phi), W.rotated(phi), PARAMS, j_max=32)
    assert abs(kzw.value - rot.value) / abs(kzw.value) < 1e-10


@pytest.mark.parametrize("a", [1.5, -2.7])
def test_translation_invariance(kzw, a):
    tr = szego_eval(Z.translated(a), W.translated(a), PARAMS, j_max=32)
    assert abs(kzw.value - tr.value) / abs(kzw.value) < 1e-10


def test_series_matches_direct_sum_of_modes(kzw):
    rho = Z.z2 * W.z2.conjugate()
    direct = sum(rho ** j * k_j(Z.z1, W.z1, j, PARAMS) for j in range(-32, 33))
    assert kzw.value == pytest.approx(direct, rel=1e-12)


def test_diagonal_is_real_and_positive():
    d = szego_eval(Z, Z, PARAMS, j_max=32).value
    assert d.real > 0
    assert abs(d.imag) <= 1e-14 * d.real


def test_tail_is_geometric(kzw):
    sp, sn = kzw.decay_slopes()
    assert sp < 0 and sn < 0
    assert kzw.tail_ratio < 1e-8


def test_decay_profile_near_the_edge_still_decays():
    h = PARAMS.half_width
    lam = 0.45 * h
    p = InteriorPoint(1j * lam, cmath.rect(math.exp(0.5 * lam), 0.0))
    prof = mode_decay_profile(p, p, PARAMS, j_max=24)
    assert prof.slope_positive < 0 and prof.slope_negative < 0
    # near |z2|^2 = e^{h} the positive modes decay much more slowly
    assert abs(prof.slope_positive) < abs(prof.slope_negative)


def test_short_truncation_warns():
    h = PARAMS.half_width
    lam = 0.9 * h
    p = InteriorPoint(1j * lam, cmath.rect(math.exp(0.5 * lam), 0.0))
    with pytest.warns(ConvergenceWarning):
        szego_eval(p, p, PARAMS, j_max=4)


def test_divergence_alarm_for_a_growing_series(monkeypatch):
    import wormszego.kernel as kernel_mod

    def growing(z, w, j_max, params):
        js = np.arange(-j_max, j_max + 1)
        return js, 0.1 * np.abs(js).astype(float), np.ones(js.size, dtype=complex)

    monkeypatch.setattr(kernel_mod, "_mode_terms", growing)
    with pytest.raises(DivergenceAlarm):
        mode_decay_profile(Z, W, PARAMS, j_max=8)


def test_fsum_makes_the_sum_order_independent(kzw):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        again = szego_eval(Z, W, PARAMS, j_max=32)
    assert again.value == kzw.value
