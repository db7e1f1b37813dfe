"""The Szego kernel of the worm domain as a series over theta-modes,

    K(z, w) = sum_j  (z2 conj(w2))^j  k_j(z1, w1).
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._numerics import lstsq_slope
from .geometry import DomainError, WormParams
from .strip import log_kernel_integral

TAIL_WARNING_RATIO = 1e-8


class ConvergenceWarning(RuntimeWarning):
    pass


class DivergenceAlarm(RuntimeError):
    """The mode series does not decay at the requested truncation."""


@dataclass(frozen=True)
class InteriorPoint:
    z1: complex
    z2: complex

    def check(self, params: WormParams) -> "InteriorPoint":
        if self.z2 == 0:
            raise DomainError("z2 must be non-zero")
        lam = math.log(abs(self.z2) ** 2)
        if not (abs(self.z1.imag - lam) < 0.5 * math.pi and abs(lam) < params.half_width):
            raise DomainError(f"{self} is not inside the domain for beta = {params.beta}")
        return self

    def rotated(self, phi: float) -> "InteriorPoint":
        return InteriorPoint(self.z1, self.z2 * cmath.exp(1j * phi))

    def translated(self, a: float) -> "InteriorPoint":
        return InteriorPoint(self.z1 + a, self.z2)


@dataclass(frozen=True)
class KernelTruncation:
    j_max: int = 64
    tail_bound: float = 0.0


@dataclass
class KernelValue:
    value: complex
    truncation: KernelTruncation
    tail_ratio: float
    js: np.ndarray = field(repr=False)
    log_magnitudes: np.ndarray = field(repr=False)

    def decay_slopes(self) -> tuple[float, float]:
        return _decay_slopes(self.js, self.log_magnitudes, self.truncation.j_max)


def _decay_slopes(js: np.ndarray, logs: np.ndarray, j_max: int) -> tuple[float, float]:
    """Least-squares slopes of ``log |term_j|`` against ``|j|`` over the
    outer quartile on each side (positive ``j`` first)."""
    q = max(j_max // 4, 2)
    pos = js >= j_max - q
    neg = js <= -(j_max - q)
    return lstsq_slope(np.abs(js[pos]), logs[pos]), lstsq_slope(np.abs(js[neg]), logs[neg])


def _mode_terms(z: InteriorPoint, w: InteriorPoint, j_max: int, params: WormParams):
    """Each term as ``(log |term|, unit phase)``, for ``j = -j_max..j_max``."""
    rho = z.z2 * w.z2.conjugate()
    log_rho = math.log(abs(rho))
    arg_rho = cmath.phase(rho)
    zeta = z.z1 - w.z1.conjugate()
    js = np.arange(-j_max, j_max + 1)
    logs = np.empty(js.size)
    phases = np.empty(js.size, dtype=complex)
    for k, j in enumerate(js):
        top, mant = log_kernel_integral(zeta, int(j), params)
        m = abs(mant)
        logs[k] = j * log_rho + top + (math.log(m) if m > 0 else -math.inf) - math.log(4 * math.pi ** 2)
        phases[k] = cmath.exp(1j * j * arg_rho) * (mant / m if m > 0 else 0.0)
    return js, logs, phases


def szego_eval(z: InteriorPoint, w: InteriorPoint, params: WormParams, j_max: int = 64) -> KernelValue:
    """Truncated mode series for ``K(z, w)``.

    Terms are summed with ``math.fsum`` (exactly rounded, so the order of the
    terms does not matter).  Warns with :class:`ConvergenceWarning` when the
    outermost term exceeds ``1e-8`` of the partial sum.
    """
    z.check(params)
    w.check(params)
    js, logs, phases = _mode_terms(z, w, j_max, params)
    top = logs.max()
    scaled = np.exp(logs - top) * phases
    s = complex(math.fsum(scaled.real), math.fsum(scaled.imag))
    value = math.exp(top) * s
    tail = math.exp(max(logs[0], logs[-1]) - top) / abs(s) if s != 0 else math.inf
    if tail > TAIL_WARNING_RATIO:
        warnings.warn(f"mode series tail ratio {tail:.2e} at j_max = {j_max}; try j_max = {2 * j_max}",
                      ConvergenceWarning)
    trunc = KernelTruncation(j_max, math.exp(max(logs[0], logs[-1])))
    return KernelValue(value, trunc, tail, js, logs)


@dataclass
class DecayProfile:
    js: np.ndarray
    log_magnitudes: np.ndarray
    slope_positive: float
    slope_negative: float


def mode_decay_profile(z: InteriorPoint, w: InteriorPoint, params: WormParams, j_max: int = 64) -> DecayProfile:
    """``log |term_j|`` and the least-squares decay slopes (per unit ``|j|``)
    over the outer quartile of each side.

    Raises :class:`DivergenceAlarm` if either slope is not negative.
    """
    z.check(params)
    w.check(params)
    js, logs, _ = _mode_terms(z, w, j_max, params)
    sp, sn = _decay_slopes(js, logs, j_max)
    if not (sp < 0 and sn < 0):
        raise DivergenceAlarm(f"non-negative decay slope (j>0: {sp:.3g}, j<0: {sn:.3g})")
    return DecayProfile(js, logs, sp, sn)
