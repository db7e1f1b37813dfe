"""Numerical Szego kernel and Szego projection of the model worm domain.

Modules
-------
geometry
    Boundary sheets, surface and Lambda weights, discretized boundary fields.
strip
    Weighted Bergman spaces of the strip, Plancherel densities and kernels.
kernel
    The Szego kernel as a series over theta-modes.
projector
    The Szego projection on boundary fields via a fiberwise multiplier.
multipliers
    Normalized multipliers, Marcinkiewicz and Schur certificates.
suites
    Named verification suites with CSV/JSON reports.
"""

from __future__ import annotations

from .geometry import SHEETS, BoundaryField, BoundaryGrid, DomainError, SheetId, WormParams
from .kernel import InteriorPoint, szego_eval
from .projector import apply_P, apply_T
from .strip import StripFunction, k_j, log_nu, nu
from .suites import RunConfig, run_suite

__all__ = [
    "SHEETS",
    "BoundaryField",
    "BoundaryGrid",
    "DomainError",
    "InteriorPoint",
    "RunConfig",
    "SheetId",
    "StripFunction",
    "WormParams",
    "apply_P",
    "apply_T",
    "k_j",
    "log_nu",
    "nu",
    "run_suite",
    "szego_eval",
]

__version__ = "0.1.0"
