"""Acceptance criteria 1-10 at their stated tolerances.

Each test runs the same check function the ``suite`` command uses, prints one
``PASS``/``FAIL`` line for the criterion (with every sub-check that failed)
and asserts that all sub-checks passed.
"""

from __future__ import annotations

import pytest

from wormszego import suites
from wormszego.suites import RunConfig

CRITERIA = {
    1: ("Paley-Wiener Parseval identity", lambda c: suites.check_parseval(c)),
    2: ("closed-form nu against adaptive quadrature", lambda c: suites.check_nu_quadrature(c)),
    3: ("reproducing property of k_j", lambda c: suites.check_reproducing(c)),
    4: ("Szego kernel symmetries and mode decay", lambda c: suites.check_kernel(c)),
    5: ("projection identities", lambda c: suites.check_projection(c)),
    6: ("discrete projection norm", lambda c: suites.check_rayleigh(c)),
    7: ("Marcinkiewicz certificates", lambda c: suites.check_marcinkiewicz(c)[0]),
    8: ("closed-form derivative displays", lambda c: suites.check_derivatives(c)[0]),
    9: ("Schur certificates", lambda c: suites.check_schur(c)[0]),
    10: ("Sobolev commutation", lambda c: suites.check_sobolev(c)),
}


@pytest.fixture(scope="module")
def config():
    return RunConfig()


def report(number, title, checks, capsys):
    failed = [c for c in checks if not c.passed]
    verdict = "PASS" if not failed else "FAIL"
    with capsys.disabled():
        print(f"\n[criterion {number:2d}] {verdict}: {title} ({len(checks) - len(failed)}/{len(checks)} checks)")
        for c in failed:
            print(f"    failed {c.name}: value {c.value:.3e} vs tolerance {c.tolerance:.3e} {c.detail}")
    return failed


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, config, capsys):
    title, run = CRITERIA[number]
    checks = run(config)
    assert checks, "no checks were run"
    assert all(c.criterion == number for c in checks)
    failed = report(number, title, checks, capsys)
    assert not failed, "; ".join(f"{c.name}={c.value:.3e} (tol {c.tolerance:.3e})" for c in failed)
