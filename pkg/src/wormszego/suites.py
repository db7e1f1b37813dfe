"""Named verification suites.  Each check returns raw metrics together with
the tolerance it is judged against, so reports and tests see the same numbers.
"""

from __future__ import annotations

import cmath
import configparser
import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy import integrate

from .geometry import SHEETS, BoundaryGrid, SheetId, WormParams
from .kernel import InteriorPoint, szego_eval
from .multipliers import (
    F_decay_check,
    alpha_blowup_fit,
    alpha_gamma_blowup_fit,
    corner_schur_spec,
    derivative_formula_check,
    log_Q,
    marcinkiewicz_scan,
    pair_schur_spec,
    schur_test,
)
from .projector import (
    fixed_point_residual,
    kernel_trace_field,
    projection_residuals,
    random_smooth_field,
    rayleigh_quotient,
    sobolev_commutation_residual,
)
from .strip import StripFunction, k_j, nu, omega_breakpoints, omega_j, parseval_residual, reproducing_inner_product

DEFAULT_TOLERANCES = {
    "parseval": 1e-6,
    "nu_quadrature": 1e-10,
    "reproducing": 1e-4,
    "kernel_symmetry": 1e-10,
    "projection": 1e-3,
    "refinement_gain": 2.0,
    "fixed_point": 1e-2,
    "rayleigh_excess": 2e-3,
    "stability": 0.05,
    "band_factor": 3.0,
    "derivative": 1e-6,
    "sobolev": 1e-4,
    "sobolev_order": 1.0,
}

SUITES = ("parseval", "kernel", "projection", "marcinkiewicz", "schur")

BETAS = (0.6 * math.pi, math.pi, 1.5 * math.pi)
BLOWUP_PARAMETERS = (0.5, 0.9, 0.99, 0.999)
SCHUR_EXPONENTS = (1.1, 1.5, 2.0, 4.0)


@dataclass
class RunConfig:
    beta: float = math.pi
    L: float = 20.0
    n_x: int = 512
    n_v: int = 64
    n_theta: int = 32
    n_t: int = 64
    xi_max: float = 12.0
    j_max: int = 64
    seed: int = 0
    n_random_fields: int = 50
    kernel_pairs: int = 10
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def __post_init__(self):
        if not self.beta > 0.5 * math.pi:
            raise ValueError("beta must exceed pi/2")
        for name in ("n_x", "n_v", "n_theta", "n_t", "j_max", "n_random_fields", "kernel_pairs"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be positive")
        merged = dict(DEFAULT_TOLERANCES)
        merged.update(self.tolerances)
        self.tolerances = merged

    @property
    def params(self) -> WormParams:
        return WormParams(self.beta)

    def grid(self, **changes) -> BoundaryGrid:
        kw = dict(params=self.params, L=self.L, n_x=self.n_x, n_v=self.n_v, n_theta=self.n_theta)
        kw.update(changes)
        return BoundaryGrid(**kw)

    def tol(self, name: str) -> float:
        return float(self.tolerances[name])

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        """Read ``key = value`` lines; tolerances are given as ``tol.<name>``."""
        parser = configparser.ConfigParser()
        parser.optionxform = str
        parser.read_string("[run]\n" + Path(path).read_text())
        section = parser["run"]
        kinds = {f.name: f.type for f in fields(cls)}
        kw, tols = {}, {}
        for key, raw in section.items():
            if key.startswith("tol."):
                tols[key[4:]] = float(raw)
            elif key in kinds and key != "tolerances":
                kw[key] = int(raw) if kinds[key] == "int" else float(raw)
            else:
                raise ValueError(f"unknown configuration key {key!r}")
        unknown = set(tols) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ValueError(f"unknown tolerance(s): {sorted(unknown)}")
        return cls(tolerances=tols, **kw)


@dataclass
class CheckResult:
    name: str
    criterion: int
    value: float
    tolerance: float
    passed: bool
    detail: str = ""


def _below(name, criterion, value, tol, detail=""):
    return CheckResult(name, criterion, float(value), float(tol), bool(value < tol), detail)


def _above(name, criterion, value, tol, detail=""):
    return CheckResult(name, criterion, float(value), float(tol), bool(value >= tol), detail)


# ---------------------------------------------------------------------------
# strip checks


def gaussian_density(j: int):
    center = 0.25 * j

    def g(xi):
        return np.exp(-(xi - center) ** 2) * (1.0 + 0.3j * xi)
    return g


def check_parseval(config: RunConfig) -> list[CheckResult]:
    tol = config.tol("parseval")
    out = []
    for beta in BETAS:
        params = WormParams(beta)
        worst = 0.0
        for j in range(-5, 6):
            f = StripFunction.from_callable(params, j, gaussian_density(j), xi_max=config.xi_max)
            worst = max(worst, parseval_residual(f))
        out.append(_below(f"parseval[beta={beta:.6f}]", 1, worst, tol, "max over j=-5..5"))
    return out


NU_SAMPLE = tuple(zip((-2.0, -1.1, -0.4, 0.0, 0.0, 0.3, 0.5, 0.9, 1.0, 1.7, 2.4, 3.0, -3.0, 4.2, 0.05),
                      (0, 1, -1, 0, -3, 2, 5, -2, 1, 3, -6, 0, 4, 6, -1)))


def nu_by_quadrature(xi: float, j: int, params: WormParams) -> float:
    """``(1/2pi) int exp(-2 y xi) omega_j(y) dy`` with adaptive quadrature on
    each smooth piece of the weight."""
    br = omega_breakpoints(params)
    total = 0.0
    for a, b in zip(br[:-1], br[1:]):
        if b - a <= 0:
            continue
        # evaluate just inside each piece so the indicators match the piece
        eps = 1e-14 * (b - a)
        val, _ = integrate.quad(lambda y: math.exp(-2 * y * xi) * omega_j(min(max(y, a + eps), b - eps), j, params),
                                a, b, epsabs=0.0, epsrel=1e-13, limit=200)
        total += val
    return total / (2.0 * math.pi)


def check_nu_quadrature(config: RunConfig) -> list[CheckResult]:
    params = config.params
    worst = 0.0
    for xi, j in NU_SAMPLE:
        ref = nu_by_quadrature(xi, j, params)
        worst = max(worst, abs(nu(xi, j, params) - ref) / ref)
    return [_below("nu_vs_quadrature", 2, worst, config.tol("nu_quadrature"), f"{len(NU_SAMPLE)} (xi, j) points")]


REPRODUCING_PAIRS = ((0.3j, -0.2 + 0.1j), (0.5 - 0.4j, 0.1 + 0.8j), (-1.0 + 1.2j, 0.7 - 1.5j))
REPRODUCING_MODES = (-3, 0, 4)


def check_reproducing(config: RunConfig) -> list[CheckResult]:
    params = config.params
    out = []
    for w0, w1 in REPRODUCING_PAIRS:
        worst = 0.0
        for j in REPRODUCING_MODES:
            lhs = reproducing_inner_product(w0, w1, j, params)
            rhs = k_j(w1, w0, j, params)
            worst = max(worst, abs(lhs - rhs) / abs(rhs))
        out.append(_below(f"reproducing[{w0},{w1}]", 3, worst, config.tol("reproducing"), "max over j in (-3, 0, 4)"))
    return out


# ---------------------------------------------------------------------------
# kernel checks


def random_interior_point(rng: np.random.Generator, params: WormParams, margin: float = 0.6) -> InteriorPoint:
    lam = margin * params.half_width * rng.uniform(-1, 1)
    im1 = lam + margin * 0.5 * math.pi * rng.uniform(-1, 1)
    z1 = complex(rng.uniform(-1, 1), im1)
    z2 = cmath.rect(math.exp(0.5 * lam), rng.uniform(0, 2 * math.pi))
    return InteriorPoint(z1, z2).check(params)


def check_kernel(config: RunConfig) -> list[CheckResult]:
    params = config.params
    rng = np.random.default_rng(config.seed)
    herm = rot = trans = 0.0
    worst_slope = -math.inf
    worst_imag = 0.0
    min_diag = math.inf
    worst_tail = 0.0
    for _ in range(config.kernel_pairs):
        z = random_interior_point(rng, params)
        w = random_interior_point(rng, params)
        phi = rng.uniform(0, 2 * math.pi)
        a = rng.uniform(-3, 3)
        kzw = szego_eval(z, w, params, config.j_max)
        scale = abs(kzw.value)
        herm = max(herm, abs(kzw.value - szego_eval(w, z, params, config.j_max).value.conjugate()) / scale)
        rot = max(rot, abs(kzw.value - szego_eval(z.rotated(phi), w.rotated(phi), params, config.j_max).value) / scale)
        trans = max(trans, abs(kzw.value - szego_eval(z.translated(a), w.translated(a), params, config.j_max).value) / scale)
        worst_slope = max(worst_slope, *kzw.decay_slopes())
        worst_tail = max(worst_tail, kzw.tail_ratio)
        for p in (z, w):
            d = szego_eval(p, p, params, config.j_max).value
            worst_imag = max(worst_imag, abs(d.imag) / abs(d))
            min_diag = min(min_diag, d.real)
    tol = config.tol("kernel_symmetry")
    return [
        _below("kernel_hermitian", 4, herm, tol),
        _below("kernel_rotation", 4, rot, tol),
        _below("kernel_translation", 4, trans, tol),
        _below("kernel_tail_slope", 4, worst_slope, 0.0, f"largest fitted slope; tail ratio {worst_tail:.2e}"),
        _below("kernel_diagonal_imaginary", 4, worst_imag, tol),
        _above("kernel_diagonal_positive", 4, min_diag, 1e-300, "smallest diagonal value"),
    ]


# ---------------------------------------------------------------------------
# projection checks


def _fields(grid: BoundaryGrid, seed: int, count: int, support: float):
    rng = np.random.default_rng(seed)
    return [random_smooth_field(grid, rng, support=support) for _ in range(count)]


def projection_residual_pair(config: RunConfig, L: float, n_t: int) -> tuple[float, float]:
    grid = config.grid(L=L)
    phi, psi = _fields(grid, config.seed, 2, support=0.5 * config.L)
    r = projection_residuals(phi, psi, n_t=n_t)
    return r.idempotence, r.self_adjointness


def check_projection(config: RunConfig) -> list[CheckResult]:
    tol = config.tol("projection")
    base = projection_residual_pair(config, config.L, config.n_t)
    fine = projection_residual_pair(config, 2 * config.L, 2 * config.n_t)
    gain_tol = config.tol("refinement_gain")
    out = []
    for k, name in enumerate(("idempotence", "self_adjointness")):
        out.append(_below(f"projection_{name}", 5, base[k], tol))
        gain = base[k] / fine[k] if fine[k] > 0 else math.inf
        out.append(_above(f"projection_{name}_refinement_gain", 5, gain, gain_tol,
                          f"base {base[k]:.3e}, doubled n_t and L {fine[k]:.3e}"))
    grid = config.grid()
    for j0 in (-2, 0, 3):
        r = fixed_point_residual(kernel_trace_field(grid, 0.1j, j0), n_t=config.n_t)
        out.append(_below(f"projection_fixed_point[j0={j0}]", 5, r, config.tol("fixed_point")))
    return out


def check_rayleigh(config: RunConfig) -> list[CheckResult]:
    grid = config.grid()
    rng = np.random.default_rng(config.seed + 1)
    top = max(rayleigh_quotient(random_smooth_field(grid, rng), n_t=config.n_t)
              for _ in range(config.n_random_fields))
    return [_below("projection_rayleigh_max", 6, top, 1.0 + config.tol("rayleigh_excess"),
                   f"{config.n_random_fields} random fields")]


SOBOLEV_PAIRS = ((SheetId.E1, SheetId.E2), (SheetId.E2, SheetId.E1))


def sobolev_residuals(config: RunConfig, out_sheet, in_sheet, steps=(1e-3, 5e-4)) -> list[float]:
    grid = config.grid()
    field_ = _fields(grid, config.seed + 2, 1, support=0.5 * config.L)[0]
    psi = grid.lambda_factors[int(in_sheet) - 1][None, :, None] * field_.samples[int(in_sheet) - 1]
    return [sobolev_commutation_residual(out_sheet, in_sheet, psi, grid, dy=dy, n_t=config.n_t) for dy in steps]


def check_sobolev(config: RunConfig) -> list[CheckResult]:
    out = []
    for o, i in SOBOLEV_PAIRS:
        r1, r2 = sobolev_residuals(config, o, i)
        kind = "slanted" if o.slanted else "flat"
        out.append(_below(f"sobolev[{int(o)},{int(i)}]", 10, r1, config.tol("sobolev"), f"{kind} out-sheet"))
        order = math.log2(r1 / r2) if r2 > 0 else math.inf
        out.append(_above(f"sobolev_order[{int(o)},{int(i)}]", 10, order, config.tol("sobolev_order"),
                          f"residuals {r1:.3e} -> {r2:.3e}"))
    return out


# ---------------------------------------------------------------------------
# multiplier checks


def check_marcinkiewicz(config: RunConfig) -> tuple[list[CheckResult], list[dict]]:
    stab = config.tol("stability")
    factor = config.tol("band_factor")
    out, rows = [], []

    fit, tables = alpha_blowup_fit(BLOWUP_PARAMETERS)
    fit.factor = factor
    rows += [r for t in tables for r in t.rows()]
    worst = max(_table_change(tables[k], tables[k + 1]) for k in range(0, len(tables), 2))
    out.append(_below("m_alpha_refinement", 7, worst, stab, "largest relative change of any weighted sup"))
    out.append(_below("m_alpha_band", 7, _band_spread(fit), factor,
                      f"C0={fit.C0:.4g}, exponent {fit.exponent:.3f}"))
    out.append(_above("m_alpha_reliable", 7, float(all(t.reliable for t in tables)), 1.0))

    pairs = [(a, g) for a in BLOWUP_PARAMETERS for g in BLOWUP_PARAMETERS]
    fit2, tables2 = alpha_gamma_blowup_fit(pairs)
    fit2.factor = factor
    rows += [r for t in tables2 for r in t.rows()]
    worst2 = max(_table_change(tables2[k], tables2[k + 1]) for k in range(0, len(tables2), 2))
    out.append(_below("m_alpha_gamma_refinement", 7, worst2, stab))
    out.append(_below("m_alpha_gamma_band", 7, _band_spread(fit2), factor,
                      f"C0={fit2.C0:.4g}, exponent {fit2.exponent:.3f}"))

    params = config.params
    q1 = marcinkiewicz_scan(lambda x, y: log_Q(x, y, params), 10, label="Q")
    q2 = marcinkiewicz_scan(lambda x, y: log_Q(x, y, params), 20, label="Q")
    rows += list(q1.rows()) + list(q2.rows())
    finite = all(math.isfinite(e.sup) for e in q1.entries.values())
    out.append(_above("Q_finite", 7, float(finite), 1.0, f"largest sup {q1.constant:.4g}"))
    out.append(_below("Q_refinement", 7, _table_change(q1, q2), stab))

    fd = F_decay_check(params)
    out.append(_below("F_tilde_refinement", 7, fd.refinement_change, stab,
                      f"sup eta^2|F'|={fd.sup_first:.4g}, sup |eta|^3|F''|={fd.sup_second:.4g}, "
                      f"c1={fd.c_lower:.4g}, c2={fd.c_upper:.4g}"))
    return out, rows


def _table_change(a, b) -> float:
    return max(abs(b.entries[k].sup / a.entries[k].sup - 1.0) for k in a.entries if a.entries[k].sup > 0)


def _band_spread(fit) -> float:
    """Largest factor by which a scaled constant departs from the geometric mean."""
    s = fit.scaled
    return float(max(s.max() / fit.C0, fit.C0 / s.min()))


CHECKED_DISPLAYS = ("d_xi", "d_eta", "d_eta_eta")


def check_derivatives(config: RunConfig) -> tuple[list[CheckResult], list[dict]]:
    tol = config.tol("derivative")
    out, rows = [], []
    for alpha in (0.3, 0.5, 0.9):
        for r in derivative_formula_check(alpha):
            rows.append({"alpha": alpha, "display": r.name, "max_rel_residual": r.max_rel_residual,
                         "fd_rel_error": r.fd_rel_error})
            if r.name in CHECKED_DISPLAYS:
                out.append(_below(f"derivative[{r.name},alpha={alpha}]", 8, r.max_rel_residual, tol))
    return out, rows


SCHUR_PAIRS = ((1, 1), (2, 2), (3, 3), (4, 4), (2, 1))


def check_schur(config: RunConfig) -> tuple[list[CheckResult], list[dict]]:
    params = config.params
    stab = config.tol("stability")
    out, rows = [], []
    for p in SCHUR_EXPONENTS:
        specs = [pair_schur_spec(o, i, p, params) for o, i in SCHUR_PAIRS] + [corner_schur_spec(p, params)]
        for spec in specs:
            r = schur_test(spec)
            rows.append({"kernel": r.label, "p": p, "p_side": r.p_side, "q_side": r.q_side,
                         "p_side_refined": r.p_side_refined, "q_side_refined": r.q_side_refined})
            detail = f"p-side {r.p_side:.5g}, q-side {r.q_side:.5g}"
            value = r.refinement_change if r.finite else math.inf
            out.append(_below(f"schur[{r.label},p={p}]", 9, value, stab, detail))
    return out, rows


# ---------------------------------------------------------------------------
# suites and reports


def suite_checks(config: RunConfig, suite: str):
    """Run one suite; returns ``(checks, extra_tables)``."""
    tables: dict[str, list[dict]] = {}
    if suite == "parseval":
        checks = check_parseval(config) + check_nu_quadrature(config) + check_reproducing(config)
    elif suite == "kernel":
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            checks = check_kernel(config)
    elif suite == "projection":
        checks = check_projection(config) + check_rayleigh(config) + check_sobolev(config)
    elif suite == "marcinkiewicz":
        checks, tables["marcinkiewicz"] = check_marcinkiewicz(config)
        more, tables["derivatives"] = check_derivatives(config)
        checks += more
    elif suite == "schur":
        checks, tables["schur"] = check_schur(config)
    else:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES + ('all',)}")
    return checks, tables


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(v) for k, v in r.items()})


def run_suite(config: RunConfig, suite: str, out_dir) -> int:
    """Run ``suite`` (or ``all``), write ``<suite>_checks.csv``, any extra
    tables and ``<suite>_summary.json`` into ``out_dir``; return 0 when every
    check passes and 1 otherwise."""
    names = SUITES if suite == "all" else (suite,)
    for n in names:
        if n not in SUITES:
            raise ValueError(f"unknown suite {n!r}; choose from {SUITES + ('all',)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    checks, tables = [], {}
    for n in names:
        c, t = suite_checks(config, n)
        checks += c
        tables.update(t)
    checks.sort(key=lambda c: (c.criterion, c.name))
    write_csv(out_dir / f"{suite}_checks.csv", [asdict(c) for c in checks])
    for name, rows in sorted(tables.items()):
        write_csv(out_dir / f"{suite}_{name}.csv", rows)
    config_dict = asdict(config)
    summary = {
        "suite": suite,
        "config": config_dict,
        "passed": all(c.passed for c in checks),
        "failed": [c.name for c in checks if not c.passed],
        "checks": [asdict(c) for c in checks],
    }
    (out_dir / f"{suite}_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0 if summary["passed"] else 1


__all__ = [
    "RunConfig",
    "CheckResult",
    "SUITES",
    "run_suite",
    "suite_checks",
    "SHEETS",
]
