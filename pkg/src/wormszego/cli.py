"""Command-line front end.

Every verb emits CSV: to ``<out>/<verb>.csv`` when ``--out`` is given and to
standard output otherwise.  ``suite`` writes its reports into ``--out``
(default ``./reports``) and exits non-zero when a check fails.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .geometry import DomainError, SheetId, read_field_csv, write_field_csv
from .kernel import InteriorPoint, mode_decay_profile, szego_eval
from .multipliers import (
    corner_schur_spec,
    derivative_formula_check,
    log_m_alpha,
    log_m_alpha_gamma,
    log_Q,
    marcinkiewicz_scan,
    pair_schur_spec,
    schur_test,
)
from .projector import (
    apply_P,
    fixed_point_residual,
    kernel_trace_field,
    projection_residuals,
    random_smooth_field,
    rayleigh_quotient,
    sobolev_commutation_residual,
)
from .strip import k_j, log_nu
from .suites import SUITES, RunConfig, run_suite

EXIT_USAGE = 2


def _emit(rows: list[dict], verb: str, out: Path | None) -> None:
    if not rows:
        return
    if out is None:
        w = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]), lineterminator="\n")
        fh = None
    else:
        out.mkdir(parents=True, exist_ok=True)
        fh = open(out / f"{verb}.csv", "w", newline="")
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    if fh is not None:
        fh.close()


def _complex_row(prefix: str, value: complex) -> dict:
    return {f"{prefix}_re": float(value.real), f"{prefix}_im": float(value.imag)}


# ---------------------------------------------------------------------------
# verbs


def cmd_nu(args, config: RunConfig) -> list[dict]:
    params = config.params
    xis = np.linspace(-config.xi_max, config.xi_max, args.n_xi) if args.xi is None else np.asarray(args.xi)
    rows = []
    for j in args.j:
        for x in xis:
            ln = log_nu(float(x), j, params)
            rows.append({"xi": float(x), "j": j, "log_nu": ln, "nu": math.exp(ln) if ln < 700 else math.inf})
    return rows


def cmd_kj(args, config: RunConfig) -> list[dict]:
    value = k_j(args.z, args.w, args.j, config.params)
    return [{"j": args.j, **_complex_row("z", args.z), **_complex_row("w", args.w), **_complex_row("k", value)}]


def cmd_kernel(args, config: RunConfig) -> list[dict]:
    params = config.params
    z = InteriorPoint(args.z1, args.z2)
    w = InteriorPoint(args.w1, args.w2)
    kv = szego_eval(z, w, params, config.j_max)
    prof = mode_decay_profile(z, w, params, config.j_max)
    return [{**_complex_row("K", kv.value), "j_max": config.j_max, "tail_ratio": kv.tail_ratio,
             "slope_positive": prof.slope_positive, "slope_negative": prof.slope_negative}]


def cmd_project(args, config: RunConfig) -> list[dict]:
    grid = config.grid()
    if args.input is not None:
        field = read_field_csv(args.input, config.params)
    else:
        field = random_smooth_field(grid, np.random.default_rng(config.seed))
    projected = apply_P(field, config.n_t)
    if args.output is not None:
        write_field_csv(projected, args.output)
    return [{"rayleigh_quotient": rayleigh_quotient(field, config.n_t),
             "output": "" if args.output is None else str(args.output)}]


def cmd_verify_projection(args, config: RunConfig) -> list[dict]:
    grid = config.grid()
    rng = np.random.default_rng(config.seed)
    rows = []
    for k in range(args.pairs):
        phi, psi = random_smooth_field(grid, rng), random_smooth_field(grid, rng)
        r = projection_residuals(phi, psi, config.n_t)
        rows.append({"test": f"random_pair_{k}", "idempotence": r.idempotence,
                     "self_adjointness": r.self_adjointness, "fixed_point": math.nan})
    for j0 in args.j0:
        res = fixed_point_residual(kernel_trace_field(grid, args.w0, j0), config.n_t)
        rows.append({"test": f"kernel_trace_j{j0}", "idempotence": math.nan,
                     "self_adjointness": math.nan, "fixed_point": res})
    return rows


def cmd_sobolev(args, config: RunConfig) -> list[dict]:
    grid = config.grid()
    field = random_smooth_field(grid, np.random.default_rng(config.seed))
    rows = []
    for o, i in args.pair:
        psi = grid.lambda_factors[i - 1][None, :, None] * field.samples[i - 1]
        for dy in args.dy:
            r = sobolev_commutation_residual(o, i, psi, grid, dy=dy, n_t=config.n_t)
            rows.append({"out_sheet": o, "in_sheet": i, "dy": dy, "residual": r})
    return rows


def cmd_marcinkiewicz(args, config: RunConfig) -> list[dict]:
    params = config.params
    if args.symbol == "Q":
        fn, label = (lambda x, y: log_Q(x, y, params)), "Q"
    elif args.symbol == "m_alpha":
        a = args.alpha
        fn, label = (lambda x, y: log_m_alpha(x, y, a)), f"m_alpha[{a}]"
    else:
        a, g = args.alpha, args.gamma
        fn, label = (lambda x, y: log_m_alpha_gamma(x, y, a, g)), f"m_alpha_gamma[{a},{g}]"
    return list(marcinkiewicz_scan(fn, args.points_per_decade, label=label).rows())


def cmd_schur(args, config: RunConfig) -> list[dict]:
    params = config.params
    if args.pair is None:
        spec = corner_schur_spec(args.p, params)
    else:
        spec = pair_schur_spec(args.pair[0], args.pair[1], args.p, params)
    r = schur_test(spec)
    return [{"kernel": r.label, "p": r.p, "p_side": r.p_side, "q_side": r.q_side,
             "p_side_refined": r.p_side_refined, "q_side_refined": r.q_side_refined,
             "refinement_change": r.refinement_change}]


def cmd_derivative_check(args, config: RunConfig) -> list[dict]:
    return [{"alpha": args.alpha, "display": r.name, "order": f"{r.order[0]}{r.order[1]}",
             "max_rel_residual": r.max_rel_residual, "fd_rel_error": r.fd_rel_error}
            for r in derivative_formula_check(args.alpha)]


# ---------------------------------------------------------------------------
# parser


def _sheet_pair(text: str) -> tuple[int, int]:
    try:
        o, i = (int(s) for s in text.split(","))
        SheetId(o), SheetId(i)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected OUT,IN sheet numbers in 1..4, got {text!r}") from exc
    return o, i


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wormszego", description=__doc__.splitlines()[0])
    parser.add_argument("--beta", type=float, help="worm parameter beta (> pi/2)")
    parser.add_argument("--config", type=Path, help="key = value configuration file")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--seed", type=int, help="random seed")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("nu", help="Plancherel density on a frequency grid")
    p.add_argument("--j", type=int, nargs="+", default=[0])
    p.add_argument("--xi", type=float, nargs="+")
    p.add_argument("--n-xi", type=int, default=25)
    p.set_defaults(func=cmd_nu)

    p = sub.add_parser("kj", help="strip kernel k_j(z, w)")
    p.add_argument("--z", type=complex, required=True)
    p.add_argument("--w", type=complex, required=True)
    p.add_argument("--j", type=int, default=0)
    p.set_defaults(func=cmd_kj)

    p = sub.add_parser("kernel", help="Szego kernel K(z, w)")
    for name in ("z1", "z2", "w1", "w2"):
        p.add_argument(f"--{name}", type=complex, required=True)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("project", help="apply the projection to a field CSV (or a random field)")
    p.add_argument("--input", type=Path)
    p.add_argument("--output", type=Path)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("verify-projection", help="idempotence, self-adjointness and fixed-point residuals")
    p.add_argument("--pairs", type=int, default=2)
    p.add_argument("--w0", type=complex, default=0.1j)
    p.add_argument("--j0", type=int, nargs="*", default=[-2, 0, 3])
    p.set_defaults(func=cmd_verify_projection)

    p = sub.add_parser("sobolev-check", help="vertical derivative commutation residuals")
    p.add_argument("--pair", type=_sheet_pair, nargs="+", default=[(1, 2), (2, 1)])
    p.add_argument("--dy", type=float, nargs="+", default=[1e-3, 5e-4])
    p.set_defaults(func=cmd_sobolev)

    p = sub.add_parser("marcinkiewicz", help="weighted derivative sups of a multiplier")
    p.add_argument("--symbol", choices=("m_alpha", "m_alpha_gamma", "Q"), default="m_alpha")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--points-per-decade", type=int, default=10)
    p.set_defaults(func=cmd_marcinkiewicz)

    p = sub.add_parser("schur", help="Schur test for a block kernel (default: the corner kernel)")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--pair", type=_sheet_pair)
    p.set_defaults(func=cmd_schur)

    p = sub.add_parser("derivative-check", help="closed-form derivatives against finite differences")
    p.add_argument("--alpha", type=float, default=0.5)
    p.set_defaults(func=cmd_derivative_check)

    p = sub.add_parser("suite", help="run a verification suite")
    p.add_argument("name", help=f"one of {', '.join(SUITES + ('all',))}")
    p.set_defaults(func=None)
    return parser


def load_config(args) -> RunConfig:
    config = RunConfig.from_file(args.config) if args.config is not None else RunConfig()
    changes = {}
    if args.beta is not None:
        changes["beta"] = args.beta
    if args.seed is not None:
        changes["seed"] = args.seed
    return replace(config, **changes) if changes else config


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args)
    except (OSError, ValueError) as exc:
        parser.error(str(exc))
    if args.verb == "suite":
        if args.name not in SUITES + ("all",):
            parser.error(f"unknown suite {args.name!r}; choose from {', '.join(SUITES + ('all',))}")
        out = args.out if args.out is not None else Path("reports")
        status = run_suite(config, args.name, out)
        summary = out / f"{args.name}_summary.json"
        print(f"{'PASS' if status == 0 else 'FAIL'}: {summary}")
        return status
    try:
        rows = args.func(args, config)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _emit(rows, args.verb, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
