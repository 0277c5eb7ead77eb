#!/usr/bin/env python3
"""
rsl - Riccati stability lab command line.

Subcommands:
    catalog   list, export or re-import the built-in problems
    analyze   criteria verdict + oracle cross-check for one problem
    sweep     one analysis per value of a parameter
    root      differential root of an expression as CSV
    oracle    direct integration only

Exit codes: 0 ok, 1 invalid input, 2 theory inapplicable (the report is
still written), 3 integrator failure.
"""

import argparse
import json
import sys
from io import StringIO
from pathlib import Path
from typing import Optional

import numpy as np

from stability_lab.analysis import StabilityAnalyzer, load_problem
from stability_lab.coeffexpr.catalog import CATALOG, catalog, export_catalog, import_catalog
from stability_lab.coeffexpr.evaluator import Evaluator, is_real_valued
from stability_lab.coeffexpr.parser import parse
from stability_lab.coeffexpr.trace import make_grid
from stability_lab.config import FORMATS, METHODS, resolve_config
from stability_lab.errors import (
    QuadratureFailure,
    StabilityLabError,
    StepSizeUnderflow,
    TheoryInapplicable,
)
from stability_lab.oracle import fundamental_growth, integrate_linear, residual_check
from stability_lab.report import (
    dumps,
    sweep_document,
    write_root_csv,
    write_solution_csv,
    write_sweep_csv,
    write_text,
)
from stability_lab.riccati import differential_root
from stability_lab.validators import OutputPathValidator, ParamValidator, ProblemValidator

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_INAPPLICABLE = 2
EXIT_INTEGRATOR = 3


class InvalidInput(StabilityLabError):
    """A command-line value failed validation."""


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, TheoryInapplicable):
        return EXIT_INAPPLICABLE
    if isinstance(exc, (StepSizeUnderflow, QuadratureFailure)):
        return EXIT_INTEGRATOR
    return EXIT_INVALID


def _status(message: str, quiet: bool = False) -> None:
    if not quiet:
        print(message, file=sys.stderr)


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------

def _checked(result, label: str):
    ok, error, value = result
    if not ok:
        raise InvalidInput(f"{label}: {error}")
    return value


def _params(assignments: Optional[list[str]]) -> dict[str, complex]:
    validator = ParamValidator()
    params = {}
    for text in assignments or []:
        name, value = _checked(validator.validate_assignment(text), "--param")
        params[name] = value
    return params


def _problem_reference(text: Optional[str]):
    """Catalog id as-is, anything else as an inline JSON document or file."""
    if text is None or text in CATALOG:
        return text
    problem = _checked(ProblemValidator.validate_document(text), "--problem")
    return problem.to_json()


def _values(text: str) -> list[complex]:
    """Comma-separated values; each may be a complex literal like 0.5+1j."""
    values = []
    for item in (text or "").split(","):
        if item.strip():
            values.append(_checked(ParamValidator.validate_value(item), "--values"))
    return values


def _output(path: Optional[str]) -> Optional[Path]:
    return _checked(OutputPathValidator.validate_output_path(path), "--out")


def _overrides(args) -> dict:
    return {
        "problem": _problem_reference(getattr(args, "problem", None)),
        "params": _params(getattr(args, "param", None)) or None,
        "t_end": args.t_end,
        "grid": args.grid,
        "tol": args.tol,
        "delta": getattr(args, "delta", None),
        "Delta": getattr(args, "Delta", None),
        "band": getattr(args, "band", None),
        "t1_candidates": getattr(args, "t1_candidates", None),
        "t_osc": getattr(args, "t_osc", None),
        "oracle_t_end": getattr(args, "oracle_t_end", None),
        "method": args.method,
        "oracle": False if getattr(args, "no_oracle", False) else None,
        "out": args.out,
        "format": args.format,
    }


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_catalog(args) -> int:
    if args.import_path:
        doc = json.loads(Path(args.import_path).read_text())
        problems = import_catalog(doc)
    else:
        problems = catalog()
    out = _output(args.out)
    if args.format == "json":
        write_text(dumps(export_catalog(problems)), out, sys.stdout)
        return EXIT_OK
    lines = []
    for problem in problems:
        slots = ", ".join(f"{name}={complex(problem.params.get(name, 0)).real:g}"
                          for name in problem.param_slots) or "none"
        lines.append(f"{problem.id}")
        lines.append(f"    p = {problem.p}")
        lines.append(f"    q = {problem.q}")
        lines.append(f"    t0 = {problem.t0:g}, params: {slots}")
        if problem.claim is not None:
            lines.append(f"    verdict rule: {problem.claim.rule}")
    write_text("\n".join(lines) + "\n", out, sys.stdout)
    return EXIT_OK


def cmd_analyze(args) -> int:
    config = resolve_config(_overrides(args))
    out = _output(config.out)
    analyzer = StabilityAnalyzer(config, quiet=args.quiet, timing=not args.no_timing)
    report = analyzer.analyze()
    if config.format == "csv":
        # csv carries the differential root of D/4; empty when the theory is inapplicable
        buffer = StringIO()
        if report.root is not None:
            write_root_csv(report.root, buffer)
        write_text(buffer.getvalue(), out, sys.stdout)
    else:
        write_text(report.dumps(), out, sys.stdout)
    if out is not None:
        _status(f"[Done] Report written to: {out.resolve()}", args.quiet)
    return EXIT_INAPPLICABLE if report.inapplicable else EXIT_OK


def cmd_sweep(args) -> int:
    name = _checked(ParamValidator.validate_name(args.param_name), "--param-name")
    values = _values(args.values)
    config = resolve_config(_overrides(args))
    out = _output(config.out)
    analyzer = StabilityAnalyzer(config, quiet=args.quiet, timing=False)
    rows = analyzer.sweep(name, values, workers=args.workers)
    if config.format == "csv":
        buffer = StringIO()
        write_sweep_csv(rows, buffer)
        write_text(buffer.getvalue(), out, sys.stdout)
    else:
        problem_id = analyzer.problem().id
        write_text(dumps(sweep_document(problem_id, name, config, rows)), out, sys.stdout)
    return EXIT_OK


def cmd_root(args) -> int:
    if args.t_end <= args.t0:
        raise InvalidInput(f"--t-end {args.t_end:g} must exceed --t0 {args.t0:g}")
    out = _output(args.out)
    expr = parse(args.x, args.t0)
    grid = make_grid(args.t0, args.t_end, args.grid)
    trace = Evaluator(_params(args.param), tol=args.tol).trace(expr, grid, derivative=True)
    if not is_real_valued(trace):
        raise InvalidInput("--x must be real-valued on the grid")
    root = differential_root(trace.real(), tol=args.tol, method=args.method,
                             t1_candidates=args.t1_candidates)
    buffer = StringIO()
    write_root_csv(root, buffer)
    write_text(buffer.getvalue(), out, sys.stdout)
    _status(f"[Root] {grid.size} rows, max |y - sqrt x| = {np.max(np.abs(root.y - root.sqrt_x)):.3g}",
            args.quiet)
    return EXIT_OK


def cmd_oracle(args) -> int:
    config = resolve_config(_overrides(args))
    out = _output(config.out)
    problem = load_problem(config.problem, config.params)
    horizon = config.oracle_horizon_for(problem)
    ev = problem.evaluator(tol=config.tol, t_osc=config.t_osc)
    phi0 = _checked(ParamValidator.validate_value(args.phi0), "--phi0")
    dphi0 = _checked(ParamValidator.validate_value(args.dphi0), "--dphi0")
    trace = integrate_linear(problem, phi0, dphi0, horizon, tol=config.tol, grid_size=config.grid,
                             evaluator=ev, method=config.method, allow_escape=True)
    if config.format == "csv":
        buffer = StringIO()
        write_solution_csv(trace, buffer)
        write_text(buffer.getvalue(), out, sys.stdout)
        return EXIT_OK
    empirical = fundamental_growth(problem, horizon, tol=config.tol, grid_size=config.grid,
                                   vanish_factor=config.vanish_factor, plateau=config.plateau,
                                   evaluator=ev, method=config.method)
    doc = {
        "schema": 1,
        "problem": problem.to_json(),
        "config": config.to_json(),
        "oracle": empirical.to_json(),
        "solution": {
            "initial": [phi0, dphi0],
            "escaped_at": trace.escaped_at,
            "terminal": [trace.phi[-1], trace.dphi[-1]],
            "residual": None if trace.escaped_at is not None or trace.grid.size < 3
            else residual_check(problem, trace, evaluator=ev),
        },
    }
    write_text(dumps(doc), out, sys.stdout)
    _status(f"[Oracle] {empirical.boundedness}/{empirical.stability} on [{problem.t0:g}, {horizon:g}]",
            args.quiet)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--problem", default=None, help="Catalog id, inline JSON problem or JSON file")
    parser.add_argument("--param", action="append", default=None, metavar="NAME=RE[,IM]",
                        help="Bind a parameter (repeatable)")
    parser.add_argument("--t-end", type=float, default=None, help="Criteria horizon (default: problem's own)")
    parser.add_argument("--grid", type=int, default=None, help="Grid points (default: 4000)")
    parser.add_argument("--tol", type=float, default=None, help="Integrator/quadrature tolerance (default: 1e-10)")
    parser.add_argument("--t-osc", type=float, default=None, help="Cutoff for oscillatory integrals (default: 12)")
    parser.add_argument("--oracle-t-end", type=float, default=None, help="Oracle horizon")
    parser.add_argument("--method", choices=METHODS, default=None, help="ODE method (default: DOP853)")
    parser.add_argument("--out", default=None, help="Output file (default: stdout)")
    parser.add_argument("--format", choices=FORMATS, default=None, help="json or csv (default: json)")
    parser.add_argument("--quiet", action="store_true", help="Suppress status lines on stderr")


def _add_thresholds(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--delta", type=float, default=None, help="Trend slope threshold (default: 1e-3)")
    parser.add_argument("--Delta", type=float, default=None, help="Trend total-change threshold (default: 2)")
    parser.add_argument("--band", type=float, default=None, help="Bounded-above band (default: 10)")
    parser.add_argument("--t1-candidates", type=int, default=None, help="t1 candidates for rho (default: 32)")
    parser.add_argument("--no-oracle", action="store_true", help="Skip the direct-integration cross-check")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rsl",
        description="Boundedness and stability of phi'' + p phi' + q phi = 0 via Riccati criteria",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s catalog
  %(prog)s analyze --problem ex2.1 --param lambda=1
  %(prog)s analyze --problem '{"id": "mine", "p": "1", "q": "t"}' --out report.json
  %(prog)s sweep --problem ex2.2 --param-name lambda --values=-1,-0.5,0.5,1 --format csv
  %(prog)s root --x t --t0 1 --t-end 100
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_catalog = sub.add_parser("catalog", help="List the built-in problems")
    p_catalog.add_argument("--format", choices=("text", "json"), default="text")
    p_catalog.add_argument("--import", dest="import_path", default=None,
                           help="List a previously exported catalog JSON instead")
    p_catalog.add_argument("--out", default=None)
    p_catalog.set_defaults(handler=cmd_catalog)

    p_analyze = sub.add_parser("analyze", help="Analyze one problem")
    _add_common(p_analyze)
    _add_thresholds(p_analyze)
    p_analyze.add_argument("--no-timing", action="store_true", help="Omit wall time (byte-identical reports)")
    p_analyze.set_defaults(handler=cmd_analyze)

    p_sweep = sub.add_parser("sweep", help="Analyze once per parameter value")
    _add_common(p_sweep)
    _add_thresholds(p_sweep)
    p_sweep.add_argument("--param-name", required=True, help="Parameter to sweep")
    p_sweep.add_argument("--values", default="", help="Comma-separated values (complex literals allowed)")
    p_sweep.add_argument("--workers", type=int, default=1, help="Rows analysed in parallel (default: 1)")
    p_sweep.set_defaults(handler=cmd_sweep)

    p_root = sub.add_parser("root", help="Differential root of x as CSV")
    p_root.add_argument("--x", required=True, help="Expression for x(t), positive on the range")
    p_root.add_argument("--t0", type=float, default=0.0)
    p_root.add_argument("--t-end", type=float, required=True)
    p_root.add_argument("--tol", type=float, default=1e-10)
    p_root.add_argument("--grid", type=int, default=4000)
    p_root.add_argument("--method", choices=METHODS, default="DOP853")
    p_root.add_argument("--t1-candidates", type=int, default=32)
    p_root.add_argument("--param", action="append", default=None, metavar="NAME=RE[,IM]")
    p_root.add_argument("--out", default=None)
    p_root.add_argument("--quiet", action="store_true")
    p_root.set_defaults(handler=cmd_root)

    p_oracle = sub.add_parser("oracle", help="Direct integration only")
    _add_common(p_oracle)
    p_oracle.add_argument("--phi0", default="1", help="phi(t0) (default: 1)")
    p_oracle.add_argument("--dphi0", default="0", help="phi'(t0) (default: 0)")
    p_oracle.set_defaults(handler=cmd_oracle)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (StabilityLabError, KeyError, OSError, json.JSONDecodeError) as exc:
        code = exit_code_for(exc)
        tag = {EXIT_INTEGRATOR: "Integrator", EXIT_INAPPLICABLE: "Theory"}.get(code, "Error")
        print(f"[{tag}] {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
