"""
Analysis orchestrator.

StabilityAnalyzer runs one configured problem through the criteria
pipeline, cross-checks it with the direct-integration oracle and builds
the report. Sweeps rerun the same pipeline once per parameter value.

Status lines go to stderr with a bracketed tag; stdout is left for the
report itself.
"""

import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import IO, Iterable, Optional

import numpy as np

from stability_lab.coeffexpr.catalog import get_problem
from stability_lab.coeffexpr.problem import Problem
from stability_lab.config import AnalysisConfig, with_params
from stability_lab.criteria import CriteriaReport, verdict
from stability_lab.errors import ConfigError, StabilityLabError, StepSizeUnderflow
from stability_lab.oracle import (
    EmpiricalVerdict,
    fundamental_growth,
    identity_checks,
    phi0_via_root,
    substitution_check,
)
from stability_lab.report import AnalysisReport, SweepRow, compare_verdicts, format_value
from stability_lab.riccati import (
    decay_constant,
    decay_hypothesis,
    q_bound_hypotheses,
    q_sandwich,
    rho_decay_check,
)

ENVELOPE_SLACK = 1e-8


def load_problem(reference, params=None) -> Problem:
    """Catalog id, Problem or problem document, with ``params`` bound on top."""
    if isinstance(reference, Problem):
        problem = reference
    elif isinstance(reference, dict):
        problem = Problem.from_json(reference)
    else:
        try:
            problem = get_problem(str(reference))
        except KeyError as e:
            raise ConfigError(str(e.args[0])) from None
    unknown = sorted(set(params or {}) - set(problem.param_slots))
    if unknown:
        raise ConfigError(f"problem {problem.id!r} has no parameter {', '.join(unknown)}; "
                          f"slots: {', '.join(problem.param_slots) or 'none'}")
    return problem.with_params(params or {})


class StabilityAnalyzer:
    """Runs analyses and sweeps for one resolved configuration."""

    def __init__(self, config: AnalysisConfig, quiet: bool = False, timing: bool = True,
                 log: Optional[IO[str]] = None):
        self.config = config
        self.quiet = quiet
        self.timing = timing
        self.log_stream = log

    def _log(self, tag: str, message: str) -> None:
        if not self.quiet:
            print(f"[{tag}] {message}", file=self.log_stream or sys.stderr)

    # -- single analysis ---------------------------------------------------

    def problem(self) -> Problem:
        return load_problem(self.config.problem, self.config.params)

    def analyze(self, problem: Optional[Problem] = None) -> AnalysisReport:
        """Criteria verdict, oracle verdict and their comparisons for one problem."""
        config = self.config
        problem = problem or self.problem()
        problem.check_bound()
        started = time.perf_counter()
        self._log("Analyze", f"{problem.id}: {config}")

        criteria = verdict(problem, config)
        result = criteria.verdict
        if criteria.conditions is not None:
            self._log("Criteria", f"conditions: {criteria.conditions.summary()}")
        if result.inapplicable:
            self._log("Criteria", f"theory inapplicable: {result.inapplicable} at t={result.location:g}")
        else:
            self._log("Criteria", f"r1 {result.r1_trend.verdict}, r2 {result.r2_trend.verdict} "
                                  f"-> {result.boundedness}/{result.stability}")

        report = AnalysisReport(
            problem=problem.to_json(),
            config=config,
            horizon=criteria.horizon,
            verdict=result.to_json(),
            conditions=None if criteria.conditions is None else criteria.conditions.to_json(),
            r1_trend=None if result.r1_trend is None else result.r1_trend.to_json(),
            r2_trend=None if result.r2_trend is None else result.r2_trend.to_json(),
            root=criteria.root,
        )
        if criteria.root is not None:
            report.root_checks = self._root_checks(criteria)

        if config.oracle:
            empirical = self._oracle(problem)
            report.oracle = empirical.to_json()
            report.oracle_agreement = compare_verdicts(
                {"boundedness": empirical.boundedness, "stability": empirical.stability},
                {"boundedness": result.boundedness, "stability": result.stability},
            )
            if criteria.root is not None:
                report.identities = self._identities(problem, criteria, empirical.horizon)

        computed = {"boundedness": result.boundedness, "stability": result.stability}
        wkb = None if criteria.conditions is None else criteria.conditions.wkb
        if wkb is not None:
            computed["wkb"] = "convergent" if wkb.convergent else "divergent"
        report.recorded_comparison = compare_verdicts(problem.expected_verdict(), computed)
        self._log("Compare", f"recorded verdict: {report.recorded_comparison['status']}")

        if self.timing:
            report.wall_time = time.perf_counter() - started
        return report

    def _oracle(self, problem: Problem) -> EmpiricalVerdict:
        config = self.config
        horizon = config.oracle_horizon_for(problem)
        empirical = fundamental_growth(
            problem, horizon, tol=config.tol, grid_size=config.grid,
            vanish_factor=config.vanish_factor, plateau=config.plateau,
            evaluator=problem.evaluator(tol=config.tol, t_osc=config.t_osc), method=config.method,
        )
        where = "" if empirical.escape is None else f", escaped at t={empirical.escape:g}"
        self._log("Oracle", f"[{problem.t0:g}, {horizon:g}] {empirical.boundedness}/{empirical.stability} "
                            f"growth={empirical.growth_exponent:.3g}{where}")
        return empirical

    def _root_checks(self, criteria: CriteriaReport) -> dict:
        D = criteria.D
        root = criteria.root
        x = D.scaled(0.25)
        envelope_gap = float(np.min(root.y - root.lower_envelope()))
        checks = {
            "initial_exact": bool(root.y[0] == root.sqrt_x[0]),
            "nonnegative": bool(np.all(root.y >= 0)),
            "lower_envelope_holds": envelope_gap >= -ENVELOPE_SLACK,
            "min_lower_envelope_gap": envelope_gap,
            "max_deviation": float(np.max(np.abs(root.y - root.sqrt_x))),
            "rho_bound_holds": bool(np.all(np.abs(root.y - root.sqrt_x)
                                           <= root.rho_upper * (1 + 1e-6) + ENVELOPE_SLACK)),
            "max_abs_Q": float(np.max(np.abs(root.Q))),
            "q_sandwich": q_sandwich(x, root).to_json(),
            "q_bounds": {name: r.to_json() for name, r in
                         q_bound_hypotheses(x, root.rho_upper, self.config.plateau,
                                            self.config.eps_menu).items()},
        }
        fit = criteria.conditions.decay.evidence
        if fit.get("c") and fit.get("alpha", 0) > 0:
            c = decay_constant(x, fit["c"], fit["alpha"])
            checks["decay"] = decay_hypothesis(x, c, fit["alpha"]).to_json()
            checks["rho_decay"] = rho_decay_check(x, root.rho_upper, c, fit["alpha"]).to_json()
        return checks

    def _identities(self, problem: Problem, criteria: CriteriaReport, horizon: float) -> dict:
        config = self.config
        ev = problem.evaluator(tol=config.tol, t_osc=config.t_osc)
        root = criteria.root.restrict(horizon)
        phi0 = phi0_via_root(problem, root, ev, tol=config.tol, method=config.method)
        found = identity_checks(problem, root, phi0, criteria.r1.restrict(horizon),
                                criteria.r2.restrict(horizon), ev)
        doc = found.to_json()
        doc["phi0_max_rel_deviation"] = phi0.max_rel_deviation
        try:
            doc["substitution_error"] = substitution_check(problem, horizon, tol=config.tol,
                                                           evaluator=ev, method=config.method)
            doc["substitution_escape"] = None
        except StepSizeUnderflow as exc:
            doc["substitution_error"] = None
            doc["substitution_escape"] = exc.location
        self._log("Identities", f"ratio constant {found.ratio_constant:.6g} (cv {found.ratio_cv:.2g}), "
                                f"stated product bound {'holds' if found.stated_product_bound_holds else 'fails'}")
        return doc

    # -- sweeps ------------------------------------------------------------

    def _sweep_row(self, problem: Problem, parameter: str, value: complex) -> SweepRow:
        row = SweepRow(value)
        try:
            analyzer = StabilityAnalyzer(with_params(self.config, **{parameter: value}),
                                         quiet=True, timing=False)
            report = analyzer.analyze(problem.with_params({parameter: value}))
        except StabilityLabError as exc:
            row.error = f"{type(exc).__name__}: {exc}"
            return row
        row.boundedness = report.verdict["boundedness"]
        row.stability = report.verdict["stability"]
        if report.verdict.get("inapplicable"):
            row.error = report.verdict["inapplicable"]
        if report.oracle is not None:
            row.oracle_boundedness = report.oracle["boundedness"]
            row.oracle_stability = report.oracle["stability"]
        return row

    def sweep(self, parameter: str, values: Iterable[complex], workers: int = 1) -> list[SweepRow]:
        """One analysis per value; rows come back in input order."""
        values = [complex(v) for v in values]
        problem = self.problem()
        if parameter not in problem.param_slots:
            raise ConfigError(f"problem {problem.id!r} has no parameter {parameter!r}; "
                              f"slots: {', '.join(problem.param_slots) or 'none'}")
        total = len(values)
        if workers > 1 and total > 1:
            with ThreadPoolExecutor(max_workers=workers) as executor:
                rows = list(executor.map(lambda v: self._sweep_row(problem, parameter, v), values))
        else:
            rows = [self._sweep_row(problem, parameter, v) for v in values]
        for idx, row in enumerate(rows, 1):
            outcome = row.error or f"{row.boundedness}/{row.stability}"
            self._log(f"Sweep {idx}/{total}", f"{parameter}={format_value(row.value)} {outcome}")
        return rows


def analyze(config: AnalysisConfig, **options) -> AnalysisReport:
    return StabilityAnalyzer(config, **options).analyze()


def run_sweep(config: AnalysisConfig, parameter: str, values: Iterable[complex], **options) -> list[SweepRow]:
    workers = options.pop("workers", 1)
    return StabilityAnalyzer(config, **options).sweep(parameter, values, workers=workers)
