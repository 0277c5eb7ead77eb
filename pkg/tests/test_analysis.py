"""Tests for the analysis orchestrator and parameter sweeps."""

import io

import numpy as np
import pytest

from stability_lab.analysis import StabilityAnalyzer, analyze, load_problem, run_sweep
from stability_lab.coeffexpr import get_problem
from stability_lab.config import resolve_config
from stability_lab.errors import ConfigError
from stability_lab.outcomes import ALL_BOUNDED, ALL_VANISH, ASYMPTOTIC, LIAPUNOV, UNBOUNDED, UNKNOWN, UNSTABLE
from stability_lab.report import MATCH, MISMATCH, NOT_APPLICABLE
from tests.fixtures import CATALOG_IDS, SAMPLE_CONTROL, SAMPLE_NEGATIVE_D


def _config(**overrides):
    base = {"problem": "const-coeff", "grid": 1000, "t_end": 20.0}
    base.update(overrides)
    return resolve_config(base)


class TestLoadProblem:

    def test_catalog_id(self):
        assert load_problem("ex2.1").id == "ex2.1"

    def test_document(self):
        assert load_problem(dict(SAMPLE_CONTROL)).p == "2"

    def test_params_bound_on_top(self):
        problem = load_problem("ex2.1", {"lambda": -1})
        assert problem.params["lambda"] == -1

    def test_unknown_id(self):
        with pytest.raises(ConfigError, match="unknown problem"):
            load_problem("ex9.9")

    def test_unknown_parameter(self):
        with pytest.raises(ConfigError, match="zeta"):
            load_problem("ex2.1", {"zeta": 1})


# ---------------------------------------------------------------------------
# Single analyses
# ---------------------------------------------------------------------------

class TestAnalyze:

    @pytest.fixture(scope="class")
    def report(self):
        return StabilityAnalyzer(_config(), quiet=True).analyze()

    def test_verdict(self, report):
        assert report.verdict["boundedness"] == ALL_VANISH
        assert report.verdict["stability"] == ASYMPTOTIC
        assert report.horizon == 20.0

    def test_root_checks(self, report):
        checks = report.root_checks
        assert checks["initial_exact"]
        assert checks["nonnegative"]
        assert checks["lower_envelope_holds"]
        assert checks["rho_bound_holds"]
        assert set(checks["q_bounds"]) == {"nondecreasing", "floor_integral"}

    def test_rho_decay_reported_with_decay_fit(self):
        """D = t: |D'|/D = 1/t fits the decay form with alpha = 1."""
        problem = {"id": "linear-d", "p": "0", "q": "-t/4", "t0": 1.0}
        config = resolve_config({"problem": problem, "oracle": False, "grid": 1000, "t_end": 40.0})
        checks = StabilityAnalyzer(config, quiet=True, timing=False).analyze().root_checks
        assert checks["decay"]["holds"]
        assert checks["rho_decay"]["holds"]
        assert checks["rho_decay"]["worst_ratio"] <= 2.0
        assert set(checks["rho_decay"]) == {"holds", "threshold", "worst_ratio", "factor"}

    @pytest.mark.parametrize("method", ["RK45", "LSODA"])
    def test_integrator_does_not_change_verdict(self, report, method):
        other = StabilityAnalyzer(_config(method=method), quiet=True, timing=False).analyze()
        assert other.verdict["boundedness"] == report.verdict["boundedness"]
        assert other.verdict["stability"] == report.verdict["stability"]
        assert other.oracle["boundedness"] == report.oracle["boundedness"]
        assert other.oracle_agreement["status"] == MATCH

    @pytest.mark.parametrize("problem_id", CATALOG_IDS)
    def test_catalog_agrees_with_oracle_and_record(self, problem_id):
        report = StabilityAnalyzer(resolve_config({"problem": problem_id}), quiet=True, timing=False).analyze()
        assert report.oracle_agreement["status"] != MISMATCH
        assert report.recorded_comparison["status"] != MISMATCH

    def test_oracle_agrees(self, report):
        assert report.oracle["boundedness"] == ALL_VANISH
        assert report.oracle["horizon"] == 20.0
        assert report.oracle_agreement["status"] == MATCH

    def test_identities(self, report):
        assert report.identities["ratio_constant"] == pytest.approx(np.sqrt(2.0), rel=1e-6)
        assert report.identities["substitution_escape"] is None
        assert report.identities["substitution_error"] < 1e-5

    def test_recorded_verdict_matches(self, report):
        assert report.recorded_comparison["status"] == MATCH

    def test_timing_recorded(self, report):
        assert report.wall_time is not None
        assert "wall_time" in report.to_json()

    def test_root_kept_out_of_document(self, report):
        assert report.root is not None
        assert "root" not in report.to_json()

    def test_control(self):
        report = StabilityAnalyzer(_config(problem=dict(SAMPLE_CONTROL)), quiet=True, timing=False).analyze()
        assert (report.verdict["boundedness"], report.verdict["stability"]) == (ALL_BOUNDED, LIAPUNOV)
        assert report.oracle_agreement["status"] == MATCH
        assert report.recorded_comparison["status"] == NOT_APPLICABLE
        assert report.wall_time is None

    def test_inapplicable(self):
        report = analyze(_config(problem=dict(SAMPLE_NEGATIVE_D), oracle=False), quiet=True)
        assert report.inapplicable
        assert report.root is None
        assert report.root_checks is None
        assert report.verdict["location"] == 1.0

    def test_status_lines(self):
        log = io.StringIO()
        StabilityAnalyzer(_config(oracle=False), log=log).analyze()
        text = log.getvalue()
        assert "[Analyze] const-coeff" in text
        assert "[Criteria] conditions:" in text
        assert "[Compare] recorded verdict: match" in text

    def test_quiet(self):
        log = io.StringIO()
        StabilityAnalyzer(_config(oracle=False), quiet=True, log=log).analyze()
        assert log.getvalue() == ""

    def test_explicit_problem(self):
        problem = get_problem("const-coeff").with_params(a=-3)
        report = StabilityAnalyzer(_config(oracle=False), quiet=True).analyze(problem)
        assert report.verdict["boundedness"] == UNBOUNDED


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

class TestSweep:

    def test_rows_in_input_order(self):
        rows = run_sweep(_config(oracle=False), "a", [3, -3], quiet=True)
        assert [(r.boundedness, r.stability) for r in rows] == [
            (ALL_VANISH, ASYMPTOTIC),
            (UNBOUNDED, UNSTABLE),
        ]
        assert [r.value for r in rows] == [3, -3]

    def test_second_example_over_lambda(self):
        config = resolve_config({"problem": "ex2.2", "oracle": False})
        rows = run_sweep(config, "lambda", [1, -0.5], quiet=True)
        assert [(r.boundedness, r.stability) for r in rows] == [
            (ALL_VANISH, ASYMPTOTIC),
            (UNBOUNDED, UNSTABLE),
        ]

    def test_parallel_matches_serial(self):
        values = [3, -3, 4]
        serial = run_sweep(_config(oracle=False), "a", values, quiet=True)
        parallel = run_sweep(_config(oracle=False), "a", values, quiet=True, workers=3)
        assert [r.to_json() for r in parallel] == [r.to_json() for r in serial]

    def test_inapplicable_value_becomes_error_row(self):
        """a = 1, b = 2 gives D = -7."""
        rows = run_sweep(_config(oracle=False), "a", [1], quiet=True)
        assert rows[0].error == "NonPositiveDiscriminant"
        assert rows[0].boundedness == UNKNOWN

    def test_oracle_columns(self):
        rows = run_sweep(_config(), "a", [3], quiet=True)
        assert rows[0].oracle_boundedness == ALL_VANISH
        assert rows[0].oracle_stability == ASYMPTOTIC

    def test_empty(self):
        assert run_sweep(_config(oracle=False), "a", [], quiet=True) == []

    def test_unknown_parameter(self):
        with pytest.raises(ConfigError, match="zeta"):
            run_sweep(_config(oracle=False), "zeta", [1], quiet=True)
