"""Tests for the discriminant, the condition groups, trend classification
and the verdict dispatch.
"""

import numpy as np
import pytest

from stability_lab.coeffexpr import Problem, get_problem, make_grid
from stability_lab.config import resolve_config
from stability_lab.criteria import (
    R1_RULE,
    check_conditions,
    check_wkb,
    classify_trend,
    discriminant,
    r_functions,
    verdict,
)
from stability_lab.errors import ComplexDiscriminant
from stability_lab.outcomes import (
    ALL_BOUNDED,
    ALL_VANISH,
    ASYMPTOTIC,
    BOUNDED_ABOVE,
    INCONCLUSIVE,
    LIAPUNOV,
    TO_MINUS_INF,
    TO_PLUS_INF,
    UNBOUNDED,
    UNKNOWN,
    UNSTABLE,
)
from tests.fixtures import CATALOG_IDS, SAMPLE_COMPLEX_D, SAMPLE_NEGATIVE_D, make_x, trace_of


# ---------------------------------------------------------------------------
# Discriminant
# ---------------------------------------------------------------------------

class TestDiscriminant:

    def test_constant_coefficients(self):
        problem = get_problem("const-coeff")
        D = discriminant(problem, make_grid(0.0, 10.0, 100))
        np.testing.assert_allclose(D.values, 1.0)
        np.testing.assert_allclose(D.derivative, 0.0)

    def test_complex_values_rejected(self):
        problem = Problem.from_json(SAMPLE_COMPLEX_D)
        with pytest.raises(ComplexDiscriminant) as exc:
            discriminant(problem, make_grid(0.0, 10.0, 100))
        assert exc.value.location == 0.0

    def test_r_functions_for_constant_coefficients(self):
        """D = 1, p = 3: r1 = -2 (t - t0), r2 = r1 + 2 ln 3."""
        problem = get_problem("const-coeff")
        grid = make_grid(0.0, 10.0, 200)
        r1, r2 = r_functions(problem, discriminant(problem, grid))
        np.testing.assert_allclose(r1.values, -2.0 * grid, atol=1e-9)
        np.testing.assert_allclose(r2.values - r1.values, 2.0 * np.log(3.0), atol=1e-12)


# ---------------------------------------------------------------------------
# Conditions
# ---------------------------------------------------------------------------

class TestConditions:

    def test_increasing_discriminant(self, linear_x):
        report = check_conditions(linear_x, np.zeros_like(linear_x.values))
        assert report.A.holds
        assert report.B.holds
        assert report.B.evidence["eps"] == 0.5
        assert report.D_cond.holds
        assert report.C.holds

    def test_oscillating_discriminant_is_not_monotone(self):
        D = make_x("4 + sin(t)", 0.0, 40.0, 2000)
        report = check_conditions(D, np.zeros_like(D.values))
        assert report.A.holds
        assert not report.B.holds
        assert not report.D_cond.holds
        assert report.B.evidence["nondecreasing_violation"] > 0

    def test_nonpositive_fails_every_group(self):
        D = make_x("t - 2", 1.0, 3.0, 200)
        report = check_conditions(D, np.zeros_like(D.values))
        assert not report.A.holds
        assert report.A.evidence["min_D"] == pytest.approx(-1.0)
        for cond in (report.B, report.C, report.D_cond, report.decay):
            assert not cond.holds

    def test_summary_line(self, linear_x):
        summary = check_conditions(linear_x, np.zeros_like(linear_x.values)).summary()
        assert summary.startswith("A=yes B=yes")

    def test_json_names_every_group(self, linear_x):
        doc = check_conditions(linear_x, np.zeros_like(linear_x.values)).to_json()
        assert set(doc) == {"A", "B", "C", "D_cond", "cor21", "wkb14"}


class TestWkb:

    def test_quartic_discriminant_converges(self):
        """D = t^4: the integrand is 352 / t^4."""
        report = check_wkb(get_problem("wkb-ok"), make_grid(1.0, 1000.0, 4000))
        assert report.convergent
        assert report.partial_sums == sorted(report.partial_sums)
        assert report.horizons[-1] == 1000.0

    def test_oscillatory_discriminant_diverges(self):
        report = check_wkb(get_problem("ex2.1"), make_grid(1.0, 40.0, 4000))
        assert not report.convergent
        assert report.horizons[-1] == 12.0


# ---------------------------------------------------------------------------
# Trend classification
# ---------------------------------------------------------------------------

class TestClassifyTrend:

    @pytest.fixture
    def grid(self):
        return np.linspace(0.0, 40.0, 4001)

    def test_falling_line(self, grid):
        assert classify_trend(trace_of(grid, -grid)).verdict == TO_MINUS_INF

    def test_rising_line(self, grid):
        assert classify_trend(trace_of(grid, grid)).verdict == TO_PLUS_INF

    def test_sine_is_bounded_above(self, grid):
        assert classify_trend(trace_of(grid, np.sin(grid))).verdict == BOUNDED_ABOVE

    def test_constant_is_bounded_above(self, grid):
        assert classify_trend(trace_of(grid, np.full_like(grid, 3.0))).verdict == BOUNDED_ABOVE

    def test_slow_decline_is_bounded_above(self):
        """-ln t falls too little over the tail to count as divergence."""
        grid = np.linspace(1.0, 100.0, 4000)
        assert classify_trend(trace_of(grid, -np.log(grid))).verdict == BOUNDED_ABOVE

    def test_short_horizon_inconclusive(self):
        grid = np.linspace(0.0, 3.0, 100)
        estimate = classify_trend(trace_of(grid, -grid))
        assert estimate.verdict == INCONCLUSIVE
        assert estimate.windows == []

    def test_windows_cover_the_tail(self, grid):
        estimate = classify_trend(trace_of(grid, -grid))
        assert estimate.windows[0][0] == 20.0
        assert estimate.windows[-1][1] == 40.0
        assert estimate.total_change == pytest.approx(-20.0)


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------

class TestVerdict:

    def test_control_is_bounded_and_stable(self, control_problem, fast_config):
        report = verdict(control_problem, fast_config)
        assert report.verdict.boundedness == ALL_BOUNDED
        assert report.verdict.stability == LIAPUNOV
        assert R1_RULE in report.verdict.applied

    def test_constant_coefficients_vanish(self, fast_config):
        report = verdict(get_problem("const-coeff"), fast_config)
        assert report.verdict.boundedness == ALL_VANISH
        assert report.verdict.stability == ASYMPTOTIC
        assert report.horizon == 20.0

    def test_negative_discriminant_is_inapplicable(self, fast_config):
        report = verdict(Problem.from_json(SAMPLE_NEGATIVE_D), fast_config)
        assert report.verdict.inapplicable == "NonPositiveDiscriminant"
        assert report.verdict.location == 1.0
        assert report.verdict.boundedness == UNKNOWN
        assert not report.conditions.A.holds
        assert report.root is None

    def test_complex_discriminant_is_inapplicable(self, fast_config):
        report = verdict(Problem.from_json(SAMPLE_COMPLEX_D), fast_config)
        assert report.verdict.inapplicable == "ComplexDiscriminant"

    def test_first_example_vanishes_for_positive_lambda(self):
        report = verdict(get_problem("ex2.1").with_params(**{"lambda": 1.0}), resolve_config())
        assert report.verdict.boundedness == ALL_VANISH
        assert report.horizon == 40.0
        assert any("linear trend" in c for c in report.verdict.caveats)

    def test_first_example_unbounded_for_zero_lambda(self):
        report = verdict(get_problem("ex2.1").with_params(**{"lambda": 0.0}), resolve_config())
        assert report.verdict.boundedness == UNBOUNDED
        assert report.verdict.stability == UNSTABLE

    def test_periodic_example_flags_crossover(self):
        report = verdict(get_problem("ex2.3"), resolve_config())
        assert report.verdict.r1_trend.verdict == TO_MINUS_INF
        assert any("horizon below potential crossover" in c for c in report.verdict.caveats)

    def test_every_verdict_names_its_horizon(self, control_problem, fast_config):
        report = verdict(control_problem, fast_config)
        assert any("finite horizon [0, 20]" in c for c in report.verdict.caveats)


# ---------------------------------------------------------------------------
# Catalog examples
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def second_example_reports():
    config = resolve_config()
    return {
        lam: verdict(get_problem("ex2.2").with_params(**{"lambda": lam}), config)
        for lam in (1.0, -0.5)
    }


class TestCatalogExamples:

    @pytest.mark.parametrize("lam", [-0.5, 0.5, 2.0])
    def test_first_example_follows_sign_of_lambda(self, lam):
        report = verdict(get_problem("ex2.1").with_params(**{"lambda": lam}), resolve_config())
        if lam > 0:
            assert report.verdict.boundedness == ALL_VANISH
        else:
            assert report.verdict.boundedness == UNBOUNDED
            assert report.verdict.stability == UNSTABLE

    def test_second_example_asymptotically_stable(self, second_example_reports):
        report = second_example_reports[1.0]
        assert (report.verdict.boundedness, report.verdict.stability) == (ALL_VANISH, ASYMPTOTIC)

    def test_second_example_unstable_for_negative_lambda(self, second_example_reports):
        report = second_example_reports[-0.5]
        assert (report.verdict.boundedness, report.verdict.stability) == (UNBOUNDED, UNSTABLE)

    def test_second_example_wkb_integral_diverges(self, second_example_reports):
        wkb = second_example_reports[1.0].conditions.wkb
        assert not wkb.convergent
        assert wkb.increase > 1.0

    def test_periodic_example_wkb_integral_diverges(self):
        wkb = verdict(get_problem("ex2.3"), resolve_config()).conditions.wkb
        assert not wkb.convergent
        assert wkb.increase > 0.01

    def test_complex_lambda_keeps_discriminant_real(self):
        problem = get_problem("ex2.1").with_params(**{"lambda": 1 + 2j})
        D = discriminant(problem, make_grid(1.0, 40.0, 2000))
        assert D.cache["max_imag"] < 1e-8
        report = verdict(problem, resolve_config())
        assert report.verdict.inapplicable is None
        assert report.verdict.boundedness == ALL_VANISH

    @pytest.mark.parametrize("problem_id", CATALOG_IDS)
    def test_catalog_discriminant_is_positive(self, problem_id):
        problem = get_problem(problem_id)
        D = discriminant(problem, make_grid(problem.t0, 20.0, 1000))
        assert D.values.min() > 0
