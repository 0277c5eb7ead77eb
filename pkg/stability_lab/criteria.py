"""
Riccati criteria for boundedness and stability.

Pipeline for one problem on a finite horizon [t0, T]:

    D = 2p' + p^2 - 4q  ->  differential root of D/4  ->  rho, Q
      -> conditions A/B/C/D, decay-rate hypotheses, WKB integral
      -> r1, r2  ->  tail trends  ->  verdict

"Bounded" and "convergent" are judged with the plateau rule: the running
sup (or partial sum) grows by less than ``plateau`` over the last horizon
doubling. Every verdict carries the horizon it was decided on.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from stability_lab.coeffexpr.evaluator import Evaluator
from stability_lab.coeffexpr.nodes import differentiate
from stability_lab.coeffexpr.problem import Problem
from stability_lab.coeffexpr.trace import FuncTrace, cumulative_integral, doubling_increase, make_grid, plateaus
from stability_lab.config import AnalysisConfig
from stability_lab.errors import ComplexDiscriminant, DomainError, NonPositiveDiscriminant, TheoryInapplicable
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
from stability_lab.riccati import RootTrace, differential_root

IMAG_TOL = 1e-9
TREND_WINDOWS = 8
WINDOW_POINTS = 32
WKB_LEVELS = 6

R1_RULE = "r1-boundedness"
R2_RULE = "r2-stability"
DECAY_RULE = "decay-rate"

BOUNDEDNESS_BY_TREND = {BOUNDED_ABOVE: ALL_BOUNDED, TO_MINUS_INF: ALL_VANISH, TO_PLUS_INF: UNBOUNDED}
STABILITY_BY_TREND = {BOUNDED_ABOVE: LIAPUNOV, TO_MINUS_INF: ASYMPTOTIC, TO_PLUS_INF: UNSTABLE}


# ---------------------------------------------------------------------------
# Report types
# ---------------------------------------------------------------------------

@dataclass
class Condition:
    holds: bool
    evidence: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"holds": self.holds, **self.evidence}


@dataclass
class WkbReport:
    horizons: list[float]
    partial_sums: list[float]
    convergent: bool
    increase: float

    def to_json(self) -> dict:
        return {
            "horizons": self.horizons,
            "partial_sums": self.partial_sums,
            "convergent": self.convergent,
            "last_doubling_increase": self.increase,
        }


@dataclass
class ConditionReport:
    A: Condition
    B: Condition
    C: Condition
    D_cond: Condition
    decay: Condition
    wkb: Optional[WkbReport] = None

    def to_json(self) -> dict:
        return {
            "A": self.A.to_json(),
            "B": self.B.to_json(),
            "C": self.C.to_json(),
            "D_cond": self.D_cond.to_json(),
            "cor21": self.decay.to_json(),
            "wkb14": None if self.wkb is None else self.wkb.to_json(),
        }

    def summary(self) -> str:
        flag = lambda c: "yes" if c.holds else "no"
        return (f"A={flag(self.A)} B={flag(self.B)} C={flag(self.C)} "
                f"D={flag(self.D_cond)} decay={flag(self.decay)}")


@dataclass
class TrendEstimate:
    verdict: str
    windows: list[tuple[float, float, float]] = field(default_factory=list)
    total_change: float = 0.0
    horizon: float = 0.0

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "windows": [{"start": a, "end": b, "slope": s} for a, b, s in self.windows],
            "total_change": self.total_change,
            "horizon": self.horizon,
        }


@dataclass
class Verdict:
    boundedness: str = UNKNOWN
    stability: str = UNKNOWN
    applied: list[str] = field(default_factory=list)
    r1_trend: Optional[TrendEstimate] = None
    r2_trend: Optional[TrendEstimate] = None
    caveats: list[str] = field(default_factory=list)
    inapplicable: Optional[str] = None
    location: Optional[float] = None

    def to_json(self) -> dict:
        return {
            "boundedness": self.boundedness,
            "stability": self.stability,
            "applied": list(self.applied),
            "caveats": list(self.caveats),
            "inapplicable": self.inapplicable,
            "location": self.location,
        }


@dataclass(eq=False)
class CriteriaReport:
    verdict: Verdict
    horizon: float
    conditions: Optional[ConditionReport] = None
    grid: Optional[np.ndarray] = None
    D: Optional[FuncTrace] = None
    root: Optional[RootTrace] = None
    r1: Optional[FuncTrace] = None
    r2: Optional[FuncTrace] = None


# ---------------------------------------------------------------------------
# Discriminant and conditions
# ---------------------------------------------------------------------------

def discriminant(problem: Problem, grid, evaluator: Optional[Evaluator] = None) -> FuncTrace:
    """Real D = 2p' + p^2 - 4q on the grid, carrying D' as its derivative."""
    ev = evaluator or problem.evaluator()
    expr = problem.discriminant_expr
    trace = ev.trace(expr, grid, derivative=True)
    values = trace.values
    residue = np.abs(np.imag(values))
    bad = residue > IMAG_TOL * (1.0 + np.abs(np.real(values)))
    if np.any(bad):
        first = int(np.flatnonzero(bad)[0])
        raise ComplexDiscriminant(trace.grid[first], complex(values[first]))
    real = FuncTrace(trace.grid, np.real(values).copy(), np.real(trace.derivative).copy())
    real.cache["max_imag"] = float(residue.max())
    return real


def _require_positive(D: FuncTrace) -> None:
    bad = ~(D.values > 0)
    if np.any(bad):
        first = int(np.flatnonzero(bad)[0])
        raise NonPositiveDiscriminant(D.grid[first], complex(D.values[first]))


def _running_sup_plateau(grid, values, plateau):
    running = np.maximum.accumulate(values)
    return plateaus(grid, running, plateau), float(running[-1]), doubling_increase(grid, running)


def _decay_fit(D: FuncTrace) -> tuple[float, float]:
    """Fit |D'|/D <= c/(1 + t - t0)^alpha; returns (c, alpha)."""
    grid = D.grid
    ratio = np.abs(D.derivative) / D.values
    shifted = 1.0 + grid - grid[0]
    if np.all(ratio <= 1e-15):
        return 0.0, 1.0
    envelope = np.maximum.accumulate(ratio[::-1])[::-1]
    tail = grid >= grid[0] + 0.5 * (grid[-1] - grid[0])
    keep = tail & (envelope > 0)
    if keep.sum() < 2:
        return float("inf"), 0.0
    slope, _ = np.polyfit(np.log(shifted[keep]), np.log(envelope[keep]), 1)
    alpha = float(-slope)
    if alpha <= 0:
        return float("inf"), alpha
    c = float(np.max(ratio * shifted ** alpha))
    return c, alpha


def check_conditions(D: FuncTrace, rho, wkb: Optional[WkbReport] = None, plateau: float = 0.01,
                     eps_menu: tuple[float, ...] = (0.5, 0.25, 0.1, 0.05)) -> ConditionReport:
    """Fill every condition with the numbers that decided it.

    ``rho`` is the rho upper bound of the differential root of D/4, as an
    array on D's grid or a FuncTrace.
    """
    grid = D.grid
    values = np.asarray(D.values, dtype=float)
    slope = np.asarray(D.derivative, dtype=float)
    min_d = float(values.min())
    A = Condition(min_d > 0, {"min_D": min_d, "max_imag_D": D.cache.get("max_imag", 0.0)})
    if not A.holds:
        failed = {"reason": "condition A fails"}
        return ConditionReport(A, Condition(False, failed), Condition(False, failed),
                               Condition(False, failed), Condition(False, failed), wkb)

    rho = np.asarray(rho.values if isinstance(rho, FuncTrace) else rho, dtype=float)
    drop = float(max(0.0, -np.min(np.diff(values))))
    nondecreasing = drop <= 1e-9 * (1.0 + float(np.max(np.abs(values))))

    best_eps, sup_b = None, None
    for eps in eps_menu:
        ok, sup, _ = _running_sup_plateau(grid, np.abs(slope) / values ** (1.5 - eps), plateau)
        if ok:
            best_eps, sup_b = eps, sup
            break
    B = Condition(nondecreasing and best_eps is not None,
                  {"eps": best_eps, "sup_ratio": sup_b, "nondecreasing_violation": drop})

    log_ok, sup_log, log_increase = _running_sup_plateau(grid, np.abs(slope) / values, plateau)
    rho_integral = cumulative_trapezoid(rho * np.abs(slope) / values ** 1.5, grid, initial=0)
    integral_ok = plateaus(grid, rho_integral, plateau)
    C = Condition(min_d > 0 and integral_ok,
                  {"eps_floor": min_d, "sup_log_derivative": sup_log,
                   "rho_integral_tail": float(rho_integral[-1]),
                   "rho_integral_increase": doubling_increase(grid, rho_integral)})
    D_cond = Condition(nondecreasing and log_ok,
                       {"nondecreasing_violation": drop, "sup_log_derivative": sup_log,
                        "log_derivative_increase": log_increase})

    c, alpha = _decay_fit(D)
    if np.isfinite(c) and alpha > 0:
        decay_integral = cumulative_trapezoid(
            1.0 / (np.sqrt(values) * (1.0 + grid - grid[0]) ** (2 * alpha)), grid, initial=0)
        decay_ok = plateaus(grid, decay_integral, plateau)
        tail = float(decay_integral[-1])
    else:
        decay_ok, tail = False, None
    decay = Condition(decay_ok, {"c": c if np.isfinite(c) else None, "alpha": alpha, "integral_tail": tail})

    return ConditionReport(A, B, C, D_cond, decay, wkb)


def check_wkb(problem: Problem, grid, evaluator: Optional[Evaluator] = None, t_osc: float = 12.0,
              plateau: float = 0.01) -> WkbReport:
    """Partial sums of int |36 D''/D^{3/2} - 5 D'^2/D^{5/2}| on nested horizons.

    Problems with oscillatory integrals are cut at ``t_osc``, where their
    second derivative is still resolved.
    """
    grid = np.asarray(grid, dtype=float)
    if problem.has_oscillatory_integrals and grid[-1] > t_osc:
        grid = grid[grid <= t_osc]
        if grid[-1] < t_osc:
            grid = np.append(grid, t_osc)
    ev = evaluator or problem.evaluator()
    D_expr = problem.discriminant_expr
    first = differentiate(D_expr)
    D_values = ev(D_expr, grid)
    imag = np.abs(np.imag(D_values)) > IMAG_TOL * (1.0 + np.abs(np.real(D_values)))
    if np.any(imag):
        k = int(np.flatnonzero(imag)[0])
        raise ComplexDiscriminant(grid[k], complex(D_values[k]))
    D_real = np.real(D_values)
    if np.any(D_real <= 0):
        k = int(np.flatnonzero(D_real <= 0)[0])
        raise DomainError("WKB integrand needs D > 0", float(grid[k]))
    d1 = np.real(ev(first, grid))
    d2 = np.real(ev(differentiate(first), grid))
    integrand = np.abs(36.0 * d2 / D_real ** 1.5 - 5.0 * d1 ** 2 / D_real ** 2.5)
    partial = cumulative_trapezoid(integrand, grid, initial=0)

    t0, T = grid[0], grid[-1]
    horizons = [t0 + (T - t0) / 2 ** k for k in range(WKB_LEVELS - 1, -1, -1)]
    sums = [float(np.interp(h, grid, partial)) for h in horizons]
    increase = doubling_increase(grid, partial)
    return WkbReport(
        horizons=[float(h) for h in horizons],
        partial_sums=sums,
        convergent=bool(np.isfinite(partial[-1]) and increase < plateau),
        increase=increase,
    )


# ---------------------------------------------------------------------------
# r-functions and trends
# ---------------------------------------------------------------------------

def r_functions(problem: Problem, D: FuncTrace, grid=None,
                evaluator: Optional[Evaluator] = None) -> tuple[FuncTrace, FuncTrace]:
    """r1 = int (sqrt D - Re p) - ln(D)/2 and r2 = r1 + 2 ln(1 + |p - sqrt D|)."""
    grid = D.grid if grid is None else np.asarray(grid, dtype=float)
    _require_positive(D)
    ev = evaluator or problem.evaluator()
    p = ev(problem.p_expr, grid)
    root_d = np.sqrt(D.values)
    r1 = cumulative_integral(root_d - np.real(p), grid) - 0.5 * np.log(D.values)
    r2 = r1 + 2.0 * np.log1p(np.abs(p - root_d))
    return FuncTrace(grid, r1), FuncTrace(grid, r2)


def classify_trend(f: FuncTrace, delta: float = 1e-3, Delta: float = 2.0, band: float = 10.0,
                   warmup: float = 1.0) -> TrendEstimate:
    """Decide the tail behaviour of f on [t0 + (T - t0)/2, T].

    The tail is split into equal windows with a least-squares slope each.
    Divergence needs every slope past +-delta and a total change past
    Delta. Bounded-above needs the tail inside ``band`` and an upper
    envelope that stops rising: the max over the later half of the tail
    exceeds the max over the earlier half by at most delta per unit t.
    """
    grid = f.grid
    values = np.real(f.values)
    t0, T = float(grid[0]), float(grid[-1])
    if T - t0 < 4 * warmup:
        return TrendEstimate(INCONCLUSIVE, horizon=T)
    start = t0 + 0.5 * (T - t0)
    edges = np.linspace(start, T, TREND_WINDOWS + 1)
    windows = []
    for a, b in zip(edges[:-1], edges[1:]):
        ts = np.linspace(a, b, WINDOW_POINTS)
        slope = float(np.polyfit(ts - a, np.interp(ts, grid, values), 1)[0])
        windows.append((float(a), float(b), slope))
    slopes = np.array([w[2] for w in windows])
    head = float(np.interp(start, grid, values))
    change = float(values[-1] - head)

    if np.all(slopes < -delta) and change < -Delta:
        verdict = TO_MINUS_INF
    elif np.all(slopes > delta) and change > Delta:
        verdict = TO_PLUS_INF
    else:
        mid = start + 0.5 * (T - start)
        tail = grid >= start
        early = tail & (grid <= mid)
        late = grid > mid
        spread = float(values[tail].max() - values[tail].min())
        early_max = max(float(values[early].max()) if early.any() else head, head)
        late_max = float(values[late].max())
        if spread <= band and late_max <= early_max + delta * (T - start):
            verdict = BOUNDED_ABOVE
        else:
            verdict = INCONCLUSIVE
    return TrendEstimate(verdict, windows, change, T)


def _crossover(problem: Problem, D: FuncTrace, evaluator: Evaluator) -> Optional[float]:
    """Where sqrt(D) would reach the mean of Re p if D keeps growing like ln t."""
    grid = D.grid
    t0, T = grid[0], grid[-1]
    tail = grid >= t0 + 0.5 * (T - t0)
    if tail.sum() < 4 or grid[tail][0] <= 0:
        return None
    p = np.real(evaluator(problem.p_expr, grid[tail]))
    half = p.size // 2
    early, late = p[:half].mean(), p[half:].mean()
    if abs(late - early) > 0.05 * (1.0 + abs(late)) or late <= 0:
        return None
    b, a = np.polyfit(np.log(grid[tail]), D.values[tail], 1)
    if b <= 0:
        return None
    return float(np.exp(min((late * late - a) / b, 700.0)))


# ---------------------------------------------------------------------------
# Verdict
# ---------------------------------------------------------------------------

def _dispatch(conditions: ConditionReport, r1: TrendEstimate, r2: TrendEstimate) -> Verdict:
    verdict = Verdict(r1_trend=r1, r2_trend=r2)
    A = conditions.A.holds
    decay_rule = A and conditions.decay.holds
    bounded_ok = A and (conditions.B.holds or conditions.C.holds)
    stable_ok = A and (conditions.C.holds or conditions.D_cond.holds)

    if bounded_ok or decay_rule:
        verdict.applied.append(R1_RULE if bounded_ok else DECAY_RULE)
        verdict.boundedness = BOUNDEDNESS_BY_TREND.get(r1.verdict, UNKNOWN)
    if stable_ok or decay_rule:
        verdict.applied.append(R2_RULE if stable_ok else DECAY_RULE)
        verdict.stability = STABILITY_BY_TREND.get(r2.verdict, UNKNOWN)
    verdict.applied = list(dict.fromkeys(verdict.applied))
    if not verdict.applied:
        verdict.caveats.append("no condition group holds; no criterion applied")

    if r2.verdict == BOUNDED_ABOVE and r1.verdict not in (BOUNDED_ABOVE, TO_MINUS_INF):
        verdict.caveats.append(f"r2 bounded above but r1 classified {r1.verdict}")

    inconsistent = (
        (verdict.stability == ASYMPTOTIC and verdict.boundedness not in (ALL_VANISH, UNKNOWN))
        or (verdict.stability == LIAPUNOV and verdict.boundedness not in (ALL_BOUNDED, ALL_VANISH, UNKNOWN))
    )
    if inconsistent:
        verdict.caveats.append(
            f"inconsistent verdicts {verdict.boundedness}/{verdict.stability}; both set to Unknown")
        verdict.boundedness = UNKNOWN
        verdict.stability = UNKNOWN
    return verdict


def _inapplicable(exc: TheoryInapplicable, horizon: float, conditions=None, grid=None, D=None) -> CriteriaReport:
    verdict = Verdict(inapplicable=exc.reason, location=exc.location,
                      caveats=[f"theory inapplicable: {exc}"])
    return CriteriaReport(verdict, horizon, conditions=conditions, grid=grid, D=D)


def verdict(problem: Problem, config: AnalysisConfig) -> CriteriaReport:
    """Run the whole criteria pipeline and issue the verdict."""
    horizon = config.horizon_for(problem)
    grid = make_grid(problem.t0, horizon, config.grid)
    ev = problem.evaluator(tol=config.tol, t_osc=config.t_osc)

    try:
        D = discriminant(problem, grid, ev)
    except ComplexDiscriminant as exc:
        return _inapplicable(exc, horizon, grid=grid)
    try:
        _require_positive(D)
    except NonPositiveDiscriminant as exc:
        conditions = check_conditions(D, np.zeros_like(D.values), plateau=config.plateau,
                                      eps_menu=config.eps_menu)
        return _inapplicable(exc, horizon, conditions=conditions, grid=grid, D=D)

    x = D.scaled(0.25)
    root = differential_root(x, tol=config.tol, method=config.method, t1_candidates=config.t1_candidates)
    wkb = check_wkb(problem, grid, ev, t_osc=config.t_osc, plateau=config.plateau)
    conditions = check_conditions(D, root.rho_upper, wkb, plateau=config.plateau, eps_menu=config.eps_menu)
    r1, r2 = r_functions(problem, D, grid, ev)
    trend_options = dict(delta=config.delta, Delta=config.Delta, band=config.band, warmup=config.warmup)
    result = _dispatch(conditions, classify_trend(r1, **trend_options), classify_trend(r2, **trend_options))

    result.caveats.append(
        f"finite horizon [{problem.t0:g}, {horizon:g}]: boundedness and convergence judged by "
        f"the {config.plateau:.0%} plateau rule")
    if problem.has_oscillatory_integrals and horizon > config.t_osc:
        result.caveats.append(
            f"oscillatory integrals follow their linear trend beyond t={config.t_osc:g}")
    if result.r1_trend.verdict == TO_MINUS_INF:
        crossing = _crossover(problem, D, ev)
        if crossing is not None and crossing > horizon:
            result.caveats.append(
                f"horizon below potential crossover: sqrt(D) may reach mean Re p near t={crossing:.3g}")

    return CriteriaReport(result, horizon, conditions, grid, D, root, r1, r2)
