"""
Differential root of a positive function and its deviation bounds.

The differential root of x is the solution of y' + y^2 = x with
y(t0) = sqrt(x(t0)). For positive x it stays nonnegative and tracks
sqrt(x); the distance is bounded by

    R(t1; t) = (1 + sqrt(x0)(t1 - t0)) / (1 + sqrt(x0)(t - t0))
               * exp(-int_{t1}^{t} sqrt(x)) * sup_{[t0, t1]} g + sup_{[t1, t]} g,

with g = |x'| / (2x), and rho(t) = inf over t1 of R(t1; t). Q(t) is the
integral of (y - sqrt(x)) from t0 plus ln(x(t)) / 4.

Everything here works on sampled traces; x must carry its symbolic
derivative so g is never obtained by differencing.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp
from scipy.interpolate import CubicSpline

from stability_lab.coeffexpr.trace import FuncTrace, cumulative_integral, plateaus
from stability_lab.errors import NonPositiveInput, OutOfRange, StepSizeUnderflow

SAFETY = 1.05
DEFAULT_METHODS = ("DOP853", "RK45", "LSODA")
ESCAPE = 1e150
EPS_MENU = (0.5, 0.25, 0.1, 0.05)


@dataclass(frozen=True, eq=False)
class RootTrace:
    grid: np.ndarray
    y: np.ndarray
    sqrt_x: np.ndarray
    rho_upper: np.ndarray
    Q: np.ndarray
    sup_cache: np.ndarray
    tol: float = 1e-10

    @property
    def t0(self) -> float:
        return float(self.grid[0])

    def lower_envelope(self) -> np.ndarray:
        """sqrt(x0) / (1 + sqrt(x0)(t - t0)); y never drops below it."""
        s0 = self.sqrt_x[0]
        return s0 / (1.0 + s0 * (self.grid - self.grid[0]))

    def Q_trace(self) -> FuncTrace:
        return FuncTrace(self.grid, self.Q)

    def restrict(self, t_end: float) -> "RootTrace":
        stop = int(np.searchsorted(self.grid, t_end, side="right"))
        return RootTrace(self.grid[:stop], self.y[:stop], self.sqrt_x[:stop], self.rho_upper[:stop],
                         self.Q[:stop], self.sup_cache[:stop], self.tol)

    def rows(self):
        return zip(self.grid, self.y, self.sqrt_x, self.rho_upper, self.Q)


@dataclass
class ComparisonReport:
    holds: bool
    input_valid: bool = True
    first_violation: Optional[float] = None
    min_gap: float = 0.0
    finite_escape: Optional[float] = None
    message: str = ""
    y0: Optional[np.ndarray] = field(default=None, repr=False)
    y1: Optional[np.ndarray] = field(default=None, repr=False)

    def to_json(self) -> dict:
        return {
            "holds": self.holds,
            "input_valid": self.input_valid,
            "first_violation": self.first_violation,
            "min_gap": self.min_gap,
            "finite_escape": self.finite_escape,
            "message": self.message,
        }


@dataclass
class HypothesisReport:
    holds: bool
    evidence: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"holds": self.holds, **self.evidence}


# ---------------------------------------------------------------------------
# Riccati integration
# ---------------------------------------------------------------------------

def _positive_samples(x: FuncTrace) -> np.ndarray:
    values = np.real(x.values)
    bad = ~(values > 0)
    if np.any(bad):
        first = int(np.flatnonzero(bad)[0])
        raise NonPositiveInput(x.grid[first], values[first])
    return values


def solve_riccati(x: FuncTrace, y_init: float, tol: float = 1e-10, method: str = "DOP853") -> np.ndarray:
    """Integrate y' = x - y^2 from y(t0) = y_init and sample y on x's grid.

    Between grid points x is a cubic spline of the samples. A failed run
    is retried once with the step capped at the median grid spacing.
    """
    if method not in DEFAULT_METHODS:
        raise ValueError(f"unsupported method {method!r}; choose from {', '.join(DEFAULT_METHODS)}")
    grid = x.grid
    spline = CubicSpline(grid, np.real(x.values))

    def rhs(t, y):
        return spline(t) - y * y

    def escape(t, y):
        return ESCAPE - abs(y[0])
    escape.terminal = True

    span = (grid[0], grid[-1])
    options = dict(method=method, t_eval=grid, rtol=tol, atol=tol, events=escape)
    sol = solve_ivp(rhs, span, [y_init], **options)
    if sol.status != 0 or sol.t.size != grid.size:
        sol = solve_ivp(rhs, span, [y_init], max_step=float(np.median(np.diff(grid))), **options)
    if sol.status == 1 or (sol.status == 0 and sol.t.size != grid.size):
        where = sol.t_events[0][0] if sol.t_events and sol.t_events[0].size else sol.t[-1]
        raise StepSizeUnderflow(where, "finite escape")
    if sol.status != 0:
        where = sol.t[-1] if sol.t.size else grid[0]
        raise StepSizeUnderflow(where, sol.message or "step size underflow")
    return sol.y[0]


def differential_root(x: FuncTrace, tol: float = 1e-10, method: str = "DOP853",
                      t1_candidates: int = 32, safety: float = SAFETY) -> RootTrace:
    """Differential root of x with rho upper bounds and Q on x's grid."""
    values = _positive_samples(x)
    y0 = float(np.sqrt(values[0]))
    y = solve_riccati(x, y0, tol=tol, method=method)
    y[0] = y0
    y = np.maximum(y, 0.0)
    bound = DeviationBound(x, safety=safety)
    sqrt_x = np.sqrt(values)
    return RootTrace(
        grid=x.grid,
        y=y,
        sqrt_x=sqrt_x,
        rho_upper=bound.rho_upper_all(t1_candidates),
        Q=_q_values(x.grid, y, values),
        sup_cache=bound.prefix_max,
        tol=tol,
    )


# ---------------------------------------------------------------------------
# Deviation bounds
# ---------------------------------------------------------------------------

def _refined_peaks(grid: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Raise each sampled local maximum to the vertex of its 3-point parabola."""
    out = g.copy()
    if g.size < 3:
        return out
    h1 = grid[1:-1] - grid[:-2]
    h2 = grid[2:] - grid[1:-1]
    left, mid, right = g[:-2], g[1:-1], g[2:]
    d1 = (mid - left) / h1
    d2 = (right - mid) / h2
    a = (d2 - d1) / (h1 + h2)
    b = d1 + a * h1
    peak = (mid >= left) & (mid >= right) & (a < 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(peak, -b / (2 * a), 0.0)
        vertex = np.where(peak, mid - b * b / (4 * a), mid)
    inside = peak & (s >= -h1) & (s <= h2)
    out[1:-1] = np.where(inside, np.maximum(mid, vertex), mid)
    return out


class _SparseMax:
    """O(1) range-maximum queries over a fixed array."""

    def __init__(self, values: np.ndarray):
        self.levels = [values]
        width = 1
        while 2 * width <= values.size:
            prev = self.levels[-1]
            self.levels.append(np.maximum(prev[:-width], prev[width:]))
            width *= 2

    def query(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """max(values[lo..hi]) inclusive, elementwise; requires lo <= hi."""
        lo = np.asarray(lo)
        hi = np.asarray(hi)
        span = hi - lo + 1
        level = np.floor(np.log2(span)).astype(int)
        out = np.empty(np.broadcast(lo, hi).shape)
        for k in np.unique(level):
            sel = level == k
            table = self.levels[k]
            out[sel] = np.maximum(table[lo[sel]], table[hi[sel] - (1 << k) + 1])
        return out


class DeviationBound:
    """Evaluates R(t1; t) and rho upper bounds for one sampled x."""

    def __init__(self, x: FuncTrace, safety: float = SAFETY):
        if x.derivative is None:
            raise ValueError("x must carry its symbolic derivative")
        values = _positive_samples(x)
        self.grid = x.grid
        self.safety = safety
        self.sqrt_x0 = float(np.sqrt(values[0]))
        g = np.abs(np.real(x.derivative)) / (2.0 * values)
        # cap for rho: sup g itself, never scaled
        self.sampled_max = np.maximum.accumulate(g)
        self.g = _refined_peaks(self.grid, g)
        self.prefix_max = np.maximum.accumulate(self.g)
        self.window = _SparseMax(self.g)
        self.S = cumulative_trapezoid(np.sqrt(values), self.grid, initial=0)

    def _check(self, t: float) -> None:
        if t < self.grid[0] - 1e-12 or t > self.grid[-1] + 1e-12:
            raise OutOfRange(f"t={t:g} outside [{self.grid[0]:g}, {self.grid[-1]:g}]")

    def _ratio(self, t1, t):
        t0 = self.grid[0]
        return (1.0 + self.sqrt_x0 * (t1 - t0)) / (1.0 + self.sqrt_x0 * (t - t0))

    def _R_indices(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        t1, t = self.grid[i], self.grid[j]
        decay = self._ratio(t1, t) * np.exp(-(self.S[j] - self.S[i]))
        return self.safety * (decay * self.prefix_max[i] + self.window.query(i, j))

    def R(self, t1: float, t: float) -> float:
        """R(t1; t); off-grid arguments widen both sup windows to whole cells."""
        self._check(t1)
        self._check(t)
        if t1 > t:
            raise OutOfRange(f"t1={t1:g} exceeds t={t:g}")
        n = self.grid.size - 1
        lo = int(np.clip(np.searchsorted(self.grid, t1, side="right") - 1, 0, n))
        hi = int(np.clip(np.searchsorted(self.grid, t, side="left"), 0, n))
        head = int(np.clip(np.searchsorted(self.grid, t1, side="left"), 0, n))
        integral = np.interp(t, self.grid, self.S) - np.interp(t1, self.grid, self.S)
        decay = self._ratio(t1, t) * np.exp(-integral)
        first = self.prefix_max[head]
        second = float(self.window.query(np.array([lo]), np.array([hi]))[0])
        return float(self.safety * (decay * first + second))

    def rho_upper_all(self, t1_candidates: int = 32) -> np.ndarray:
        """rho upper bound at every grid point.

        Candidates t1 = t - (t - t0) s with s log-spaced in [1e-3, 1], snapped
        to grid points, plus t1 = t. The result is capped by the sampled sup of
        g on [t0, t], which bounds rho directly.
        """
        if t1_candidates < 1:
            raise ValueError("t1_candidates must be positive")
        t0 = self.grid[0]
        j = np.arange(self.grid.size)
        s = np.geomspace(1e-3, 1.0, t1_candidates)
        t1 = self.grid[:, None] - (self.grid[:, None] - t0) * s[None, :]
        i = np.clip(np.searchsorted(self.grid, t1, side="right") - 1, 0, j[:, None])
        i = np.concatenate([i, j[:, None]], axis=1)
        jj = np.broadcast_to(j[:, None], i.shape)
        best = self._R_indices(i.ravel(), jj.ravel()).reshape(i.shape).min(axis=1)
        return np.minimum(best, self.sampled_max)

    def rho_upper(self, t: float, t1_candidates: int = 32) -> float:
        self._check(t)
        t0 = self.grid[0]
        if t == t0:
            return float(self.sampled_max[0])
        s = np.geomspace(1e-3, 1.0, t1_candidates)
        candidates = np.concatenate([t - (t - t0) * s, [t0, t]])
        best = min(self.R(float(t1), t) for t1 in candidates)
        k = int(np.clip(np.searchsorted(self.grid, t, side="left"), 0, self.grid.size - 1))
        return float(min(best, self.sampled_max[k]))


def R_upper(x: FuncTrace, t1: float, t: float, safety: float = SAFETY) -> float:
    return DeviationBound(x, safety=safety).R(t1, t)


def rho_upper(x: FuncTrace, t: float, t1_candidates: int = 32, safety: float = SAFETY) -> float:
    return DeviationBound(x, safety=safety).rho_upper(t, t1_candidates)


# ---------------------------------------------------------------------------
# Q and its bounds
# ---------------------------------------------------------------------------

def _q_values(grid: np.ndarray, y: np.ndarray, x_values: np.ndarray) -> np.ndarray:
    deviation = cumulative_integral(y - np.sqrt(x_values), grid)
    return deviation + 0.25 * np.log(x_values)


def Q_of(x: FuncTrace, root: RootTrace) -> FuncTrace:
    """Q(t) = int_{t0}^{t} (y - sqrt(x)) + ln(x(t)) / 4, Simpson on the shared grid."""
    if x.grid.shape != root.grid.shape or np.any(x.grid != root.grid):
        raise ValueError("x and root must share a grid")
    return FuncTrace(x.grid, _q_values(x.grid, root.y, _positive_samples(x)))


def q_sandwich(x: FuncTrace, root: RootTrace, slack: float = 1e-6) -> HypothesisReport:
    """Check ln(x/y^2)/4 <= int(y - sqrt x) + ln(x/x0)/4 <= upper pointwise.

    upper = 1/2 - y/(2 sqrt x) + int (sqrt x - y) x' / (4 x^{3/2}).
    """
    values = _positive_samples(x)
    sqrt_x = np.sqrt(values)
    y = root.y
    grid = x.grid
    middle = cumulative_trapezoid(y - sqrt_x, grid, initial=0) + 0.25 * np.log(values / values[0])
    with np.errstate(divide="ignore"):
        lower = 0.25 * np.log(values / (y * y))
    drift = (sqrt_x - y) * np.real(x.derivative) / (4.0 * values ** 1.5)
    upper = 0.5 - y / (2.0 * sqrt_x) + cumulative_trapezoid(drift, grid, initial=0)
    allowance = slack * (1.0 + np.abs(middle))
    low_gap = middle - lower
    high_gap = upper - middle
    return HypothesisReport(
        holds=bool(np.all(low_gap >= -allowance) and np.all(high_gap >= -allowance)),
        evidence={
            "min_lower_gap": float(np.min(low_gap)),
            "min_upper_gap": float(np.min(high_gap)),
        },
    )


def q_bound_hypotheses(x: FuncTrace, rho: np.ndarray, plateau: float = 0.01,
                       eps_menu: tuple[float, ...] = EPS_MENU) -> dict[str, HypothesisReport]:
    """Hypotheses under which Q stays bounded.

    ``nondecreasing``: x nondecreasing and x'/x^{3/2 - eps} bounded for a
    menu eps. ``floor_integral``: x >= eps > 0 and int rho |x'| / x^{3/2}
    converges. Boundedness and convergence use the plateau rule.
    """
    values = _positive_samples(x)
    slope = np.real(x.derivative)
    grid = x.grid
    drop = float(max(0.0, -np.min(np.diff(values)))) if values.size > 1 else 0.0
    nondecreasing = drop <= 1e-12 * (1.0 + float(np.max(np.abs(values))))
    witness = None
    for eps in eps_menu:
        running = np.maximum.accumulate(np.abs(slope) / values ** (1.5 - eps))
        if plateaus(grid, running, plateau):
            witness = eps
            break
    integrand = rho * np.abs(slope) / values ** 1.5
    partial = cumulative_trapezoid(integrand, grid, initial=0)
    converges = plateaus(grid, partial, plateau)
    return {
        "nondecreasing": HypothesisReport(
            holds=bool(nondecreasing and witness is not None),
            evidence={"max_drop": drop, "eps": witness},
        ),
        "floor_integral": HypothesisReport(
            holds=bool(values.min() > 0 and converges),
            evidence={"min_x": float(values.min()), "integral_tail": float(partial[-1])},
        ),
    }


# ---------------------------------------------------------------------------
# Comparison and decay
# ---------------------------------------------------------------------------

def comparison_check(x: FuncTrace, x1: FuncTrace, y0_init: float, y1_init: float,
                     tol: float = 1e-8, method: str = "DOP853") -> ComparisonReport:
    """Integrate both Riccati equations and check y1 >= y0 - tol everywhere.

    Input that breaks the ordering hypotheses, or a finite escape of y1,
    is reported as invalid input rather than as a counterexample.
    """
    if x.grid.shape != x1.grid.shape or np.any(x.grid != x1.grid):
        raise ValueError("x and x1 must share a grid")
    below = np.real(x1.values) < np.real(x.values) - tol
    if np.any(below):
        where = float(x.grid[np.flatnonzero(below)[0]])
        return ComparisonReport(False, input_valid=False, first_violation=where,
                                message="x1 < x somewhere")
    if y1_init < y0_init:
        return ComparisonReport(False, input_valid=False, message="y1(t0) < y0(t0)")

    integrate_tol = min(tol, 1e-10)
    y0 = solve_riccati(x, y0_init, tol=integrate_tol, method=method)
    try:
        y1 = solve_riccati(x1, y1_init, tol=integrate_tol, method=method)
    except StepSizeUnderflow as exc:
        return ComparisonReport(False, input_valid=False, finite_escape=exc.location,
                                message=f"finite escape of y1: {exc}", y0=y0)
    gap = y1 - y0
    bad = gap < -tol
    first = float(x.grid[np.flatnonzero(bad)[0]]) if np.any(bad) else None
    return ComparisonReport(
        holds=first is None,
        first_violation=first,
        min_gap=float(np.min(gap)),
        y0=y0,
        y1=y1,
    )


def decay_envelope(x: FuncTrace, c: float, alpha: float) -> np.ndarray:
    """2^{alpha-1} c / (1 + sqrt(x0)(t - t0))^alpha."""
    s0 = float(np.sqrt(np.real(x.values[0])))
    return 2.0 ** (alpha - 1.0) * c / (1.0 + s0 * (x.grid - x.grid[0])) ** alpha


def decay_hypothesis(x: FuncTrace, c: float, alpha: float) -> HypothesisReport:
    """x >= eps > 0 and |x'|/x <= c / (1 + sqrt(x0)(t - t0))^alpha on the grid."""
    if x.derivative is None:
        raise ValueError("x must carry its symbolic derivative")
    values = np.real(x.values)
    if values.min() <= 0:
        return HypothesisReport(False, {"min_x": float(values.min()), "worst_ratio": None})
    s0 = float(np.sqrt(values[0]))
    allowed = c / (1.0 + s0 * (x.grid - x.grid[0])) ** alpha
    ratio = (np.abs(np.real(x.derivative)) / values) / allowed
    worst = float(ratio.max())
    return HypothesisReport(worst <= 1.0, {"min_x": float(values.min()), "worst_ratio": worst})


def decay_threshold(x: FuncTrace) -> Optional[float]:
    """Smallest grid t beyond which ln(1 + sqrt(x0)(t - t0)) < (t - t0) / 2."""
    s0 = float(np.sqrt(np.real(x.values[0])))
    elapsed = x.grid - x.grid[0]
    fails = np.log1p(s0 * elapsed) >= 0.5 * elapsed
    if not np.any(fails):
        return float(x.grid[0])
    last = int(np.flatnonzero(fails)[-1])
    if last + 1 >= x.grid.size:
        return None
    return float(x.grid[last + 1])


def rho_decay_check(x: FuncTrace, rho: np.ndarray, c: float, alpha: float,
                    factor: float = 2.0) -> HypothesisReport:
    """rho stays within ``factor`` times the decay envelope past the decay threshold.

    The envelope only binds when the decay hypothesis holds for the same
    c and alpha; ``rho`` is compared from the threshold on.
    """
    threshold = decay_threshold(x)
    if threshold is None:
        return HypothesisReport(False, {"threshold": None, "worst_ratio": None, "factor": factor})
    beyond = x.grid >= threshold
    ratio = np.asarray(rho)[beyond] / decay_envelope(x, c, alpha)[beyond]
    worst = float(ratio.max())
    return HypothesisReport(worst <= factor, {"threshold": threshold, "worst_ratio": worst, "factor": factor})


def decay_constant(x: FuncTrace, c: float, alpha: float) -> float:
    """Rescale c fitted against (1 + t - t0)^alpha to the (1 + sqrt(x0)(t - t0))^alpha form."""
    s0 = float(np.sqrt(np.real(x.values[0])))
    return c * max(1.0, s0) ** alpha
