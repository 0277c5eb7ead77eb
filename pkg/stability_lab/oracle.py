"""
Direct-integration oracle.

Solves phi'' + p phi' + q phi = 0 as a complex first-order system and
measures what the solutions actually do. The empirical verdict uses only
these measurements, never the criteria. The same module builds the
special solution phi0 from the differential root of D/4 and checks the
identities that tie phi0 to Q, r1, r2 and rho.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from stability_lab.coeffexpr.evaluator import Evaluator
from stability_lab.coeffexpr.problem import Problem
from stability_lab.coeffexpr.trace import FuncTrace, cumulative_integral, make_grid, plateaus
from stability_lab.errors import ConfigError, NonPositiveDiscriminant, StepSizeUnderflow
from stability_lab.outcomes import (
    ALL_BOUNDED,
    ALL_VANISH,
    ASYMPTOTIC,
    LIAPUNOV,
    UNBOUNDED,
    UNKNOWN,
    UNSTABLE,
)
from stability_lab.riccati import RootTrace

ESCAPE = 1e250
ORACLE_METHODS = ("DOP853", "RK45", "LSODA")
REAL_ONLY_METHODS = ("LSODA",)
ATOL_FACTOR = 1e-12
LOG_FLOOR = 1e-300


@dataclass(frozen=True, eq=False)
class SolutionTrace:
    grid: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    initial: tuple[complex, complex]
    tol: float
    escaped_at: Optional[float] = None
    dense: Optional[Callable] = field(default=None, repr=False)

    def rows(self):
        return zip(self.grid, self.phi.real, self.phi.imag, self.dphi.real, self.dphi.imag)


@dataclass
class EmpiricalVerdict:
    boundedness: str
    stability: str
    sup_norm: float
    terminal_norm: float
    growth_exponent: float
    horizon: float
    escape: Optional[float] = None
    provenance: str = "Empirical"

    def to_json(self) -> dict:
        return {
            "boundedness": self.boundedness,
            "stability": self.stability,
            "sup_norm": self.sup_norm,
            "terminal_norm": self.terminal_norm,
            "growth_exponent": self.growth_exponent,
            "horizon": self.horizon,
            "escape": self.escape,
            "provenance": self.provenance,
        }


@dataclass
class Phi0Result:
    quadrature: SolutionTrace
    direct: SolutionTrace
    log_modulus: np.ndarray
    max_rel_deviation: float


@dataclass
class IdentityReport:
    ratio_constant: float
    ratio_cv: float
    constancy_holds: bool
    derivative_bound_holds: bool
    q_bound_holds: bool
    stated_product_bound_holds: bool
    corrected_product_bound_holds: bool
    first_stated_violation: Optional[float] = None

    def to_json(self) -> dict:
        return {
            "ratio_constant": self.ratio_constant,
            "ratio_cv": self.ratio_cv,
            "constancy_holds": self.constancy_holds,
            "derivative_bound_holds": self.derivative_bound_holds,
            "q_bound_holds": self.q_bound_holds,
            "stated_product_bound_holds": self.stated_product_bound_holds,
            "corrected_product_bound_holds": self.corrected_product_bound_holds,
            "first_stated_violation": self.first_stated_violation,
        }


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------

def _coefficients(problem: Problem, grid: np.ndarray, evaluator: Evaluator):
    p = FuncTrace(grid, evaluator(problem.p_expr, grid)).interpolant()
    q = FuncTrace(grid, evaluator(problem.q_expr, grid)).interpolant()
    return p, q


def _check_method(method: str) -> None:
    if method not in ORACLE_METHODS:
        raise ConfigError(f"unsupported oracle method {method!r}; choose from {', '.join(ORACLE_METHODS)}")


def _split(rhs, size: int):
    """Real form of a complex system for integrators without complex support."""
    def real_rhs(t, y):
        dz = rhs(t, y[:size] + 1j * y[size:])
        return np.concatenate([dz.real, dz.imag])
    return real_rhs


def _solve(rhs, grid: np.ndarray, z0: np.ndarray, tol: float, method: str):
    _check_method(method)
    size = z0.size
    real_only = method in REAL_ONLY_METHODS
    if real_only:
        rhs = _split(rhs, size)
        z0 = np.concatenate([z0.real, z0.imag])

    def escape(t, z):
        return ESCAPE - np.max(np.abs(z))
    escape.terminal = True

    span = (grid[0], grid[-1])
    options = dict(method=method, t_eval=grid, rtol=tol, atol=tol * ATOL_FACTOR,
                   events=escape, dense_output=True)
    sol = solve_ivp(rhs, span, z0, **options)
    if sol.status == -1:
        sol = solve_ivp(rhs, span, z0, max_step=float(np.median(np.diff(grid))), **options)
    if sol.status == -1:
        where = sol.t[-1] if sol.t.size else grid[0]
        raise StepSizeUnderflow(where, sol.message or "step size underflow")
    if real_only:
        sol.y = sol.y[:size] + 1j * sol.y[size:]
        dense = sol.sol
        sol.sol = lambda t: dense(t)[:size] + 1j * dense(t)[size:]
    escaped = None
    if sol.status == 1 and sol.t_events[0].size:
        escaped = float(sol.t_events[0][0])
    return sol, escaped


def integrate_linear(problem: Problem, phi0: complex, dphi0: complex, t_end: float,
                     tol: float = 1e-10, grid=None, grid_size: int = 4000,
                     evaluator: Optional[Evaluator] = None, method: str = "DOP853",
                     allow_escape: bool = False) -> SolutionTrace:
    """Integrate the equation from (phi0, dphi0) at t0 and sample on a grid.

    Overflow past 1e250 stops the run: it raises StepSizeUnderflow at the
    escape time unless ``allow_escape`` asks for the truncated trace.
    """
    _check_method(method)
    grid = make_grid(problem.t0, t_end, grid_size) if grid is None else np.asarray(grid, dtype=float)
    ev = evaluator or problem.evaluator(tol=tol)
    p, q = _coefficients(problem, grid, ev)

    def rhs(t, z):
        return np.array([z[1], -p(t) * z[1] - q(t) * z[0]], dtype=complex)

    z0 = np.array([phi0, dphi0], dtype=complex)
    sol, escaped = _solve(rhs, grid, z0, tol, method)
    if escaped is not None and not allow_escape:
        raise StepSizeUnderflow(escaped, "solution escaped")
    kept = grid[: sol.t.size]
    return SolutionTrace(kept, sol.y[0], sol.y[1], (complex(phi0), complex(dphi0)), tol,
                         escaped_at=escaped, dense=sol.sol)


def residual_check(problem: Problem, trace: SolutionTrace, samples: int = 20, seed: int = 0,
                   evaluator: Optional[Evaluator] = None) -> float:
    """Worst relative residual |phi'' + p phi' + q phi| at random grid points.

    phi'' comes from central differences of the dense output.
    """
    if trace.dense is None:
        raise ValueError("trace has no dense output")
    ev = evaluator or problem.evaluator(tol=trace.tol)
    rng = np.random.default_rng(seed)
    interior = trace.grid[1:-1]
    points = np.sort(rng.choice(interior, size=min(samples, interior.size), replace=False))
    worst = 0.0
    for t in points:
        h = 1e-5 * max(1.0, abs(t))
        state = trace.dense(t)
        second = (trace.dense(t + h)[1] - trace.dense(t - h)[1]) / (2 * h)
        p = ev.value(problem.p_expr, t)
        q = ev.value(problem.q_expr, t)
        residual = abs(second + p * state[1] + q * state[0])
        scale = abs(second) + abs(p * state[1]) + abs(q * state[0]) + 1e-300
        worst = max(worst, residual / scale)
    return worst


# ---------------------------------------------------------------------------
# Empirical verdict
# ---------------------------------------------------------------------------

def _growth_exponent(grid: np.ndarray, norm: np.ndarray) -> float:
    tail = grid >= grid[0] + 0.5 * (grid[-1] - grid[0])
    if tail.sum() < 2:
        return 0.0
    return float(np.polyfit(grid[tail], np.log(np.maximum(norm[tail], LOG_FLOOR)), 1)[0])


def _classify(grid, norm, vanish_factor, plateau, vanish, bounded, grows):
    sup = float(norm.max())
    terminal = float(norm[-1])
    exponent = _growth_exponent(grid, norm)
    if terminal < vanish_factor * sup:
        label = vanish
    elif plateaus(grid, np.maximum.accumulate(norm), plateau):
        label = bounded
    elif exponent > 0:
        label = grows
    else:
        label = UNKNOWN
    return label, sup, terminal, exponent


def fundamental_growth(problem: Problem, t_end: float, tol: float = 1e-10, grid_size: int = 4000,
                       vanish_factor: float = 1e-3, plateau: float = 0.01,
                       evaluator: Optional[Evaluator] = None, method: str = "DOP853") -> EmpiricalVerdict:
    """Classify the equation from the growth of its fundamental matrix.

    Boundedness looks at the phi row (max |phi_1|, |phi_2|); stability at
    the max-abs entry of the whole matrix.
    """
    ev = evaluator or problem.evaluator(tol=tol)
    grid = make_grid(problem.t0, t_end, grid_size)
    first = integrate_linear(problem, 1, 0, t_end, tol, grid=grid, evaluator=ev, method=method, allow_escape=True)
    second = integrate_linear(problem, 0, 1, t_end, tol, grid=grid, evaluator=ev, method=method, allow_escape=True)
    escapes = [s.escaped_at for s in (first, second) if s.escaped_at is not None]
    if escapes:
        where = min(escapes)
        return EmpiricalVerdict(UNBOUNDED, UNSTABLE, float(ESCAPE), float(ESCAPE), float("inf"),
                                float(t_end), escape=where)

    phi_row = np.maximum(np.abs(first.phi), np.abs(second.phi))
    whole = np.maximum(phi_row, np.maximum(np.abs(first.dphi), np.abs(second.dphi)))
    boundedness, _, _, _ = _classify(grid, phi_row, vanish_factor, plateau, ALL_VANISH, ALL_BOUNDED, UNBOUNDED)
    stability, sup, terminal, exponent = _classify(grid, whole, vanish_factor, plateau,
                                                   ASYMPTOTIC, LIAPUNOV, UNSTABLE)
    return EmpiricalVerdict(boundedness, stability, sup, terminal, exponent, float(t_end))


# ---------------------------------------------------------------------------
# phi0 and the identities
# ---------------------------------------------------------------------------

def phi0_via_root(problem: Problem, root: RootTrace, evaluator: Optional[Evaluator] = None,
                  tol: float = 1e-10, method: str = "DOP853") -> Phi0Result:
    """phi0 = exp(int (y - p/2)) by quadrature, and by direct integration."""
    grid = root.grid
    if np.any(root.sqrt_x <= 0):
        k = int(np.flatnonzero(root.sqrt_x <= 0)[0])
        raise NonPositiveDiscriminant(grid[k], complex(4 * root.sqrt_x[k] ** 2))
    ev = evaluator or problem.evaluator(tol=tol)
    p = ev(problem.p_expr, grid)
    rate = root.y - 0.5 * p
    exponent = cumulative_integral(rate, grid)
    with np.errstate(over="ignore", under="ignore"):
        phi = np.exp(exponent)
    phi[0] = 1.0
    quadrature = SolutionTrace(grid, phi, rate * phi, (1 + 0j, complex(rate[0])), tol)
    direct = integrate_linear(problem, 1.0, rate[0], grid[-1], tol, grid=grid, evaluator=ev,
                              method=method, allow_escape=True)
    # compare in log space, only where the direct run is above its absolute tolerance
    n = direct.grid.size
    resolved = exponent.real[:n] > np.log(tol * ATOL_FACTOR) + np.log(1e6)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_gap = np.log(np.abs(direct.phi)) - exponent.real[:n]
        phase_gap = np.angle(direct.phi) - exponent.imag[:n]
        deviation = np.abs(np.exp(log_gap + 1j * phase_gap) - 1.0)
    worst = float(np.max(deviation[resolved])) if np.any(resolved) else 0.0
    return Phi0Result(quadrature, direct, exponent.real, worst)


def identity_checks(problem: Problem, root: RootTrace, phi0: Phi0Result, r1: FuncTrace, r2: FuncTrace,
                    evaluator: Optional[Evaluator] = None, slack: float = 1e-6) -> IdentityReport:
    """Check how the directly integrated phi0 relates to Q, r1, r2 and rho.

    Only grid points where the direct run is above its absolute tolerance
    take part. All comparisons divide out |phi0| (or work with
    logarithms), so decaying or growing phi0 does not leave double range.
    """
    direct = phi0.direct
    modulus = np.abs(direct.phi)
    keep = np.flatnonzero(modulus > direct.tol * ATOL_FACTOR * 1e6)
    if keep.size == 0:
        raise ValueError("direct phi0 is below its tolerance on the whole grid")
    grid = root.grid[keep]
    r1v, r2v = np.real(r1.values[keep]), np.real(r2.values[keep])
    ev = evaluator or problem.evaluator()
    p = ev(problem.p_expr, grid)
    root_d = 2.0 * root.sqrt_x[keep]
    rho = root.rho_upper[keep]
    Q = root.Q[keep]
    log_phi = np.log(modulus[keep])
    speed = np.abs(direct.dphi[keep]) / modulus[keep]    # |phi0'| / |phi0|

    log_ratio = log_phi - Q - 0.5 * r1v
    ratio = np.exp(log_ratio)
    constant = float(np.mean(ratio))
    cv = float(np.std(ratio) / constant)

    mismatch = np.abs(p - root_d)
    allowance = slack * (1.0 + speed)
    derivative_ok = np.all(speed <= rho + np.exp(Q + 0.5 * r2v - log_phi) + allowance)
    q_ok = np.all(speed <= rho + 0.5 * (1.0 + mismatch) + allowance)

    lhs = r2v + 2.0 * Q
    stated = log_phi + np.log(2.0 * speed + 1.0 + rho)
    bad = lhs > stated + slack * (1.0 + np.abs(stated))
    corrected = 2.0 * log_phi + 2.0 * np.log(2.0 * speed + 1.0 + 2.0 * rho) - np.log(2.0)
    corrected_ok = np.all(lhs <= corrected + slack * (1.0 + np.abs(corrected)))
    return IdentityReport(
        ratio_constant=constant,
        ratio_cv=cv,
        constancy_holds=cv < 1e-6,
        derivative_bound_holds=bool(derivative_ok),
        q_bound_holds=bool(q_ok),
        stated_product_bound_holds=not bool(np.any(bad)),
        corrected_product_bound_holds=bool(corrected_ok),
        first_stated_violation=float(grid[np.flatnonzero(bad)[0]]) if np.any(bad) else None,
    )


def substitution_check(problem: Problem, t_end: float, tol: float = 1e-10, grid_size: int = 2000,
                       evaluator: Optional[Evaluator] = None, method: str = "DOP853") -> float:
    """Integrate psi'' = (D/4) psi with E = exp(-int p/2) and compare E psi to phi.

    Returns the worst |E psi - phi| / (|phi| + |phi'|) on the grid; phi
    starts from (1, 0) and psi from the matching data (1, p(t0)/2).
    """
    _check_method(method)
    ev = evaluator or problem.evaluator(tol=tol)
    grid = make_grid(problem.t0, t_end, grid_size)
    p, _ = _coefficients(problem, grid, ev)
    quarter_d = FuncTrace(grid, ev(problem.discriminant_expr, grid) / 4.0).interpolant()

    def rhs(t, z):
        return np.array([z[1], quarter_d(t) * z[0], -0.5 * p(t)], dtype=complex)

    p0 = complex(ev.value(problem.p_expr, problem.t0))
    sol, escaped = _solve(rhs, grid, np.array([1.0, 0.5 * p0, 0.0], dtype=complex), tol, method)
    if escaped is not None:
        raise StepSizeUnderflow(escaped, "transformed solution escaped")
    phi = integrate_linear(problem, 1.0, 0.0, t_end, tol, grid=grid, evaluator=ev, method=method)
    rebuilt = np.exp(sol.y[2]) * sol.y[0]
    scale = np.abs(phi.phi) + np.abs(phi.dphi) + 1e-300
    return float(np.max(np.abs(rebuilt - phi.phi) / scale))
