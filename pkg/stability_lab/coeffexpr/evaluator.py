"""
Numerical evaluation of coefficient expressions.

Expressions are compiled once into vectorised numpy closures. Parameters
are looked up at compile time, so an unbound parameter fails before any
number is computed.

Cumulative-integral nodes are backed by a knot table: the accepted
Gauss-Kronrod leaves of an adaptive integration from the lower limit,
with the running integral stored at each leaf's left end. A query at t
costs one K15 rule on [knot, t]. Integrands with a registered
decomposition (linear trend + bounded remainder) are integrated directly
only up to ``t_osc``; beyond it the trend carries the value forward.
"""

from dataclasses import dataclass
from functools import singledispatch
from typing import Callable, Mapping, Optional

import numpy as np

from stability_lab.coeffexpr.nodes import (
    Add,
    Const,
    CumInt,
    Expr,
    Func,
    Mul,
    Neg,
    Param,
    Pow,
    Var,
    differentiate,
)
from stability_lab.coeffexpr.quadrature import gauss_kronrod, integrate_intervals
from stability_lab.coeffexpr.trace import FuncTrace
from stability_lab.errors import ConfigError, DomainError, UnboundParameter

DEFAULT_TOL = 1e-10
DEFAULT_T_OSC = 12.0
REAL_TOL = 1e-10

Compiled = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Decomposition:
    """cumint(integrand) = trend * (t - lower) + remainder, |remainder| <= bound."""

    trend: float
    bound: float


def _require_real_positive(values: np.ndarray, t: np.ndarray, what: str) -> np.ndarray:
    re = np.real(values)
    ok = (np.abs(np.imag(values)) <= REAL_TOL * (1.0 + np.abs(re))) & (re > 0)
    if not np.all(ok):
        first = np.flatnonzero(~ok.ravel())[0]
        where = np.broadcast_to(t, values.shape).ravel()[first]
        raise DomainError(f"{what} needs a real positive argument, got {values.ravel()[first]:.6g}", float(where))
    return re


class CumulativeIntegral:
    """Lazily extended knot table for one cumulative-integral node."""

    def __init__(self, integrand: Compiled, lower: float, tol: float = DEFAULT_TOL,
                 decomposition: Optional[Decomposition] = None, t_osc: float = DEFAULT_T_OSC):
        self.integrand = integrand
        self.lower = float(lower)
        self.tol = tol
        self.decomposition = decomposition
        self.cutoff = max(self.lower, t_osc) if decomposition else np.inf
        self.knots = np.zeros(0)
        self.partial = np.zeros(0, dtype=complex)
        self.end = self.lower
        self.end_value = 0j

    def check_decomposition(self, samples: int = 256) -> None:
        """Verify |I(t) - trend (t - lower)| <= bound by quadrature on [lower, cutoff]."""
        if self.decomposition is None or self.cutoff <= self.lower:
            return
        t = np.linspace(self.lower, self.cutoff, samples)
        remainder = np.abs(self._direct(t) - self.decomposition.trend * (t - self.lower))
        worst = int(np.argmax(remainder))
        if remainder[worst] > self.decomposition.bound * (1.0 + 1e-9) + 10.0 * self.tol:
            raise ConfigError(
                f"integral decomposition (trend {self.decomposition.trend:g}, bound {self.decomposition.bound:g}) "
                f"misses by {remainder[worst]:.6g} at t={t[worst]:.6g}"
            )

    def _extend(self, targets: np.ndarray) -> None:
        stop = float(targets.max(initial=self.end))
        if stop <= self.end:
            return
        inside = targets[(targets > self.end) & (targets < stop)]
        edges = np.unique(np.concatenate([np.arange(self.end, stop, 1.0), inside, [stop]]))
        leaves = integrate_intervals(self.integrand, edges, self.tol)
        before = np.concatenate([[0j], np.cumsum(leaves.leaf_value)[:-1]])
        self.knots = np.concatenate([self.knots, leaves.leaf_left])
        self.partial = np.concatenate([self.partial, self.end_value + before])
        self.end_value += complex(leaves.leaf_value.sum())
        self.end = stop

    def _direct(self, t: np.ndarray) -> np.ndarray:
        out = np.zeros(t.shape, dtype=complex)
        above = t > self.lower
        if not np.any(above):
            return out
        points = t[above]
        self._extend(points)
        k = np.clip(np.searchsorted(self.knots, points, side="right") - 1, 0, self.knots.size - 1)
        tail, _ = gauss_kronrod(self.integrand, self.knots[k], points)
        out[above] = self.partial[k] + tail
        return out

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t < self.lower - 1e-12 * (1.0 + abs(self.lower))):
            raise DomainError(f"cumulative integral queried below its lower limit {self.lower:g}",
                              float(t.min()))
        flat = t.ravel()
        if self.decomposition is None or flat.size == 0 or flat.max() <= self.cutoff:
            return self._direct(flat).reshape(t.shape)
        beyond = flat > self.cutoff
        out = np.empty(flat.shape, dtype=complex)
        out[~beyond] = self._direct(flat[~beyond])
        anchor = self._direct(np.array([self.cutoff]))[0]
        out[beyond] = anchor + self.decomposition.trend * (flat[beyond] - self.cutoff)
        return out.reshape(t.shape)


class Evaluator:
    """Compiles expressions against fixed parameter bindings.

    Compiled closures and cumulative-integral tables are memoised per
    structurally-equal node, so repeated evaluation is cheap.
    """

    def __init__(self, params: Optional[Mapping[str, complex]] = None, tol: float = DEFAULT_TOL,
                 t_osc: float = DEFAULT_T_OSC,
                 decompositions: Optional[Mapping[Expr, Decomposition]] = None):
        self.params = {name: complex(value) for name, value in (params or {}).items()}
        self.tol = tol
        self.t_osc = t_osc
        self.decompositions = dict(decompositions or {})
        self._compiled: dict[Expr, Compiled] = {}
        self._tables: dict[CumInt, CumulativeIntegral] = {}

    def compile(self, expr: Expr) -> Compiled:
        fn = self._compiled.get(expr)
        if fn is None:
            fn = _compile(expr, self)
            self._compiled[expr] = fn
        return fn

    def table(self, node: CumInt) -> CumulativeIntegral:
        table = self._tables.get(node)
        if table is None:
            table = CumulativeIntegral(
                self.compile(node.integrand),
                node.lower,
                tol=self.tol,
                decomposition=self.decompositions.get(node.integrand),
                t_osc=self.t_osc,
            )
            table.check_decomposition()
            self._tables[node] = table
        return table

    def __call__(self, expr: Expr, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            return np.asarray(self.compile(expr)(t), dtype=complex)

    def value(self, expr: Expr, t: float) -> complex:
        return complex(self(expr, np.array([t]))[0])

    def trace(self, expr: Expr, grid, derivative: bool = False) -> FuncTrace:
        """Sample ``expr`` (and optionally its symbolic derivative) on a grid."""
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be a strictly increasing 1-d array")
        values = self(expr, grid)
        slope = self(differentiate(expr), grid) if derivative else None
        return FuncTrace(grid, values, slope)


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------

@singledispatch
def _compile(expr: Expr, ev: Evaluator) -> Compiled:
    raise TypeError(f"cannot evaluate a {type(expr).__name__}")


@_compile.register
def _(expr: Const, ev):
    value = expr.value
    return lambda t: np.full(np.shape(t), value, dtype=complex)


@_compile.register
def _(expr: Var, ev):
    return lambda t: np.asarray(t, dtype=complex)


@_compile.register
def _(expr: Param, ev):
    if expr.name not in ev.params:
        raise UnboundParameter(expr.name)
    value = ev.params[expr.name]
    return lambda t: np.full(np.shape(t), value, dtype=complex)


@_compile.register
def _(expr: Add, ev):
    parts = [ev.compile(term) for term in expr.terms]

    def run(t):
        total = parts[0](t)
        for part in parts[1:]:
            total = total + part(t)
        return total
    return run


@_compile.register
def _(expr: Mul, ev):
    parts = [ev.compile(factor) for factor in expr.factors]

    def run(t):
        total = parts[0](t)
        for part in parts[1:]:
            total = total * part(t)
        return total
    return run


@_compile.register
def _(expr: Neg, ev):
    inner = ev.compile(expr.arg)
    return lambda t: -inner(t)


@_compile.register
def _(expr: Pow, ev):
    base = ev.compile(expr.base)
    n = expr.exponent
    if n.denominator == 1:
        k = int(n)

        def integer_power(t):
            v = base(t)
            if k < 0 and np.any(v == 0):
                first = np.flatnonzero((v == 0).ravel())[0]
                raise DomainError("division by zero", float(np.broadcast_to(t, v.shape).ravel()[first]))
            return v ** k
        return integer_power

    exponent = float(n)

    def half_power(t):
        re = _require_real_positive(base(t), t, f"power {n}")
        return (re ** exponent).astype(complex)
    return half_power


@_compile.register
def _(expr: Func, ev):
    inner = ev.compile(expr.arg)
    match expr.name:
        case "sin":
            return lambda t: np.sin(inner(t))
        case "cos":
            return lambda t: np.cos(inner(t))
        case "exp":
            return lambda t: np.exp(inner(t))
        case "ln":
            return lambda t: np.log(_require_real_positive(inner(t), t, "ln")).astype(complex)
        case "sqrt":
            return lambda t: np.sqrt(_require_real_positive(inner(t), t, "sqrt")).astype(complex)
    raise TypeError(f"unknown function {expr.name!r}")


@_compile.register
def _(expr: CumInt, ev):
    table = ev.table(expr)
    return lambda t: table(t)


# ---------------------------------------------------------------------------
# Convenience entry points
# ---------------------------------------------------------------------------

def evaluate(expr: Expr, t: float, params: Optional[Mapping[str, complex]] = None, **options) -> complex:
    """Value of ``expr`` at a single real t."""
    return Evaluator(params, **options).value(expr, t)


def eval_grid(expr: Expr, grid, params: Optional[Mapping[str, complex]] = None,
              derivative: bool = False, **options) -> FuncTrace:
    """Sample ``expr`` on a strictly increasing grid."""
    return Evaluator(params, **options).trace(expr, grid, derivative=derivative)


def is_real_valued(trace: FuncTrace, tol: float = REAL_TOL) -> bool:
    values = trace.values
    return bool(np.all(np.abs(np.imag(values)) <= tol * (1.0 + np.abs(np.real(values)))))
