"""Shared test data and helpers for the stability-lab test suite."""

import numpy as np

from stability_lab.coeffexpr.evaluator import eval_grid
from stability_lab.coeffexpr.parser import parse
from stability_lab.coeffexpr.trace import FuncTrace, make_grid


def make_x(text: str, t0: float, t_end: float, size: int = 2000, params=None) -> FuncTrace:
    """Real trace of an expression with its symbolic derivative."""
    grid = make_grid(t0, t_end, size)
    return eval_grid(parse(text, t0), grid, params or {}, derivative=True).real()


def trace_of(grid: np.ndarray, values: np.ndarray, derivative=None) -> FuncTrace:
    return FuncTrace(np.asarray(grid, dtype=float), np.asarray(values, dtype=float),
                     None if derivative is None else np.asarray(derivative, dtype=float))


SAMPLE_CONTROL = {"id": "control", "p": "2", "q": "0", "t0": 0.0}

# D = 1 - 4t < 0 from t0 on
SAMPLE_NEGATIVE_D = {"id": "negative-d", "p": "1", "q": "t", "t0": 1.0}

# D = (1 + i)^2 = 2i
SAMPLE_COMPLEX_D = {"id": "complex-d", "p": "1 + 1j", "q": "0", "t0": 0.0}

SAMPLE_OSCILLATORY = {
    "id": "osc",
    "p": "1",
    "q": "-cumint(sin(exp(t))^2)/4",
    "t0": 1.0,
    "integral_decomposition": [{"integrand": "sin(exp(t))^2", "trend": 0.5, "bound": 0.5}],
}

SAMPLE_EXPRESSIONS = [
    "lambda*t^2 + sin(exp(t))",
    "1/t - 3",
    "sqrt(t)*ln(t)",
    "cumint(sin(t)^2/t)",
    "-(t + 2)^3",
]

SAMPLE_BAD_EXPRESSIONS = ["", "t +", "sin(t", "t^t", "t^(1/3)", "t $ 2", "foo(t)"]

CATALOG_IDS = ["ex2.1", "ex2.2", "ex2.3", "const-coeff", "wkb-ok"]
