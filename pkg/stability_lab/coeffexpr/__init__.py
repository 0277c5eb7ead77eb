"""Coefficient expressions: parsing, differentiation, evaluation, problems."""

from stability_lab.coeffexpr.catalog import CATALOG, catalog, export_catalog, get_problem, import_catalog
from stability_lab.coeffexpr.evaluator import Decomposition, Evaluator, eval_grid, evaluate
from stability_lab.coeffexpr.nodes import Expr, cumint, differentiate, free_params, to_string
from stability_lab.coeffexpr.parser import parse
from stability_lab.coeffexpr.problem import ClaimRule, IntegralDecomposition, Problem
from stability_lab.coeffexpr.trace import FuncTrace, make_grid

__all__ = [
    "CATALOG",
    "ClaimRule",
    "Decomposition",
    "Evaluator",
    "Expr",
    "FuncTrace",
    "IntegralDecomposition",
    "Problem",
    "catalog",
    "cumint",
    "differentiate",
    "eval_grid",
    "evaluate",
    "export_catalog",
    "free_params",
    "get_problem",
    "import_catalog",
    "make_grid",
    "parse",
    "to_string",
]
