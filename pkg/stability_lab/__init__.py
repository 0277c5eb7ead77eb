"""Riccati stability lab: boundedness and stability of phi'' + p phi' + q phi = 0."""

from stability_lab.analysis import StabilityAnalyzer, analyze, load_problem, run_sweep
from stability_lab.config import AnalysisConfig, resolve_config
from stability_lab.criteria import check_conditions, check_wkb, classify_trend, verdict
from stability_lab.oracle import fundamental_growth, integrate_linear
from stability_lab.riccati import differential_root, rho_upper

__version__ = "0.1.0"

__all__ = [
    "AnalysisConfig",
    "StabilityAnalyzer",
    "analyze",
    "check_conditions",
    "check_wkb",
    "classify_trend",
    "differential_root",
    "fundamental_growth",
    "integrate_linear",
    "load_problem",
    "resolve_config",
    "rho_upper",
    "run_sweep",
    "verdict",
]
