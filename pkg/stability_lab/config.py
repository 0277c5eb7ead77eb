"""
Analysis configuration and default resolution.

Single source of truth for every numeric knob of an analysis. Defaults
live in one table; a JSON file named by the RSL_DEFAULTS environment
variable (a .env file works too) can override them, and explicit flags
override both. The resolved config is echoed verbatim into every report.
"""

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping, Optional

from dotenv import load_dotenv

from stability_lab.errors import ConfigError

DEFAULTS_ENV = "RSL_DEFAULTS"
FALLBACK_HORIZON = 40.0
METHODS = ("DOP853", "RK45", "LSODA")
FORMATS = ("json", "csv")


@dataclass(frozen=True)
class AnalysisConfig:
    """Everything an analysis run depends on."""

    problem: Any = "ex2.1"              # catalog id or inline problem document
    params: Mapping[str, complex] = None
    t_end: Optional[float] = None       # None: the problem's own horizon
    grid: int = 4000
    tol: float = 1e-10
    delta: float = 1e-3                 # trend slope threshold per unit t
    Delta: float = 2.0                  # trend total-change threshold
    band: float = 10.0                  # bounded-above oscillation band
    t1_candidates: int = 32
    t_osc: float = 12.0
    plateau: float = 0.01
    vanish_factor: float = 1e-3
    oracle_t_end: Optional[float] = None
    method: str = "DOP853"
    warmup: float = 1.0
    eps_menu: tuple[float, ...] = (0.5, 0.25, 0.1, 0.05)
    oracle: bool = True
    out: Optional[str] = None
    format: str = "json"

    def __str__(self) -> str:
        horizon = "auto" if self.t_end is None else f"{self.t_end:g}"
        return (
            f"problem={self.problem if isinstance(self.problem, str) else self.problem.get('id', 'inline')} "
            f"T={horizon} grid={self.grid} tol={self.tol:g} "
            f"oracle={'yes' if self.oracle else 'no'}"
        )

    def horizon_for(self, problem) -> float:
        horizon = self.t_end if self.t_end is not None else (problem.horizon or FALLBACK_HORIZON)
        if horizon <= problem.t0:
            raise ConfigError(f"horizon {horizon:g} must exceed t0={problem.t0:g}")
        return float(horizon)

    def oracle_horizon_for(self, problem) -> float:
        horizon = self.horizon_for(problem)
        if self.oracle_t_end is not None:
            chosen = self.oracle_t_end
        elif problem.oracle_horizon is not None:
            chosen = min(horizon, problem.oracle_horizon)
        elif problem.has_oscillatory_integrals:
            chosen = min(horizon, self.t_osc)
        else:
            chosen = horizon
        if chosen <= problem.t0:
            raise ConfigError(f"oracle horizon {chosen:g} must exceed t0={problem.t0:g}")
        return float(chosen)

    def to_json(self) -> dict:
        doc = asdict(self)
        doc["params"] = {name: [complex(v).real, complex(v).imag] for name, v in sorted((self.params or {}).items())}
        doc["eps_menu"] = list(self.eps_menu)
        return doc


DEFAULTS: dict[str, Any] = {f.name: f.default for f in fields(AnalysisConfig)}
DEFAULTS["params"] = {}

_POSITIVE = ("grid", "tol", "delta", "Delta", "band", "t1_candidates", "t_osc", "plateau",
             "vanish_factor", "warmup")
_INTEGER = ("grid", "t1_candidates")


def _load_defaults_file() -> dict:
    load_dotenv()
    path = os.environ.get(DEFAULTS_ENV)
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read {DEFAULTS_ENV} file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{DEFAULTS_ENV} file {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{DEFAULTS_ENV} file {path} must hold a JSON object")
    unknown = sorted(set(data) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown keys in {path}: {', '.join(unknown)}")
    return data


def _coerce_params(raw) -> dict[str, complex]:
    params = {}
    for name, value in (raw or {}).items():
        if isinstance(value, (list, tuple)):
            if not 1 <= len(value) <= 2:
                raise ConfigError(f"parameter {name!r} must be [re] or [re, im]")
            params[name] = complex(float(value[0]), float(value[1]) if len(value) == 2 else 0.0)
        else:
            params[name] = complex(value)
    return params


def _validate(values: dict) -> dict:
    for key in _INTEGER:
        if isinstance(values[key], float) and values[key].is_integer():
            values[key] = int(values[key])
        if not isinstance(values[key], int) or isinstance(values[key], bool):
            raise ConfigError(f"{key} must be an integer, got {values[key]!r}")
    for key in _POSITIVE:
        value = values[key]
        if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
            raise ConfigError(f"{key} must be a positive number, got {value!r}")
    for key in ("t_end", "oracle_t_end"):
        value = values[key]
        if value is not None and (not isinstance(value, (int, float)) or not math.isfinite(value)):
            raise ConfigError(f"{key} must be a finite number, got {value!r}")
    if values["grid"] < 16:
        raise ConfigError("grid must have at least 16 points")
    if values["method"] not in METHODS:
        raise ConfigError(f"method must be one of {', '.join(METHODS)}")
    if values["format"] not in FORMATS:
        raise ConfigError(f"format must be one of {', '.join(FORMATS)}")
    menu = tuple(float(e) for e in values["eps_menu"])
    if not menu or any(not 0 < e <= 1.5 for e in menu):
        raise ConfigError("eps_menu entries must lie in (0, 1.5]")
    values["eps_menu"] = menu
    if values["plateau"] >= 1:
        raise ConfigError("plateau is a relative increase and must be below 1")
    return values


def resolve_config(overrides: Optional[Mapping[str, Any]] = None) -> AnalysisConfig:
    """Resolve the analysis configuration.

    Resolution order:
    1. Explicit overrides (CLI flags); None means "not given"
    2. JSON defaults file named by $RSL_DEFAULTS
    3. Built-in DEFAULTS
    """
    values = dict(DEFAULTS)
    values.update(_load_defaults_file())
    for key, value in (overrides or {}).items():
        if key not in DEFAULTS:
            raise ConfigError(f"unknown setting {key!r}")
        if value is not None:
            values[key] = value
    values["params"] = _coerce_params(values["params"])
    return AnalysisConfig(**_validate(values))


def with_params(config: AnalysisConfig, **params: complex) -> AnalysisConfig:
    merged = dict(config.params or {})
    merged.update({k: complex(v) for k, v in params.items()})
    return replace(config, params=merged)


def config_digest(config: AnalysisConfig) -> str:
    """Stable short id of the canonical config echo: cfg-{sha256[:12]}."""
    canonical = json.dumps(config.to_json(), sort_keys=True, separators=(",", ":"))
    return "cfg-" + hashlib.sha256(canonical.encode()).hexdigest()[:12]
