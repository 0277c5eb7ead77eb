"""
Report assembly and writers.

Reports are JSON documents with a schema version, the echoed config and
every number the verdict was decided on. Output is deterministic: keys
are sorted, complex numbers become [re, im], non-finite floats become
null, and wall time is only written when timing is on.

CSV writers emit plot-ready tables for root traces, solution traces and
parameter sweeps.
"""

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Iterable, Optional

import numpy as np

from stability_lab.config import AnalysisConfig, config_digest
from stability_lab.outcomes import UNKNOWN

SCHEMA_VERSION = 1

ROOT_HEADER = ("t", "y", "sqrt_x", "rho_upper", "Q")
SOLUTION_HEADER = ("t", "re_phi", "im_phi", "re_dphi", "im_dphi")
SWEEP_HEADER = ("value", "boundedness", "stability", "oracle_boundedness", "oracle_stability", "error")

MATCH = "match"
MISMATCH = "mismatch"
NOT_APPLICABLE = "not-applicable"


def to_plain(obj: Any) -> Any:
    """Convert numpy scalars, arrays, tuples and complex numbers into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_plain(complex(obj).real), to_plain(complex(obj).imag)]
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def dumps(doc: Any) -> str:
    return json.dumps(to_plain(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def report_id(problem_doc: dict, config: AnalysisConfig) -> str:
    """
    Stable id of one analysis.

    Format: rpt-{problem_hash}-{config_hash}
    """
    canonical = json.dumps(to_plain(problem_doc), sort_keys=True, separators=(",", ":"))
    problem_hash = hashlib.sha256(canonical.encode()).hexdigest()[:12]
    return f"rpt-{problem_hash}-{config_digest(config)[4:]}"


# ---------------------------------------------------------------------------
# Comparisons
# ---------------------------------------------------------------------------

def _compare(expected: Optional[str], computed: Optional[str]) -> str:
    if expected in (None, UNKNOWN) or computed in (None, UNKNOWN):
        return NOT_APPLICABLE
    return MATCH if expected == computed else MISMATCH


def _overall(fields: dict[str, dict]) -> str:
    statuses = [f["status"] for f in fields.values()]
    if MISMATCH in statuses:
        return MISMATCH
    if MATCH in statuses:
        return MATCH
    return NOT_APPLICABLE


def compare_verdicts(expected: Optional[dict], computed: dict) -> dict:
    """Field-by-field comparison of a recorded verdict with a computed one.

    An Unknown computed value, or a field the record does not mention,
    is not-applicable rather than a mismatch.
    """
    if not expected:
        return {"status": NOT_APPLICABLE, "fields": {}}
    fields = {}
    for key in sorted(expected):
        fields[key] = {
            "expected": expected[key],
            "computed": computed.get(key),
            "status": _compare(expected[key], computed.get(key)),
        }
    return {"status": _overall(fields), "fields": fields}


# ---------------------------------------------------------------------------
# Report document
# ---------------------------------------------------------------------------

@dataclass
class AnalysisReport:
    problem: dict
    config: AnalysisConfig
    horizon: float
    verdict: dict
    conditions: Optional[dict] = None
    r1_trend: Optional[dict] = None
    r2_trend: Optional[dict] = None
    oracle: Optional[dict] = None
    oracle_agreement: Optional[dict] = None
    identities: Optional[dict] = None
    root_checks: Optional[dict] = None
    recorded_comparison: dict = field(default_factory=lambda: {"status": NOT_APPLICABLE, "fields": {}})
    wall_time: Optional[float] = None
    root: Optional[object] = field(default=None, repr=False)

    @property
    def inapplicable(self) -> bool:
        return self.verdict.get("inapplicable") is not None

    def to_json(self) -> dict:
        doc = {
            "schema": SCHEMA_VERSION,
            "report_id": report_id(self.problem, self.config),
            "problem": self.problem,
            "config": self.config.to_json(),
            "config_digest": config_digest(self.config),
            "horizon": self.horizon,
            "conditions": self.conditions,
            "r1_trend": self.r1_trend,
            "r2_trend": self.r2_trend,
            "verdict": self.verdict,
            "oracle": self.oracle,
            "oracle_agreement": self.oracle_agreement,
            "identities": self.identities,
            "root_checks": self.root_checks,
            "paper_comparison": self.recorded_comparison,
        }
        if self.wall_time is not None:
            doc["wall_time"] = self.wall_time
        return to_plain(doc)

    def dumps(self) -> str:
        return dumps(self.to_json())


@dataclass
class SweepRow:
    value: complex
    boundedness: str = UNKNOWN
    stability: str = UNKNOWN
    oracle_boundedness: Optional[str] = None
    oracle_stability: Optional[str] = None
    error: Optional[str] = None

    def to_json(self) -> dict:
        return to_plain({
            "value": self.value,
            "boundedness": self.boundedness,
            "stability": self.stability,
            "oracle_boundedness": self.oracle_boundedness,
            "oracle_stability": self.oracle_stability,
            "error": self.error,
        })


def format_value(value: complex) -> str:
    """Real values print as plain floats; complex ones as re+imj."""
    value = complex(value)
    if value.imag == 0:
        return repr(value.real)
    return f"{value.real!r}{value.imag:+}j"


def sweep_document(problem_id: str, parameter: str, config: AnalysisConfig, rows: list[SweepRow]) -> dict:
    return to_plain({
        "schema": SCHEMA_VERSION,
        "problem": problem_id,
        "parameter": parameter,
        "config": config.to_json(),
        "config_digest": config_digest(config),
        "rows": [row.to_json() for row in rows],
    })


# ---------------------------------------------------------------------------
# CSV writers
# ---------------------------------------------------------------------------

def _writer(stream: IO[str]):
    return csv.writer(stream, lineterminator="\n")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_rows(stream: IO[str], header: Iterable[str], rows: Iterable[Iterable]) -> None:
    writer = _writer(stream)
    writer.writerow(list(header))
    for row in rows:
        writer.writerow([_cell(v) for v in row])


def write_root_csv(root, stream: IO[str]) -> None:
    """t,y,sqrt_x,rho_upper,Q"""
    write_rows(stream, ROOT_HEADER, root.rows())


def write_solution_csv(trace, stream: IO[str]) -> None:
    """t,re_phi,im_phi,re_dphi,im_dphi"""
    write_rows(stream, SOLUTION_HEADER, trace.rows())


def write_sweep_csv(rows: list[SweepRow], stream: IO[str]) -> None:
    write_rows(stream, SWEEP_HEADER, (
        (format_value(r.value), r.boundedness, r.stability, r.oracle_boundedness, r.oracle_stability, r.error)
        for r in rows
    ))


def write_text(text: str, path: Optional[Path], stream: IO[str]) -> None:
    """Write to ``path`` when given, else to ``stream``."""
    if path is None:
        stream.write(text)
        stream.flush()
    else:
        path.write_text(text)
