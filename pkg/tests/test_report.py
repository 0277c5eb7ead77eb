"""Tests for report assembly, verdict comparison and the CSV writers."""

import io
import json

import numpy as np
import pytest

from stability_lab.config import resolve_config
from stability_lab.outcomes import ALL_VANISH, ASYMPTOTIC, UNBOUNDED, UNKNOWN
from stability_lab.report import (
    MATCH,
    MISMATCH,
    NOT_APPLICABLE,
    AnalysisReport,
    SweepRow,
    compare_verdicts,
    dumps,
    format_value,
    report_id,
    sweep_document,
    to_plain,
    write_rows,
    write_sweep_csv,
    write_text,
)
from tests.fixtures import SAMPLE_CONTROL


class TestToPlain:

    def test_numpy_values(self):
        doc = to_plain({"a": np.float64(1.5), "b": np.int64(3), "c": np.array([1.0, 2.0])})
        assert doc == {"a": 1.5, "b": 3, "c": [1.0, 2.0]}
        assert type(doc["b"]) is int

    def test_bool_stays_bool(self):
        assert to_plain(np.bool_(True)) is True
        assert to_plain(False) is False

    def test_complex_becomes_pair(self):
        assert to_plain(1 + 2j) == [1.0, 2.0]

    def test_non_finite_becomes_null(self):
        assert to_plain([float("inf"), float("nan"), 1.0]) == [None, None, 1.0]

    def test_dumps_sorted_and_terminated(self):
        text = dumps({"b": 1, "a": float("inf")})
        assert text == '{\n  "a": null,\n  "b": 1\n}\n'


class TestCompareVerdicts:

    def test_match(self):
        result = compare_verdicts({"boundedness": ALL_VANISH}, {"boundedness": ALL_VANISH})
        assert result["status"] == MATCH
        assert result["fields"]["boundedness"]["status"] == MATCH

    def test_mismatch_wins(self):
        result = compare_verdicts(
            {"boundedness": ALL_VANISH, "stability": ASYMPTOTIC},
            {"boundedness": UNBOUNDED, "stability": ASYMPTOTIC},
        )
        assert result["status"] == MISMATCH

    def test_unknown_is_not_a_mismatch(self):
        result = compare_verdicts({"boundedness": ALL_VANISH}, {"boundedness": UNKNOWN})
        assert result["status"] == NOT_APPLICABLE

    def test_unknown_expectation_is_not_a_mismatch(self):
        result = compare_verdicts({"boundedness": UNKNOWN}, {"boundedness": ALL_VANISH})
        assert result["status"] == NOT_APPLICABLE

    def test_no_record(self):
        assert compare_verdicts(None, {"boundedness": ALL_VANISH}) == {"status": NOT_APPLICABLE, "fields": {}}


class TestAnalysisReport:

    @pytest.fixture
    def report(self):
        return AnalysisReport(
            problem=dict(SAMPLE_CONTROL),
            config=resolve_config(),
            horizon=40.0,
            verdict={"boundedness": ALL_VANISH, "stability": ASYMPTOTIC, "inapplicable": None},
        )

    def test_document_fields(self, report):
        doc = report.to_json()
        assert doc["schema"] == 1
        assert doc["report_id"].startswith("rpt-")
        assert doc["config_digest"].startswith("cfg-")
        assert doc["paper_comparison"]["status"] == NOT_APPLICABLE
        assert "wall_time" not in doc

    def test_wall_time_only_when_set(self, report):
        report.wall_time = 1.25
        assert report.to_json()["wall_time"] == 1.25

    def test_deterministic_text(self, report):
        assert report.dumps() == report.dumps()
        assert json.loads(report.dumps())["horizon"] == 40.0

    def test_inapplicable_flag(self, report):
        assert not report.inapplicable
        report.verdict["inapplicable"] = "NonPositiveDiscriminant"
        assert report.inapplicable

    def test_report_id_depends_on_problem(self):
        config = resolve_config()
        first = report_id({"id": "a", "p": "1", "q": "0"}, config)
        second = report_id({"id": "a", "p": "2", "q": "0"}, config)
        assert first != second
        assert first.split("-")[2] == second.split("-")[2]


class TestSweepOutput:

    def test_format_value(self):
        assert format_value(0.5) == "0.5"
        assert format_value(1 - 2j) == "1.0-2.0j"

    def test_csv(self):
        stream = io.StringIO()
        rows = [SweepRow(1.0, ALL_VANISH, ASYMPTOTIC), SweepRow(-1.0, error="boom")]
        write_sweep_csv(rows, stream)
        lines = stream.getvalue().splitlines()
        assert lines[0] == "value,boundedness,stability,oracle_boundedness,oracle_stability,error"
        assert lines[1] == "1.0,AllVanish,AsymptoticallyStable,,,"
        assert lines[2] == "-1.0,Unknown,Unknown,,,boom"

    def test_document(self):
        doc = sweep_document("const-coeff", "a", resolve_config(), [SweepRow(2 + 0j)])
        assert doc["parameter"] == "a"
        assert doc["rows"][0]["value"] == [2.0, 0.0]


class TestWriters:

    def test_rows_use_repr_floats(self):
        stream = io.StringIO()
        write_rows(stream, ("t", "v"), [(np.float64(0.1), None)])
        assert stream.getvalue() == "t,v\n0.1,\n"

    def test_write_text_to_file(self, tmp_path):
        path = tmp_path / "out.txt"
        write_text("hello\n", path, io.StringIO())
        assert path.read_text() == "hello\n"

    def test_write_text_to_stream(self):
        stream = io.StringIO()
        write_text("hello\n", None, stream)
        assert stream.getvalue() == "hello\n"
