"""Tests for the rsl command line."""

import json

import pytest

from stability_lab.cli import (
    EXIT_INAPPLICABLE,
    EXIT_INTEGRATOR,
    EXIT_INVALID,
    EXIT_OK,
    build_parser,
    exit_code_for,
    main,
)
from stability_lab.errors import (
    ConfigError,
    NonPositiveDiscriminant,
    QuadratureFailure,
    StepSizeUnderflow,
)
from tests.fixtures import CATALOG_IDS, SAMPLE_NEGATIVE_D

FAST = ["--grid", "1000", "--t-end", "20", "--quiet"]


# ---------------------------------------------------------------------------
# Exit codes and parser
# ---------------------------------------------------------------------------

class TestExitCodes:

    def test_mapping(self):
        assert exit_code_for(NonPositiveDiscriminant(1.0, -3)) == EXIT_INAPPLICABLE
        assert exit_code_for(StepSizeUnderflow(2.0)) == EXIT_INTEGRATOR
        assert exit_code_for(QuadratureFailure((0.0, 1.0))) == EXIT_INTEGRATOR
        assert exit_code_for(ConfigError("bad")) == EXIT_INVALID

    def test_subcommand_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_method_choices(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["analyze", "--method", "Euler"])


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

class TestCatalogCommand:

    def test_lists_every_problem(self, capsys):
        assert main(["catalog"]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        for problem_id in CATALOG_IDS:
            assert problem_id in lines
        assert "    p = lambda*t" in lines

    def test_export_then_import(self, tmp_path, capsys):
        path = tmp_path / "catalog.json"
        assert main(["catalog", "--format", "json", "--out", str(path)]) == EXIT_OK
        capsys.readouterr()
        assert main(["catalog", "--format", "json", "--import", str(path)]) == EXIT_OK
        assert capsys.readouterr().out == path.read_text()
        assert [p["id"] for p in json.loads(path.read_text())["problems"]] == CATALOG_IDS

    def test_missing_import_file(self, tmp_path, capsys):
        assert main(["catalog", "--import", str(tmp_path / "absent.json")]) == EXIT_INVALID
        assert "[Error]" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

class TestAnalyzeCommand:

    def test_inapplicable_still_writes_report(self, capsys):
        code = main(["analyze", "--problem", json.dumps(SAMPLE_NEGATIVE_D), "--no-oracle", *FAST])
        assert code == EXIT_INAPPLICABLE
        doc = json.loads(capsys.readouterr().out)
        assert doc["verdict"]["inapplicable"] == "NonPositiveDiscriminant"
        assert doc["verdict"]["location"] == 1.0

    def test_reports_are_byte_identical(self, capsys):
        argv = ["analyze", "--problem", "const-coeff", "--no-timing", *FAST]
        assert main(argv) == EXIT_OK
        first = capsys.readouterr().out
        assert main(argv) == EXIT_OK
        second = capsys.readouterr().out
        assert first == second
        doc = json.loads(first)
        assert "wall_time" not in doc
        assert doc["paper_comparison"]["status"] == "match"
        assert doc["oracle_agreement"]["status"] == "match"

    def test_param_flag(self, capsys):
        code = main(["analyze", "--problem", "const-coeff", "--param", "a=-3", "--no-oracle", *FAST])
        assert code == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert doc["verdict"]["boundedness"] == "UnboundedSolutionExists"
        assert doc["config"]["params"] == {"a": [-3.0, 0.0]}

    def test_bad_param(self, capsys):
        assert main(["analyze", "--problem", "const-coeff", "--param", "a"]) == EXIT_INVALID
        assert "--param" in capsys.readouterr().err

    def test_unknown_problem(self, capsys):
        assert main(["analyze", "--problem", "no-such-problem"]) == EXIT_INVALID

    def test_out_file(self, tmp_path, capsys):
        path = tmp_path / "report.json"
        code = main(["analyze", "--problem", "const-coeff", "--no-oracle", "--out", str(path),
                     "--grid", "1000", "--t-end", "20"])
        assert code == EXIT_OK
        assert json.loads(path.read_text())["schema"] == 1
        captured = capsys.readouterr()
        assert captured.out == ""
        assert "[Done] Report written to:" in captured.err

    def test_csv_is_root_trace(self, capsys):
        code = main(["analyze", "--problem", "const-coeff", "--no-oracle", "--format", "csv", *FAST])
        assert code == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "t,y,sqrt_x,rho_upper,Q"
        assert len(lines) > 100


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

class TestSweepCommand:

    def test_rows(self, capsys):
        code = main(["sweep", "--problem", "const-coeff", "--param-name", "a", "--values=3,-3",
                     "--no-oracle", "--format", "csv", *FAST])
        assert code == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[1].startswith("3.0,AllVanish,AsymptoticallyStable")
        assert lines[2].startswith("-3.0,UnboundedSolutionExists,Unstable")

    def test_empty_values(self, capsys):
        code = main(["sweep", "--problem", "const-coeff", "--param-name", "a", "--values", "",
                     "--format", "csv", "--quiet"])
        assert code == EXIT_OK
        assert capsys.readouterr().out == "value,boundedness,stability,oracle_boundedness,oracle_stability,error\n"

    def test_json_document(self, capsys):
        code = main(["sweep", "--problem", "const-coeff", "--param-name", "a", "--values", "3",
                     "--no-oracle", *FAST])
        assert code == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert doc["problem"] == "const-coeff"
        assert doc["rows"][0]["boundedness"] == "AllVanish"

    def test_unknown_parameter(self):
        assert main(["sweep", "--problem", "const-coeff", "--param-name", "zeta", "--values", "1",
                     "--quiet"]) == EXIT_INVALID

    def test_bad_value(self):
        assert main(["sweep", "--problem", "const-coeff", "--param-name", "a", "--values", "1,x",
                     "--quiet"]) == EXIT_INVALID


# ---------------------------------------------------------------------------
# root
# ---------------------------------------------------------------------------

class TestRootCommand:

    def test_constant_input(self, capsys):
        assert main(["root", "--x", "4", "--t-end", "5", "--grid", "100", "--quiet"]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "t,y,sqrt_x,rho_upper,Q"
        assert lines[1].split(",")[:3] == ["0.0", "2.0", "2.0"]
        for line in lines[1:]:
            assert float(line.split(",")[1]) == pytest.approx(2.0, abs=1e-9)

    def test_status_line(self, capsys):
        assert main(["root", "--x", "t", "--t0", "1", "--t-end", "10", "--grid", "200"]) == EXIT_OK
        assert "[Root]" in capsys.readouterr().err

    def test_nonpositive_input(self, capsys):
        assert main(["root", "--x", "t - 2", "--t0", "1", "--t-end", "3", "--quiet"]) == EXIT_INVALID
        assert "[Error]" in capsys.readouterr().err

    def test_empty_range(self):
        assert main(["root", "--x", "t", "--t0", "1", "--t-end", "1"]) == EXIT_INVALID

    def test_unparseable(self):
        assert main(["root", "--x", "t +", "--t-end", "2"]) == EXIT_INVALID


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------

class TestOracleCommand:

    def test_json(self, capsys):
        argv = ["oracle", "--problem", "const-coeff", "--grid", "500", "--t-end", "10", "--quiet"]
        assert main(argv) == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert doc["oracle"]["boundedness"] == "AllVanish"
        assert doc["oracle"]["horizon"] == 10.0
        assert doc["solution"]["initial"] == [[1.0, 0.0], [0.0, 0.0]]
        assert doc["solution"]["residual"] < 1e-3

    def test_csv(self, capsys):
        argv = ["oracle", "--problem", "const-coeff", "--grid", "500", "--t-end", "10",
                "--format", "csv", "--phi0", "0", "--dphi0", "1", "--quiet"]
        assert main(argv) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "t,re_phi,im_phi,re_dphi,im_dphi"
        assert lines[1] == "0.0,0.0,0.0,1.0,0.0"
