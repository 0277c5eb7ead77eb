"""Tests for configuration resolution and validation."""

import pytest

from stability_lab.coeffexpr import Problem, get_problem
from stability_lab.config import FALLBACK_HORIZON, config_digest, resolve_config, with_params
from stability_lab.errors import ConfigError
from tests.fixtures import SAMPLE_CONTROL, SAMPLE_OSCILLATORY


class TestDefaults:

    def test_built_in_values(self):
        config = resolve_config()
        assert config.grid == 4000
        assert config.tol == 1e-10
        assert config.method == "DOP853"
        assert config.params == {}
        assert config.oracle is True
        assert config.t_end is None

    def test_none_means_not_given(self):
        assert resolve_config({"grid": None}).grid == 4000

    def test_summary_line(self):
        assert str(resolve_config()).startswith("problem=ex2.1 T=auto grid=4000")


class TestResolutionOrder:

    def test_file_overrides_defaults(self, defaults_file):
        defaults_file('{"grid": 500, "tol": 1e-8}')
        config = resolve_config()
        assert config.grid == 500
        assert config.tol == 1e-8

    def test_flags_override_file(self, defaults_file):
        defaults_file('{"grid": 500, "tol": 1e-8}')
        config = resolve_config({"grid": 800})
        assert config.grid == 800
        assert config.tol == 1e-8

    def test_unknown_key_in_file(self, defaults_file):
        defaults_file('{"gird": 500}')
        with pytest.raises(ConfigError, match="gird"):
            resolve_config()

    def test_invalid_json_in_file(self, defaults_file):
        defaults_file("{grid: 500")
        with pytest.raises(ConfigError, match="not valid JSON"):
            resolve_config()

    def test_file_must_hold_object(self, defaults_file):
        defaults_file("[1, 2]")
        with pytest.raises(ConfigError):
            resolve_config()

    def test_missing_file(self, monkeypatch, tmp_path):
        monkeypatch.setenv("RSL_DEFAULTS", str(tmp_path / "absent.json"))
        with pytest.raises(ConfigError, match="cannot read"):
            resolve_config()

    def test_unknown_override(self):
        with pytest.raises(ConfigError, match="unknown setting"):
            resolve_config({"colour": "red"})


class TestValidation:

    @pytest.mark.parametrize("overrides", [
        {"grid": 0},
        {"grid": 8},
        {"grid": "many"},
        {"tol": -1.0},
        {"t_end": float("nan")},
        {"method": "Euler"},
        {"format": "xml"},
        {"plateau": 1.5},
        {"eps_menu": []},
        {"eps_menu": [2.0]},
        {"params": {"lambda": [1, 2, 3]}},
    ])
    def test_rejected(self, overrides):
        with pytest.raises(ConfigError):
            resolve_config(overrides)

    def test_integral_float_grid_coerced(self):
        config = resolve_config({"grid": 1000.0})
        assert config.grid == 1000
        assert isinstance(config.grid, int)

    def test_params_pairs(self):
        config = resolve_config({"params": {"lambda": [1, 2], "mu": 0.5}})
        assert config.params == {"lambda": 1 + 2j, "mu": 0.5 + 0j}

    def test_with_params_merges(self):
        config = with_params(resolve_config({"params": {"mu": 1}}), **{"lambda": 2})
        assert config.params == {"mu": 1, "lambda": 2}


class TestHorizons:

    def test_problem_horizon(self):
        assert resolve_config().horizon_for(get_problem("ex2.3")) == 200.0

    def test_fallback_horizon(self):
        assert resolve_config().horizon_for(Problem.from_json(SAMPLE_CONTROL)) == FALLBACK_HORIZON

    def test_explicit_horizon(self):
        assert resolve_config({"t_end": 15}).horizon_for(get_problem("ex2.3")) == 15.0

    def test_horizon_before_t0(self):
        with pytest.raises(ConfigError):
            resolve_config({"t_end": 0.5}).horizon_for(get_problem("ex2.1"))

    def test_oracle_uses_problem_cap(self):
        assert resolve_config().oracle_horizon_for(get_problem("ex2.1")) == 30.0

    def test_oracle_capped_at_t_osc_for_oscillatory_integrals(self):
        assert resolve_config().oracle_horizon_for(Problem.from_json(SAMPLE_OSCILLATORY)) == 12.0

    def test_oracle_explicit(self):
        assert resolve_config({"oracle_t_end": 5}).oracle_horizon_for(get_problem("ex2.1")) == 5.0

    def test_oracle_follows_horizon_otherwise(self):
        config = resolve_config({"t_end": 25})
        assert config.oracle_horizon_for(get_problem("const-coeff")) == 25.0


class TestDigest:

    def test_stable(self):
        assert config_digest(resolve_config()) == config_digest(resolve_config())

    def test_format(self):
        digest = config_digest(resolve_config())
        assert digest.startswith("cfg-")
        assert len(digest) == 16

    def test_changes_with_settings(self):
        assert config_digest(resolve_config()) != config_digest(resolve_config({"grid": 2000}))

    def test_echo_is_json_ready(self):
        doc = resolve_config({"params": {"lambda": [1, 2]}}).to_json()
        assert doc["params"] == {"lambda": [1.0, 2.0]}
        assert doc["eps_menu"] == [0.5, 0.25, 0.1, 0.05]
