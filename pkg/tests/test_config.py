"""Tests for nudgecast.config."""

import json
from pathlib import Path
import tempfile

import pytest

from nudgecast import config as config_module
from nudgecast.config import (
    DEFAULT_CONFIG,
    apply_overrides,
    create_default_config,
    experiment_config_from_dict,
    experiment_config_to_dict,
    load_config,
    save_config,
)
from nudgecast.exceptions import ConfigError
from nudgecast.harness import PolicyMode
from nudgecast.population import Scenario


class TestDefaults:
    """Test the default configuration."""

    def test_default_config_structure(self):
        """Test default config has every experiment section."""
        sections = ["network", "agents", "scenario", "policy", "T", "n_runs", "base_seed"]
        for key in sections + ["eps", "out_dir", "mpc"]:
            assert key in DEFAULT_CONFIG

    def test_case_study_settings(self):
        """Test defaults reproduce the case-study design settings."""
        cfg = experiment_config_from_dict(DEFAULT_CONFIG)
        assert (cfg.T, cfg.n_runs) == (11, 10)
        mpc = cfg.mpc
        assert (mpc.L, mpc.budget, mpc.q, mpc.r, mpc.delta) == (10, 50.0, 1.0, 1.0, 2.0)
        assert cfg.network.n == 112
        assert cfg.agents.n_seeds == 3
        assert cfg.policy == PolicyMode.ONE_SIDED


class TestLoadSave:
    """Test reading and writing config files."""

    def test_missing_explicit_path(self):
        """Test an explicit path that does not exist raises."""
        with pytest.raises(ConfigError):
            load_config("/tmp/nonexistent_nudgecast_config_12345.json")

    def test_save_and_load(self):
        """Test a saved config loads with nested sections merged."""
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "config.json"
            path.write_text(json.dumps({"T": 5, "mpc": {"budget": 7.5}}))
            config = load_config(str(path))
            assert config["T"] == 5
            assert config["mpc"]["budget"] == 7.5
            assert config["mpc"]["L"] == DEFAULT_CONFIG["mpc"]["L"]

            out = Path(tmp) / "nested" / "saved.json"
            save_config(config, str(out))
            assert load_config(str(out)) == config

    def test_invalid_json(self, tmp_path):
        """Test unparsable files raise."""
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(str(path))

    def test_unknown_key(self, tmp_path):
        """Test unknown keys in a file raise."""
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"mpc": {"horizon": 4}}))
        with pytest.raises(ConfigError):
            load_config(str(path))

    def test_create_default_config(self, tmp_path, monkeypatch):
        """Test the default file is created once."""
        target = tmp_path / ".nudgecast" / "config.json"
        monkeypatch.setattr(config_module, "CONFIG_FILE", target)
        assert create_default_config() == target
        assert json.loads(target.read_text()) == DEFAULT_CONFIG
        assert create_default_config() is None


class TestOverrides:
    """Test override precedence and validation."""

    def test_overrides_win(self):
        """Test override values replace file values; None leaves them."""
        config = apply_overrides(
            DEFAULT_CONFIG, {"base_seed": 42, "n_runs": 1, "scenario": None, "mpc.budget": 3.0}
        )
        assert config["base_seed"] == 42
        assert config["n_runs"] == 1
        assert config["scenario"] == DEFAULT_CONFIG["scenario"]
        assert config["mpc"]["budget"] == 3.0
        assert DEFAULT_CONFIG["mpc"]["budget"] == 50.0

    @pytest.mark.parametrize("key", ["seed", "mpc.horizon", "solver.tol", "mpc"])
    def test_unknown_override(self, key):
        """Test overrides naming no config field raise."""
        with pytest.raises(ConfigError):
            apply_overrides(DEFAULT_CONFIG, {key: 1})


class TestExperimentConfigFromDict:
    """Test typed config construction."""

    def test_zero_budget_rejected(self):
        """Test B = 0 fails validation."""
        config = apply_overrides(DEFAULT_CONFIG, {"mpc.budget": 0.0})
        with pytest.raises(ConfigError):
            experiment_config_from_dict(config)

    @pytest.mark.parametrize(
        "name,mode",
        [
            ("one-sided", PolicyMode.ONE_SIDED),
            ("equity", PolicyMode.EQUITY_ONLY),
            ("equality", PolicyMode.EQUALITY_ONLY),
            ("fair", PolicyMode.FAIR),
            ("none", PolicyMode.NONE),
            ("equity_only", PolicyMode.EQUITY_ONLY),
        ],
    )
    def test_policy_names(self, name, mode):
        """Test CLI and config spellings of policy modes."""
        config = apply_overrides(DEFAULT_CONFIG, {"policy": name})
        assert experiment_config_from_dict(config).policy == mode

    def test_scenario_case_insensitive(self):
        """Test scenario names parse regardless of case."""
        config = apply_overrides(DEFAULT_CONFIG, {"scenario": "CRD"})
        assert experiment_config_from_dict(config).scenario == Scenario.CRD

    @pytest.mark.parametrize(
        "overrides", [{"policy": "greedy"}, {"scenario": "xd"}, {"T": 0}, {"T": "eleven"}]
    )
    def test_invalid_values(self, overrides):
        """Test invalid values raise ConfigError."""
        with pytest.raises(ConfigError):
            experiment_config_from_dict(apply_overrides(DEFAULT_CONFIG, overrides))

    def test_to_dict_round_trip(self):
        """Test the dictionary form rebuilds the same config."""
        config = apply_overrides(DEFAULT_CONFIG, {"policy": "fair", "scenario": "cd"})
        cfg = experiment_config_from_dict(config)
        assert experiment_config_from_dict(experiment_config_to_dict(cfg)) == cfg


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
