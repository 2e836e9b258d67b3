"""Tests for the nudgecast command line."""

import json

import numpy as np
import pandas as pd
import pytest

from nudgecast import cli
from nudgecast import config as config_module
from nudgecast.graph import generate_watts_strogatz, write_edge_list
from nudgecast.population import synthesize_records, write_agent_records
from nudgecast.results import ADOPTION_FILE, COMPARISON_FILE, POLICY_FILE, SUMMARY_FILE

TINY_CONFIG = {
    "network": {"n": 6, "k": 2, "p_rewire": 0.0, "seed": 3},
    "agents": {"n_seeds": 1},
    "T": 3,
    "n_runs": 2,
    "mpc": {"L": 2, "budget": 1.0},
}


def _write_config(tmp_path, name="tiny.json", **changes):
    config = json.loads(json.dumps(TINY_CONFIG))
    for key, value in changes.items():
        if isinstance(value, dict):
            config.setdefault(key, {}).update(value)
        else:
            config[key] = value
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return str(path)


class TestParser:
    """Test argument parsing."""

    def test_subcommand_required(self):
        """Test running without a subcommand is a usage error."""
        with pytest.raises(SystemExit) as excinfo:
            cli.main([])
        assert excinfo.value.code == 2

    def test_runs_must_be_positive(self, tmp_path):
        """Test --runs 0 is a usage error."""
        with pytest.raises(SystemExit) as excinfo:
            cli.main(["validate", "-c", _write_config(tmp_path), "--runs", "0"])
        assert excinfo.value.code == 2

    def test_unknown_policy(self):
        """Test policy choices are enforced by the parser."""
        with pytest.raises(SystemExit):
            cli.main(["simulate", "--policy", "greedy"])

    def test_overrides_from_args(self):
        """Test flags map onto config fields."""
        args = cli.build_parser().parse_args(
            ["simulate", "--seed", "42", "--runs", "1", "--policy", "fair", "-o", "out"]
        )
        assert cli.overrides_from_args(args) == {
            "base_seed": 42,
            "n_runs": 1,
            "scenario": None,
            "policy": "fair",
            "out_dir": "out",
        }


class TestValidate:
    """Test the validate command."""

    def test_valid_config(self, tmp_path):
        """Test a valid config exits 0 without writing results."""
        out = tmp_path / "results"
        assert cli.main(["validate", "-c", _write_config(tmp_path), "-o", str(out)]) == 0
        assert not out.exists()

    def test_zero_budget(self, tmp_path):
        """Test B = 0 exits 1."""
        path = _write_config(tmp_path, mpc={"budget": 0.0})
        assert cli.main(["validate", "-c", path]) == 1

    def test_missing_config(self, tmp_path):
        """Test a missing config file exits 1."""
        assert cli.main(["validate", "-c", str(tmp_path / "missing.json")]) == 1

    def test_missing_edge_list(self, tmp_path):
        """Test a network file that does not exist exits 1."""
        path = _write_config(
            tmp_path, network={"source": "file", "path": str(tmp_path / "none.txt")}
        )
        assert cli.main(["validate", "-c", path]) == 1

    def test_malformed_agent_records(self, tmp_path):
        """Test a non-numeric rho0 in the agent CSV exits 1."""
        agents = tmp_path / "agents.csv"
        agents.write_text(
            "id,rho0,education,gender_flag,age_flag,income_flag,is_seed\n0,abc,low,0,0,0,1\n"
        )
        path = _write_config(tmp_path, agents={"source": "file", "path": str(agents)})
        assert cli.main(["validate", "-c", path]) == 1


class TestSimulate:
    """Test the simulate command."""

    def test_writes_results(self, tmp_path):
        """Test the result files land in --out."""
        out = tmp_path / "out"
        assert cli.main(["simulate", "-c", _write_config(tmp_path), "-o", str(out)]) == 0
        for name in (ADOPTION_FILE, POLICY_FILE, SUMMARY_FILE):
            assert (out / name).exists()
        with open(out / SUMMARY_FILE) as f:
            summary = json.load(f)
        assert len(summary["gamma_mean"]) == TINY_CONFIG["T"] + 1

    def test_reproducible(self, tmp_path):
        """Test two invocations with the same seed write identical tables."""
        path = _write_config(tmp_path)
        first, second = tmp_path / "a", tmp_path / "b"
        for out in (first, second):
            argv = ["simulate", "-c", path, "--runs", "1", "--seed", "42", "-o", str(out)]
            assert cli.main(argv) == 0
        for name in (ADOPTION_FILE, POLICY_FILE):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_no_policy_writes_zero_policy(self, tmp_path):
        """Test --policy none produces an all-zero policy table."""
        out = tmp_path / "out"
        argv = ["simulate", "-c", _write_config(tmp_path), "--policy", "none", "-o", str(out)]
        assert cli.main(argv) == 0
        policy = pd.read_csv(out / POLICY_FILE)
        assert np.all(policy["u"] == 0.0)


class TestOracle:
    """Test the oracle command."""

    def test_too_many_agents(self, tmp_path):
        """Test networks above the oracle limit exit 1."""
        path = _write_config(tmp_path, network={"n": 13})
        assert cli.main(["oracle", "-c", path]) == 1

    def test_all_seeded_passes(self, tmp_path, capsys):
        """Test a population of initial adopters matches the oracle exactly."""
        edges = tmp_path / "ring.txt"
        agents = tmp_path / "agents.csv"
        write_edge_list(generate_watts_strogatz(4, 2, 0.0, 0), edges)
        write_agent_records(synthesize_records(4, 4, np.random.default_rng(0)), agents)
        path = _write_config(
            tmp_path,
            network={"source": "file", "path": str(edges)},
            agents={"source": "file", "path": str(agents)},
        )
        assert cli.main(["oracle", "-c", path, "--runs", "1"]) == 0
        assert "monte_carlo" in capsys.readouterr().out


class TestCompare:
    """Test the compare command."""

    def test_scenarios_table(self, tmp_path):
        """Test one row per scenario is written to comparison.csv."""
        out = tmp_path / "cmp"
        path = _write_config(tmp_path)
        argv = ["compare", "-c", path, "--scenarios", "nd", "crd", "--policy", "none"]
        assert cli.main(argv + ["-o", str(out)]) == 0
        table = pd.read_csv(out / COMPARISON_FILE)
        assert len(table) == 2
        assert list(table["config"]) == ["tiny:nd:none", "tiny:crd:none"]

    def test_network_mismatch(self, tmp_path):
        """Test configs on different networks are refused."""
        first = _write_config(tmp_path, name="a.json")
        second = _write_config(tmp_path, name="b.json", network={"n": 8})
        assert cli.main(["compare", "-c", first, "-c", second]) == 1


class TestInitConfig:
    """Test --init-config."""

    def test_creates_default(self, tmp_path, monkeypatch, capsys):
        """Test the default config is written once."""
        target = tmp_path / ".nudgecast" / "config.json"
        monkeypatch.setattr(config_module, "CONFIG_FILE", target)
        assert cli.main(["--init-config"]) == 0
        assert "Created default config" in capsys.readouterr().out
        assert json.loads(target.read_text()) == config_module.DEFAULT_CONFIG
        assert cli.main(["--init-config"]) == 0
        assert "already exists" in capsys.readouterr().out


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
