import copy
import json
import logging
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from .control import MpcConfig
from .exceptions import ConfigError
from .harness import AgentSpec, ExperimentConfig, NetworkSpec, PolicyMode
from .population import Scenario

logger = logging.getLogger(__name__)

CONFIG_DIR = Path.home() / ".nudgecast"
CONFIG_FILE = CONFIG_DIR / "config.json"

DEFAULT_CONFIG = {
    "network": {
        "source": "generate",  # 'generate' or 'file'
        "path": None,  # edge list when source is 'file'
        "n": 112,
        "k": 4,
        "p_rewire": 0.1,
        "seed": 7,
    },
    "agents": {
        "source": "synthetic",  # 'synthetic' or 'file'
        "path": None,  # agent-record CSV when source is 'file'
        "n_seeds": 3,
    },
    "scenario": "nd",  # 'nd', 'cd', 'rd', 'crd'
    "policy": "one_sided",  # 'none', 'one_sided', 'equity_only', 'equality_only', 'fair'
    "T": 11,
    "n_runs": 10,
    "base_seed": 42,
    "eps": 1e-6,
    "out_dir": "nudgecast-results",
    "mpc": {
        "L": 10,
        "budget": 50.0,
        "q": 1.0,
        "r": 1.0,
        "delta": 2.0,
        "m_equity": 10.0,  # used by equity_only and fair
        "n_equality": 10.0,  # used by equality_only and fair
        "solver_tol": 1e-6,
        "max_iter": 20000,
    },
}

# CLI spellings of policy modes
POLICY_ALIASES = {
    "one-sided": PolicyMode.ONE_SIDED,
    "equity": PolicyMode.EQUITY_ONLY,
    "equality": PolicyMode.EQUALITY_ONLY,
}


def load_config(config_path: Optional[str] = None) -> Dict[str, Any]:
    """Load configuration from file or return defaults.

    Sections are merged key by key over DEFAULT_CONFIG.

    Args:
        config_path: Optional path to a config file; it must exist and parse.

    Returns:
        Configuration dictionary.
    """
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        config = merge_config(DEFAULT_CONFIG, _read_json(path))
        logger.info(f"Loaded config from {path}")
        return config

    if CONFIG_FILE.exists():
        try:
            config = merge_config(DEFAULT_CONFIG, _read_json(CONFIG_FILE))
            logger.info(f"Loaded config from {CONFIG_FILE}")
            return config
        except ConfigError as e:
            logger.warning(f"Failed to load config from {CONFIG_FILE}: {e}")

    logger.info("Using default configuration")
    return copy.deepcopy(DEFAULT_CONFIG)


def save_config(config: Dict[str, Any], config_path: Optional[str] = None) -> Path:
    """Save configuration to file.

    Args:
        config: Configuration dictionary.
        config_path: Optional path to save. Uses default location if not provided.
    """
    target_path = Path(config_path) if config_path else CONFIG_FILE
    target_path.parent.mkdir(parents=True, exist_ok=True)

    try:
        with open(target_path, "w") as f:
            json.dump(config, f, indent=2)
        logger.info(f"Saved config to {target_path}")
    except OSError as e:
        logger.error(f"Failed to save config: {e}")
        raise
    return target_path


def create_default_config(config_path: Optional[str] = None) -> Optional[Path]:
    """Create default config file if it doesn't exist; returns its path when created."""
    target = Path(config_path) if config_path else CONFIG_FILE
    if target.exists():
        return None
    return save_config(DEFAULT_CONFIG, str(target))


def merge_config(base: Mapping[str, Any], user: Mapping[str, Any]) -> Dict[str, Any]:
    """User values over `base`; unknown keys are rejected, sections merge key by key."""
    merged = copy.deepcopy(dict(base))
    for key, value in user.items():
        if key not in merged:
            raise ConfigError(f"unknown config key: {key!r}")
        if isinstance(merged[key], dict):
            if not isinstance(value, Mapping):
                raise ConfigError(f"config section {key!r} must be an object")
            merged[key] = merge_config(merged[key], value)
        else:
            merged[key] = value
    return merged


def apply_overrides(config: Mapping[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
    """Apply overrides over `config`. Keys are top-level names or dotted `section.key`.

    None values are skipped, so unset CLI flags leave the file value in place.
    """
    updated = copy.deepcopy(dict(config))
    for key, value in overrides.items():
        if value is None:
            continue
        section, _, name = key.rpartition(".")
        target = updated
        if section:
            if not isinstance(updated.get(section), dict):
                raise ConfigError(f"unknown config section in override: {key!r}")
            target = updated[section]
        if name not in target or isinstance(target[name], dict):
            raise ConfigError(f"override does not name a config field: {key!r}")
        target[name] = value
    return updated


def parse_policy(value: str) -> PolicyMode:
    if value in POLICY_ALIASES:
        return POLICY_ALIASES[value]
    try:
        return PolicyMode(value)
    except ValueError:
        raise ConfigError(f"unknown policy mode: {value!r}") from None


def parse_scenario(value: str) -> Scenario:
    try:
        return Scenario(str(value).lower())
    except ValueError:
        raise ConfigError(f"unknown scenario: {value!r}") from None


def experiment_config_from_dict(config: Mapping[str, Any]) -> ExperimentConfig:
    """Typed, validated ExperimentConfig from a (merged) configuration dictionary."""
    config = merge_config(DEFAULT_CONFIG, config)
    try:
        return ExperimentConfig(
            network=NetworkSpec(**config["network"]),
            agents=AgentSpec(**config["agents"]),
            scenario=parse_scenario(config["scenario"]),
            policy=parse_policy(config["policy"]),
            T=config["T"],
            n_runs=config["n_runs"],
            base_seed=config["base_seed"],
            eps=float(config["eps"]),
            out_dir=str(config["out_dir"]),
            mpc=MpcConfig(**config["mpc"]),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid config value: {e}") from e


def experiment_config_to_dict(cfg: ExperimentConfig) -> Dict[str, Any]:
    """Plain dictionary in the config-file layout; inverse of `experiment_config_from_dict`."""
    return {
        "network": asdict(cfg.network),
        "agents": asdict(cfg.agents),
        "scenario": cfg.scenario.value,
        "policy": cfg.policy.value,
        "T": cfg.T,
        "n_runs": cfg.n_runs,
        "base_seed": cfg.base_seed,
        "eps": cfg.eps,
        "out_dir": cfg.out_dir,
        "mpc": asdict(cfg.mpc),
    }


def _read_json(path: Path) -> Dict[str, Any]:
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return data
