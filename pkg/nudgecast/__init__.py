"""
nudgecast: innovation diffusion under epistemic injustice, with fairness-aware nudging.

Simulates a stochastic threshold cascade in which credibility-weighted adopter
neighbors drive adoption, and designs per-agent nudging policies with a budgeted,
receding-horizon quadratic program.

Features:
    - Beta-threshold cascade with credibility deficits
    - Four deficit scenarios (ND, CD, RD, CRD)
    - MPC nudging with equity and equality penalties
    - Seeded Monte Carlo harness and exact small-network oracle
    - CLI interface
    - Configuration management
"""

__version__ = "0.1.0"
__author__ = "Developer"
__license__ = "MIT"

from nudgecast.config import load_config, save_config  # noqa: F401
from nudgecast.harness import (  # noqa: F401
    ExperimentConfig,
    MonteCarloRunner,
    exact_markov_oracle,
    run_experiment,
    run_simulation,
)
from nudgecast.results import read_summary, write_results  # noqa: F401

__all__ = [
    "ExperimentConfig",
    "MonteCarloRunner",
    "exact_markov_oracle",
    "load_config",
    "read_summary",
    "run_experiment",
    "run_simulation",
    "save_config",
    "write_results",
]
