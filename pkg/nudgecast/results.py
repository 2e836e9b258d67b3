"""Result files of an experiment: CSV tables, the heatmap and `summary.json`."""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np
import pandas as pd

from .config import experiment_config_to_dict
from .harness import ExperimentResult

logger = logging.getLogger(__name__)

ADOPTION_FILE = "adoption.csv"
POLICY_FILE = "policy.csv"
SUMMARY_FILE = "summary.json"
HEATMAP_FILE = "heatmap.csv"
COMPARISON_FILE = "comparison.csv"

FLOAT_FORMAT = "%.17g"


def adoption_table(result: ExperimentResult) -> pd.DataFrame:
    """Long table (run, t, gamma) over all runs."""
    rows = [
        (i, t, float(g)) for i, run in enumerate(result.runs) for t, g in enumerate(run.gamma)
    ]
    return pd.DataFrame(rows, columns=["run", "t", "gamma"])


def policy_table(result: ExperimentResult) -> pd.DataFrame:
    """Long table (run, t, agent, u) over all runs."""
    frames = []
    for i, run in enumerate(result.runs):
        T, n = run.policy_matrix.shape
        frames.append(
            pd.DataFrame(
                {
                    "run": i,
                    "t": np.repeat(np.arange(T), n),
                    "agent": np.tile(np.arange(n), T),
                    "u": run.policy_matrix.ravel(),
                }
            )
        )
    return pd.concat(frames, ignore_index=True)


def heatmap_table(result: ExperimentResult) -> pd.DataFrame:
    """Agent-by-step policy of the median-adoption run; row i is agent i."""
    run = result.runs[result.heatmap_run]
    T = run.policy_matrix.shape[0]
    return pd.DataFrame(run.policy_matrix.T, columns=[f"t{t}" for t in range(T)])


def summary_dict(result: ExperimentResult) -> Dict[str, Any]:
    return {
        "gamma_mean": result.gamma_mean.tolist(),
        "gamma_std": result.gamma_std.tolist(),
        "u_bar": result.u_bar.tolist(),
        "policy_dispersion": result.policy_dispersion.tolist(),
        "rho_dispersion": result.rho_dispersion.tolist(),
        "effort_mean": float(result.effort_mean),
        "group_gamma": {k: float(v) for k, v in result.group_gamma.items()},
        "heatmap_run": int(result.heatmap_run),
        "run_seeds": [int(s) for s in result.run_seeds],
        "solver_warnings": int(sum(run.solver_warnings for run in result.runs)),
        "config": experiment_config_to_dict(result.config),
    }


def write_results(result: ExperimentResult, out_dir: Union[str, Path]) -> List[Path]:
    """
    Write adoption.csv, policy.csv, heatmap.csv and summary.json.

    Args:
        result: Experiment to serialize
        out_dir: Output directory, created if missing

    Returns:
        Paths of the written files
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    written = []
    try:
        for name, frame in (
            (ADOPTION_FILE, adoption_table(result)),
            (POLICY_FILE, policy_table(result)),
            (HEATMAP_FILE, heatmap_table(result)),
        ):
            path = out_dir / name
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
            written.append(path)

        path = out_dir / SUMMARY_FILE
        with open(path, "w") as f:
            json.dump(summary_dict(result), f, indent=2)
        written.append(path)
    except OSError as e:
        logger.error(f"Failed to write results to {out_dir}: {e}")
        raise

    logger.info(f"Wrote {len(written)} result files to {out_dir}")
    return written


def read_summary(out_dir: Union[str, Path]) -> Dict[str, Any]:
    """Load `summary.json`; aggregate series come back as numpy arrays."""
    with open(Path(out_dir) / SUMMARY_FILE, "r") as f:
        summary = json.load(f)
    for key in ("gamma_mean", "gamma_std", "u_bar", "policy_dispersion", "rho_dispersion"):
        summary[key] = np.array(summary[key], dtype=float)
    return summary


def comparison_row(label: str, result: ExperimentResult) -> Dict[str, Any]:
    """One row of the scenario/policy comparison table."""
    return {
        "config": label,
        "scenario": result.config.scenario.name,
        "policy": result.config.policy.value,
        "gamma_T_mean": float(result.gamma_mean[-1]),
        "gamma_T_std": float(result.gamma_std[-1]),
        "policy_dispersion_mean": float(np.mean(result.policy_dispersion)),
        "rho_dispersion_T": float(result.rho_dispersion[-1]),
        "effort_mean": float(result.effort_mean),
    }


def write_comparison(table: pd.DataFrame, out_dir: Union[str, Path]) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / COMPARISON_FILE
    table.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"Wrote comparison table to {path}")
    return path
