import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from .config import (
    CONFIG_FILE,
    apply_overrides,
    create_default_config,
    experiment_config_from_dict,
    load_config,
)
from .exceptions import NetworkMismatchError, NudgecastError
from .harness import ORACLE_GATE, PolicyMode, compare_with_oracle, prepare, run_experiment
from .results import comparison_row, write_comparison, write_results

SCENARIO_CHOICES = ["nd", "cd", "rd", "crd"]
POLICY_CHOICES = ["none", "one-sided", "equity", "equality", "fair"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nudgecast",
        description="nudgecast: simulate innovation diffusion under fairness-aware MPC nudging.",
    )
    parser.add_argument(
        "--init-config",
        action="store_true",
        help=f"Create default config file ({CONFIG_FILE}) and exit",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Show verbose logging")

    config_option = argparse.ArgumentParser(add_help=False)
    config_option.add_argument(
        "--config", "-c", default=None, help=f"Path to config file (default: {CONFIG_FILE})"
    )

    run_options = argparse.ArgumentParser(add_help=False)
    run_options.add_argument("--seed", type=int, default=None, help="Base seed")
    run_options.add_argument("--runs", type=int, default=None, help="Number of Monte Carlo runs")
    run_options.add_argument("--scenario", choices=SCENARIO_CHOICES, default=None)
    run_options.add_argument("--policy", choices=POLICY_CHOICES, default=None)
    run_options.add_argument("--out", "-o", default=None, help="Output directory")
    run_options.add_argument(
        "--verbose", "-v", action="store_true", default=argparse.SUPPRESS, help="Verbose logging"
    )

    sub = parser.add_subparsers(dest="command")
    sub.add_parser(
        "simulate", parents=[config_option, run_options], help="Run an experiment, write results"
    )
    sub.add_parser(
        "oracle",
        parents=[config_option, run_options],
        help="Compare Monte Carlo adoption with the exact chain on a small network",
    )
    sub.add_parser(
        "validate", parents=[config_option, run_options], help="Check config and inputs only"
    )
    compare = sub.add_parser(
        "compare", parents=[run_options], help="Compare scenarios/policies on paired seeds"
    )
    compare.add_argument(
        "--config",
        "-c",
        action="append",
        default=None,
        help="Config file; repeat to compare several",
    )
    compare.add_argument("--scenarios", nargs="+", choices=SCENARIO_CHOICES, default=None)
    compare.add_argument("--policies", nargs="+", choices=POLICY_CHOICES, default=None)
    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        "base_seed": args.seed,
        "n_runs": args.runs,
        "scenario": args.scenario,
        "policy": args.policy,
        "out_dir": args.out,
    }


def cmd_simulate(config: Dict[str, Any]) -> int:
    cfg = experiment_config_from_dict(config)
    result = run_experiment(cfg)
    write_results(result, cfg.out_dir)
    logging.info(
        f"✓ Simulation complete: final adoption {result.gamma_mean[-1]:.4f} "
        f"± {result.gamma_std[-1]:.4f}, results in {cfg.out_dir}"
    )
    return 0


def cmd_oracle(config: Dict[str, Any]) -> int:
    """Monte Carlo against the exact chain under zero policy; exit 1 if the gate fails."""
    cfg = experiment_config_from_dict(config)
    if cfg.policy != PolicyMode.NONE:
        logging.info(f"Oracle runs use policy 'none' (config has '{cfg.policy.value}')")
        cfg = replace(cfg, policy=PolicyMode.NONE)
    net, population = prepare(cfg)
    report = compare_with_oracle(cfg, net, population)

    table = pd.DataFrame(
        {"exact": report.exact, "monte_carlo": report.estimate, "gap": report.gaps}
    )
    table.index.name = "t"
    print(table.to_string(float_format=lambda v: f"{v:.5f}"))

    if report.passed:
        logging.info(f"✓ Oracle check passed: max gap {report.max_gap:.5f} <= {ORACLE_GATE}")
        return 0
    logging.error(f"✗ Oracle check failed: max gap {report.max_gap:.5f} > {ORACLE_GATE}")
    return 1


def cmd_compare(configs: Sequence[Tuple[str, Dict[str, Any]]], out: Optional[str] = None) -> int:
    """Run each labelled config on the same network and tabulate final adoption and dispersion."""
    rows = []
    reference = None
    for label, config in configs:
        cfg = experiment_config_from_dict(config)
        net, population = prepare(cfg)
        if reference is None:
            reference = net
        elif net != reference:
            raise NetworkMismatchError(f"config {label!r} uses a different network")
        result = run_experiment(cfg, net=net, population=population)
        rows.append(comparison_row(label, result))

    table = pd.DataFrame(rows)
    print(table.to_string(index=False, float_format=lambda v: f"{v:.4f}"))
    if out:
        write_comparison(table, out)
    logging.info(f"✓ Compared {len(rows)} configurations")
    return 0


def cmd_validate(config: Dict[str, Any]) -> int:
    """Build the config, network and population without running or writing anything."""
    cfg = experiment_config_from_dict(config)
    net, population = prepare(cfg)
    logging.info(
        f"✓ Config valid: {net.n_agents} agents, {net.n_edges} edges, "
        f"{int(population.is_seed.sum())} seeds, scenario {cfg.scenario.name}, "
        f"policy {cfg.policy.value}"
    )
    return 0


def expand_compare(args: argparse.Namespace) -> List[Tuple[str, Dict[str, Any]]]:
    """Configs to compare: every --config crossed with --scenarios and --policies."""
    paths = args.config or [None]
    overrides = overrides_from_args(args)
    expanded = []
    for path in paths:
        base = apply_overrides(load_config(path), overrides)
        name = Path(path).stem if path else "default"
        scenarios = args.scenarios or [base["scenario"]]
        policies = args.policies or [base["policy"]]
        for scenario in scenarios:
            for policy in policies:
                config = apply_overrides(base, {"scenario": scenario, "policy": policy})
                expanded.append((f"{name}:{scenario}:{policy}", config))
    return expanded


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s [%(levelname)s] %(message)s",
    )

    # Handle config initialization
    if args.init_config:
        created = create_default_config()
        if created:
            print(f"Created default config at {created}")
        else:
            print(f"Config already exists at {CONFIG_FILE}")
        return 0

    if not args.command:
        parser.error("a subcommand is required: simulate, oracle, compare or validate")
    if args.runs is not None and args.runs < 1:
        parser.error("--runs must be at least 1")

    try:
        if args.command == "compare":
            return cmd_compare(expand_compare(args), args.out)

        config = apply_overrides(load_config(args.config), overrides_from_args(args))
        if args.command == "simulate":
            return cmd_simulate(config)
        if args.command == "oracle":
            return cmd_oracle(config)
        return cmd_validate(config)
    except (NudgecastError, OSError) as e:
        logging.error(f"✗ {args.command} failed: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
