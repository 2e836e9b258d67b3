"""Monte Carlo experiments, metrics and the exact small-network oracle."""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import rng as seeds
from .control import MpcConfig, MpcStep, mpc_step, shift_plan
from .diffusion import DEFAULT_EPS, adoption_probability, cascade_step, update_reluctance
from .exceptions import ConfigError, OracleSizeError
from .graph import SocialNetwork, generate_watts_strogatz, load_edge_list
from .population import (
    AgentParams,
    AgentRecord,
    Population,
    PopulationState,
    Scenario,
    build_population,
    init_state,
    load_agent_records,
    synthesize_records,
)
from .qp import STATUS_OPTIMAL

logger = logging.getLogger(__name__)

MAX_ORACLE_AGENTS = 12
ORACLE_GATE = 0.02
THREADS_ENV = "NUDGECAST_THREADS"


class PolicyMode(str, Enum):
    NONE = "none"
    ONE_SIDED = "one_sided"
    EQUITY_ONLY = "equity_only"
    EQUALITY_ONLY = "equality_only"
    FAIR = "fair"

    def design(self, mpc: MpcConfig) -> MpcConfig:
        """Design settings for this mode; `mpc` carries the configured fairness weights."""
        weights = {
            PolicyMode.NONE: (0.0, 0.0),
            PolicyMode.ONE_SIDED: (0.0, 0.0),
            PolicyMode.EQUITY_ONLY: (mpc.m_equity, 0.0),
            PolicyMode.EQUALITY_ONLY: (0.0, mpc.n_equality),
            PolicyMode.FAIR: (mpc.m_equity, mpc.n_equality),
        }[self]
        return mpc.with_fairness(*weights)


@dataclass(frozen=True)
class NetworkSpec:
    """Where the influence network comes from: an edge-list file or the generator."""

    source: str = "generate"
    path: Optional[str] = None
    n: int = 112
    k: int = 4
    p_rewire: float = 0.1
    seed: int = 7

    def __post_init__(self):
        if self.source not in ("generate", "file"):
            raise ConfigError(f"network.source must be 'generate' or 'file', got {self.source!r}")
        if self.source == "file" and not self.path:
            raise ConfigError("network.path is required when network.source is 'file'")


@dataclass(frozen=True)
class AgentSpec:
    """Where agent records come from: a CSV file or the synthetic generator."""

    source: str = "synthetic"
    path: Optional[str] = None
    n_seeds: int = 3

    def __post_init__(self):
        if self.source not in ("synthetic", "file"):
            raise ConfigError(f"agents.source must be 'synthetic' or 'file', got {self.source!r}")
        if self.source == "file" and not self.path:
            raise ConfigError("agents.path is required when agents.source is 'file'")
        if self.n_seeds < 1:
            raise ConfigError(f"agents.n_seeds must be >= 1, got {self.n_seeds}")


@dataclass(frozen=True)
class ExperimentConfig:
    network: NetworkSpec = field(default_factory=NetworkSpec)
    agents: AgentSpec = field(default_factory=AgentSpec)
    scenario: Scenario = Scenario.ND
    policy: PolicyMode = PolicyMode.ONE_SIDED
    T: int = 11
    n_runs: int = 10
    base_seed: int = 42
    eps: float = DEFAULT_EPS
    out_dir: str = "nudgecast-results"
    mpc: MpcConfig = field(default_factory=lambda: MpcConfig(m_equity=10.0, n_equality=10.0))

    def __post_init__(self):
        if int(self.T) != self.T or self.T < 1:
            raise ConfigError(f"T must be an integer >= 1, got {self.T}")
        if int(self.n_runs) != self.n_runs or self.n_runs < 1:
            raise ConfigError(f"n_runs must be an integer >= 1, got {self.n_runs}")
        if not 0.0 < self.eps < 0.5:
            raise ConfigError(f"eps must lie in (0, 1/2), got {self.eps}")
        if self.base_seed < 0:
            raise ConfigError(f"base_seed must be nonnegative, got {self.base_seed}")

    @property
    def design(self) -> MpcConfig:
        return self.policy.design(self.mpc)


@dataclass(frozen=True)
class RunResult:
    """Trajectories of one closed-loop run."""

    gamma: np.ndarray  # (T+1,)
    policy_matrix: np.ndarray  # (T, N)
    rho_matrix: np.ndarray  # (T+1, N)
    x_matrix: np.ndarray  # (T+1, N)
    seed: int
    solver_warnings: int = 0

    @property
    def effort(self) -> float:
        """Total policy spent over the run."""
        return float(self.policy_matrix.sum())


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    runs: Tuple[RunResult, ...]
    gamma_mean: np.ndarray
    gamma_std: np.ndarray
    u_bar: np.ndarray
    policy_dispersion: np.ndarray
    rho_dispersion: np.ndarray
    effort_mean: float
    group_gamma: Dict[str, float]

    @property
    def run_seeds(self) -> List[int]:
        return [run.seed for run in self.runs]

    @property
    def heatmap_run(self) -> int:
        """Index of the run whose final adoption rate is the (lower) median."""
        order = sorted(range(len(self.runs)), key=lambda i: (self.runs[i].gamma[-1], i))
        return order[(len(order) - 1) // 2]


@dataclass(frozen=True)
class OracleReport:
    exact: np.ndarray
    estimate: np.ndarray
    n_runs: int

    @property
    def gaps(self) -> np.ndarray:
        return np.abs(self.estimate - self.exact)

    @property
    def max_gap(self) -> float:
        return float(np.max(self.gaps))

    @property
    def passed(self) -> bool:
        return self.max_gap <= ORACLE_GATE


def thread_cap() -> int:
    """Run-level worker count from NUDGECAST_THREADS (default 1)."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


def build_network(spec: NetworkSpec) -> SocialNetwork:
    if spec.source == "file":
        return load_edge_list(spec.path)
    net = generate_watts_strogatz(spec.n, spec.k, spec.p_rewire, spec.seed)
    logger.info(f"Generated Watts-Strogatz network: {net.n_agents} agents, {net.n_edges} edges")
    return net


def build_records(spec: AgentSpec, n_agents: int, base_seed: int) -> List[AgentRecord]:
    if spec.source == "file":
        records = load_agent_records(spec.path)
        if len(records) != n_agents:
            raise ConfigError(
                f"{spec.path} has {len(records)} agents but the network has {n_agents}"
            )
        return records
    return synthesize_records(n_agents, spec.n_seeds, seeds.record_rng(base_seed))


def prepare(cfg: ExperimentConfig) -> Tuple[SocialNetwork, Population]:
    """Network and scenario population of an experiment.

    Parameters are sampled once from the base seed's parameter stream and shared by all
    runs, so configurations that differ only in scenario or policy stay paired.
    """
    net = build_network(cfg.network)
    records = build_records(cfg.agents, net.n_agents, cfg.base_seed)
    population = build_population(records, cfg.scenario, seeds.param_rng(cfg.base_seed))
    return net, population


def run_simulation(
    net: SocialNetwork,
    params: Union[Population, Sequence[AgentParams]],
    cfg: ExperimentConfig,
    run_seed: int,
    schedule: Optional[np.ndarray] = None,
) -> RunResult:
    """One closed-loop run of T steps.

    Each step: (1) policy from the MPC (zero in mode none, or the row of a fixed
    open-loop `schedule`), (2) reluctance update, (3) cascade with fresh thresholds
    drawn from the (run_seed, step) stream, (4) record.

    Args:
        net: Influence network.
        params: Agent parameters.
        cfg: Experiment settings (T, policy mode, MPC settings, eps).
        run_seed: Seed of this run.
        schedule: Optional (T, N) open-loop policy; adopters still receive zero.

    Returns:
        RunResult with adoption, policy and reluctance trajectories.
    """
    population = params if isinstance(params, Population) else None
    b = population.b if population is not None else np.array([a.b for a in params])
    design = cfg.design
    T = int(cfg.T)

    state = init_state(params)
    n = state.n_agents
    gamma = np.empty(T + 1)
    policy_matrix = np.zeros((T, n))
    rho_matrix = np.empty((T + 1, n))
    x_matrix = np.empty((T + 1, n), dtype=np.int8)
    gamma[0], rho_matrix[0], x_matrix[0] = state.adoption_rate, state.rho, state.x
    warnings = 0
    previous: Optional[MpcStep] = None

    for t in range(T):
        if schedule is not None:
            u = np.where(state.x == 1, 0.0, np.asarray(schedule[t], dtype=float))
        elif cfg.policy == PolicyMode.NONE or len(state.non_adopters) == 0:
            u = np.zeros(n)
        else:
            warm = None if previous is None else shift_plan(previous, design.L, state.non_adopters)
            step = mpc_step(state, params, design, warm_start=warm)
            if step.solution is not None and step.solution.status != STATUS_OPTIMAL:
                warnings += 1
                logger.warning(
                    f"run seed {run_seed}, step {t}: solver status {step.solution.status} "
                    f"after {step.solution.iterations} iterations; using best iterate"
                )
            u = step.policy
            previous = step

        rho = update_reluctance(state.rho, b, u)
        state = PopulationState(x=state.x, rho=rho, t=state.t)
        state = cascade_step(net, state, params, cfg.eps, seeds.step_rng(run_seed, t))

        policy_matrix[t] = u
        gamma[t + 1], rho_matrix[t + 1], x_matrix[t + 1] = state.adoption_rate, state.rho, state.x

    return RunResult(
        gamma=gamma,
        policy_matrix=policy_matrix,
        rho_matrix=rho_matrix,
        x_matrix=x_matrix,
        seed=int(run_seed),
        solver_warnings=warnings,
    )


class MonteCarloRunner:
    """Runs independent Monte Carlo repetitions on a thread pool."""

    def __init__(self, max_workers: Optional[int] = None):
        """
        Initialize the runner.

        Args:
            max_workers: Worker threads; defaults to NUDGECAST_THREADS or 1
        """
        self.max_workers = max_workers or thread_cap()
        self.executor = ThreadPoolExecutor(max_workers=self.max_workers)

    def run(
        self,
        net: SocialNetwork,
        population: Population,
        cfg: ExperimentConfig,
        schedule: Optional[np.ndarray] = None,
    ) -> List[RunResult]:
        """Run `cfg.n_runs` repetitions; results are in run-index order."""
        run_seeds = [seeds.run_seed(cfg.base_seed, i) for i in range(cfg.n_runs)]
        if self.max_workers == 1:
            return [run_simulation(net, population, cfg, s, schedule) for s in run_seeds]
        futures = [
            self.executor.submit(run_simulation, net, population, cfg, s, schedule)
            for s in run_seeds
        ]
        return [f.result() for f in futures]

    def shutdown(self) -> None:
        self.executor.shutdown(wait=True)

    def __enter__(self) -> "MonteCarloRunner":
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()


def run_experiment(
    cfg: ExperimentConfig,
    net: Optional[SocialNetwork] = None,
    population: Optional[Population] = None,
    max_workers: Optional[int] = None,
) -> ExperimentResult:
    """Run all Monte Carlo repetitions of `cfg` and aggregate them.

    Args:
        cfg: Experiment configuration.
        net: Network to use instead of building it from `cfg.network`.
        population: Population to use instead of building it from `cfg`.
        max_workers: Worker threads (default NUDGECAST_THREADS or 1).

    Returns:
        ExperimentResult with per-run trajectories and aggregate metrics.
    """
    if net is None or population is None:
        built_net, built_population = prepare(cfg)
        net = built_net if net is None else net
        population = built_population if population is None else population

    logger.info(
        f"Running {cfg.n_runs} runs: scenario {cfg.scenario.name}, policy {cfg.policy.value}, "
        f"T={cfg.T}, {net.n_agents} agents"
    )
    with MonteCarloRunner(max_workers) as runner:
        runs = runner.run(net, population, cfg)
    result = aggregate(cfg, runs, population)
    logger.info(
        f"Finished: mean final adoption {result.gamma_mean[-1]:.4f} "
        f"(std {result.gamma_std[-1]:.4f}), mean effort {result.effort_mean:.3f}"
    )
    return result


def aggregate(
    cfg: ExperimentConfig, runs: Sequence[RunResult], population: Population
) -> ExperimentResult:
    """Sequential reduction of run results in run-index order."""
    gammas = np.array([run.gamma for run in runs])
    policies = np.array([run.policy_matrix for run in runs])

    rho_dispersion = np.array(
        [
            [_non_adopter_variance(run.rho_matrix[t], run.x_matrix[t]) for t in range(cfg.T + 1)]
            for run in runs
        ]
    )
    discriminated = population.discriminated
    group_gamma = {
        "discriminated": _group_rate(runs, discriminated),
        "non_discriminated": _group_rate(runs, ~discriminated),
    }
    return ExperimentResult(
        config=cfg,
        runs=tuple(runs),
        gamma_mean=gammas.mean(axis=0),
        gamma_std=gammas.std(axis=0),
        u_bar=policies.mean(axis=2).mean(axis=0),
        policy_dispersion=policies.std(axis=2).mean(axis=0),
        rho_dispersion=rho_dispersion.mean(axis=0),
        effort_mean=float(np.mean([run.effort for run in runs])),
        group_gamma=group_gamma,
    )


def exact_markov_oracle(
    net: SocialNetwork,
    params: Union[Population, Sequence[AgentParams]],
    T: int,
    eps: float = DEFAULT_EPS,
    schedule: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Exact expected adoption fraction by propagating the law of the adopter set.

    From adopter set S each non-adopter adopts independently with probability
    I_theta(alpha, beta) at its influence under S. Reluctances follow the optional
    open-loop `schedule` deterministically, applied before each cascade as in
    `run_simulation`.

    Args:
        net: Network with at most MAX_ORACLE_AGENTS agents.
        params: Agent parameters.
        T: Number of steps.
        eps: Reluctance clamp margin.
        schedule: Optional (T, N) policy schedule.

    Returns:
        Expected Gamma(t) for t = 0..T.
    """
    n = net.n_agents
    if n > MAX_ORACLE_AGENTS:
        raise OracleSizeError(f"exact oracle supports at most {MAX_ORACLE_AGENTS} agents, got {n}")

    agents = list(params)
    gammas = np.array([a.gamma for a in agents])
    b = np.array([a.b for a in agents])
    rho = np.array([a.rho0 for a in agents], dtype=float)
    start = sum(1 << v for v, a in enumerate(agents) if a.is_seed)

    n_states = 1 << n
    masks = np.arange(n_states)
    bits = (masks[:, None] >> np.arange(n)) & 1  # (2^n, n)
    theta = (bits * gammas) @ net.adjacency_matrix.toarray() / net.degrees
    theta = np.clip(theta, 0.0, 1.0)
    sizes = bits.sum(axis=1)
    subsets = {k: (np.arange(1 << k)[:, None] >> np.arange(k)) & 1 for k in range(n + 1)}

    dist = np.zeros(n_states)
    dist[start] = 1.0
    expected = np.empty(T + 1)
    expected[0] = sizes[start] / n

    for t in range(T):
        if schedule is not None:
            rho = update_reluctance(rho, b, np.asarray(schedule[t], dtype=float))
        probs = adoption_probability(theta, np.broadcast_to(rho, theta.shape), eps)
        new = np.zeros(n_states)
        for s in np.flatnonzero(dist):
            free = np.flatnonzero(bits[s] == 0)
            if len(free) == 0:
                new[s] += dist[s]
                continue
            p = probs[s, free]
            outcome = subsets[len(free)]
            weight = np.prod(np.where(outcome == 1, p, 1.0 - p), axis=1)
            targets = s | (outcome @ (1 << free))
            np.add.at(new, targets, dist[s] * weight)
        dist = new
        expected[t + 1] = float(dist @ sizes) / n

    return expected


def compare_with_oracle(
    cfg: ExperimentConfig,
    net: SocialNetwork,
    population: Population,
    schedule: Optional[np.ndarray] = None,
    max_workers: Optional[int] = None,
) -> OracleReport:
    """Monte Carlo adoption curve of `cfg.n_runs` runs against the exact oracle."""
    exact = exact_markov_oracle(net, population, cfg.T, cfg.eps, schedule)
    with MonteCarloRunner(max_workers) as runner:
        runs = runner.run(net, population, cfg, schedule)
    estimate = np.mean([run.gamma for run in runs], axis=0)
    return OracleReport(exact=exact, estimate=estimate, n_runs=cfg.n_runs)


def _non_adopter_variance(rho: np.ndarray, x: np.ndarray) -> float:
    free = rho[x == 0]
    return float(free.var()) if len(free) else 0.0


def _group_rate(runs: Sequence[RunResult], mask: np.ndarray) -> float:
    if not mask.any():
        return 0.0
    return float(np.mean([run.x_matrix[-1][mask].mean() for run in runs]))
