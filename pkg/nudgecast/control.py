"""Fairness-aware receding-horizon nudging policy.

Only non-adopters carry decision variables. Their reluctance dynamics are scalar with
unit drift, rho(k+1) = rho(k) + b*u(k), so the states are eliminated exactly and the
policy is the first step of a condensed QP over `n_free * L` inputs:

    J = sum_{k<L} [q|rho(k)|^2 + r|u(k)|^2] + delta * rho(L)'P rho(L)
        + m_equity * sum_{k=1..L} |C rho(k)|^2 + n_equality * sum_{k<L} |C u(k)|^2

with C the centering operator over non-adopters, 0 <= u <= 1 and a per-step budget.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np

from .exceptions import ConfigError, ParameterError
from .population import AgentParams, Population, PopulationState
from .qp import QpProblem, QpSolution, project_box_budget, solve_qp

logger = logging.getLogger(__name__)

B_MIN = 1e-3  # receptivities in (-B_MIN, 0] use the terminal weight of -B_MIN


@dataclass(frozen=True)
class MpcConfig:
    """Horizon, budget and weights of the policy design problem."""

    L: int = 10
    budget: float = 50.0
    q: float = 1.0
    r: float = 1.0
    delta: float = 2.0
    m_equity: float = 0.0
    n_equality: float = 0.0
    solver_tol: float = 1e-6
    max_iter: int = 20000

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise ConfigError(f"mpc.L must be an integer >= 1, got {self.L}")
        if not self.budget > 0:
            raise ConfigError(f"mpc.budget must be positive, got {self.budget}")
        if not self.q > 0 or not self.r > 0:
            raise ConfigError(f"mpc.q and mpc.r must be positive, got q={self.q}, r={self.r}")
        if not self.delta >= 1:
            raise ConfigError(f"mpc.delta must be >= 1, got {self.delta}")
        if self.m_equity < 0 or self.n_equality < 0:
            raise ConfigError("mpc.m_equity and mpc.n_equality must be nonnegative")
        if not self.solver_tol > 0 or self.max_iter < 1:
            raise ConfigError("mpc.solver_tol must be positive and mpc.max_iter >= 1")

    def with_fairness(self, m_equity: float, n_equality: float) -> "MpcConfig":
        return replace(self, m_equity=m_equity, n_equality=n_equality)


@dataclass(frozen=True)
class MpcStep:
    """Outcome of one receding-horizon step."""

    policy: np.ndarray
    free: np.ndarray
    solution: Optional[QpSolution]

    def plan(self, horizon: int) -> Optional[np.ndarray]:
        """Optimal inputs as an (L, n_free) array, or None if nothing was solved."""
        if self.solution is None:
            return None
        return self.solution.u_star.reshape(horizon, len(self.free))


def solve_scalar_dare(q: float, r: float, b: float) -> float:
    """Positive root of the scalar DARE for rho+ = rho + b*u.

    p = q + p - p^2 b^2 / (r + b^2 p), i.e. p = (q b^2 + sqrt(q^2 b^4 + 4 q r b^2)) / (2 b^2).
    Receptivities closer to zero than B_MIN are evaluated at -B_MIN.
    """
    if not q > 0 or not r > 0:
        raise ParameterError(f"q and r must be positive, got q={q}, r={r}")
    if not -1.0 <= b <= 0.0:
        raise ParameterError(f"receptivity must lie in [-1, 0], got {b}")
    b = min(b, -B_MIN)
    b2 = b * b
    return (q * b2 + np.sqrt(q * q * b2 * b2 + 4.0 * q * r * b2)) / (2.0 * b2)


def dare_residual(q: float, r: float, b: float, p: float) -> float:
    return abs(p * p * b * b / (r + b * b * p) - q)


def assemble_qp(
    rho_now: np.ndarray, b_free: np.ndarray, cfg: MpcConfig, p_diag: np.ndarray
) -> QpProblem:
    """Condensed QP for the current non-adopters.

    Variables are step-major: index k*n_free + i is u_i(k). The objective is returned as
    z'Hz + g'z + c.

    Args:
        rho_now: Current reluctances of the non-adopters.
        b_free: Their receptivities.
        cfg: Horizon, budget and weights.
        p_diag: Terminal weights, one per non-adopter.

    Returns:
        QpProblem with box [0, 1] and one budget row per step.
    """
    rho_now = np.asarray(rho_now, dtype=float)
    b_free = np.asarray(b_free, dtype=float)
    p_diag = np.asarray(p_diag, dtype=float)
    n = len(rho_now)
    if n == 0:
        raise ParameterError("no non-adopters: skip the policy step when everyone adopted")
    if len(b_free) != n or len(p_diag) != n:
        raise ParameterError("rho_now, b_free and p_diag must have equal length")

    L = int(cfg.L)
    steps = np.arange(L)
    centering = np.eye(n) - np.full((n, n), 1.0 / n)
    B = np.diag(b_free)

    # rho(k) = rho_now + G_k z with G_k = [B .. B (k blocks), 0 ..]; sums of G_k'WG_k
    # reduce to Kronecker products with counts of k exceeding both block indices.
    last = np.maximum.outer(steps, steps)
    stage_count = (L - 1 - last).astype(float)  # k in [0, L-1]
    equity_count = (L - last).astype(float)  # k in [1, L]

    hessian = cfg.r * np.eye(n * L)
    hessian += cfg.n_equality * np.kron(np.eye(L), centering)
    hessian += cfg.q * np.kron(stage_count, B @ B)
    hessian += cfg.delta * np.kron(np.ones((L, L)), B @ np.diag(p_diag) @ B)
    hessian += cfg.m_equity * np.kron(equity_count, B @ centering @ B)
    hessian = 0.5 * (hessian + hessian.T)

    linear = 2.0 * (
        cfg.q * np.kron(L - 1.0 - steps, B @ rho_now)
        + cfg.delta * np.kron(np.ones(L), B @ (p_diag * rho_now))
        + cfg.m_equity * np.kron(L - steps.astype(float), B @ centering @ rho_now)
    )

    centered = centering @ rho_now
    constant = (
        L * cfg.q * float(rho_now @ rho_now)
        + cfg.delta * float(rho_now @ (p_diag * rho_now))
        + L * cfg.m_equity * float(centered @ centered)
    )

    return QpProblem(
        n_free=n,
        horizon=L,
        hessian=hessian,
        linear=linear,
        constant=constant,
        lower=np.zeros(n * L),
        upper=np.ones(n * L),
        budget_rows=np.kron(np.eye(L), np.ones((1, n))),
        budget=float(cfg.budget),
    )


def mpc_step(
    state: PopulationState,
    params: Union[Population, Sequence[AgentParams]],
    cfg: MpcConfig,
    warm_start: Optional[np.ndarray] = None,
) -> MpcStep:
    """First-step policy of the receding-horizon problem at `state`.

    Args:
        state: Current adoption bits and reluctances.
        params: Agent parameters (receptivities are used).
        cfg: Design problem settings.
        warm_start: Optional (L, n_free) initial plan for the current non-adopters.

    Returns:
        MpcStep with a policy over all agents: zero for adopters, budget-feasible.
    """
    n_agents = state.n_agents
    free = state.non_adopters
    policy = np.zeros(n_agents)
    if len(free) == 0:
        return MpcStep(policy=policy, free=free, solution=None)

    b_all = params.b if isinstance(params, Population) else np.array([a.b for a in params])
    b_free = b_all[free]
    p_diag = np.array([solve_scalar_dare(cfg.q, cfg.r, b) for b in b_free])
    problem = assemble_qp(state.rho[free], b_free, cfg, p_diag)

    start = None if warm_start is None else np.asarray(warm_start, dtype=float).ravel()
    solution = solve_qp(problem, tol=cfg.solver_tol, max_iter=cfg.max_iter, warm_start=start)
    logger.debug(
        f"t={state.t}: QP dim {problem.dim} ({len(free)} non-adopters), "
        f"{solution.iterations} iterations, status {solution.status}"
    )

    first = project_box_budget(solution.u_star[: len(free)], cfg.budget)
    policy[free] = first
    return MpcStep(policy=policy, free=free, solution=solution)


def shift_plan(previous: MpcStep, horizon: int, free_now: np.ndarray) -> Optional[np.ndarray]:
    """Warm start: previous plan shifted one step, restricted to agents still free."""
    plan = previous.plan(horizon)
    if plan is None or len(free_now) == 0:
        return None
    shifted = np.vstack([plan[1:], plan[-1:]])
    keep = np.isin(previous.free, free_now)
    return shifted[:, keep]
