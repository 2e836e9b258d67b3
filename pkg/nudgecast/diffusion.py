"""Stochastic cascade dynamics.

Each non-adopter draws a fresh threshold from a Beta distribution whose mean equals its
current reluctance and adopts when the credibility-weighted share of adopter neighbors
reaches it. Policies never flip adoption directly; they only lower reluctance.
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy import special

from .exceptions import ParameterError
from .graph import SocialNetwork
from .population import AgentParams, Population, PopulationState

logger = logging.getLogger(__name__)

DEFAULT_EPS = 1e-6

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class ThresholdParams:
    """Beta shape parameters of an agent's threshold, computed at clamped reluctance."""

    alpha: ArrayLike
    beta: ArrayLike

    @property
    def mean(self) -> ArrayLike:
        return self.alpha / (self.alpha + self.beta)

    @property
    def is_conservative(self) -> Union[bool, np.ndarray]:
        """True where alpha > beta, i.e. reluctance above one half."""
        return self.alpha > self.beta


def beta_params(rho: ArrayLike, eps: float = DEFAULT_EPS) -> ThresholdParams:
    """Shape parameters alpha = 1/(1-rho), beta = 1/rho at rho clamped to [eps, 1-eps]."""
    if not 0.0 < eps < 0.5:
        raise ParameterError(f"eps must lie in (0, 1/2), got {eps}")
    clamped = np.clip(rho, eps, 1.0 - eps)
    alpha = 1.0 / (1.0 - clamped)
    beta = 1.0 / clamped
    if np.ndim(clamped) == 0:
        return ThresholdParams(float(alpha), float(beta))
    return ThresholdParams(alpha, beta)


def sample_threshold(
    rho: ArrayLike, eps: float, rng: np.random.Generator
) -> ArrayLike:
    """Draw thresholds phi ~ Beta(alpha(rho), beta(rho)); one independent draw per entry."""
    params = beta_params(rho, eps)
    return rng.beta(params.alpha, params.beta)


def adoption_probability(theta: ArrayLike, rho: ArrayLike, eps: float = DEFAULT_EPS) -> ArrayLike:
    """P(phi <= theta): the regularized incomplete beta function I_theta(alpha, beta)."""
    params = beta_params(rho, eps)
    theta = np.clip(theta, 0.0, 1.0)
    prob = special.betainc(params.alpha, params.beta, theta)
    prob = np.where(theta <= 0.0, 0.0, np.where(theta >= 1.0, 1.0, prob))
    return float(prob) if np.ndim(prob) == 0 else prob


def deterministic_adopts(theta: ArrayLike, rho: ArrayLike) -> Union[bool, np.ndarray]:
    """Deterministic rule theta >= rho, the Beta threshold model's mean-field counterpart."""
    return np.asarray(theta) >= np.asarray(rho)


def epistemic_influence(
    net: SocialNetwork, state: PopulationState, gammas: Sequence[float], v: int
) -> float:
    """Credibility-weighted fraction of adopter neighbors of agent `v`."""
    nbrs = net.neighbors(v)
    weighted = sum(gammas[w] * state.x[w] for w in nbrs)
    return float(weighted) / len(nbrs)


def influence_vector(net: SocialNetwork, x: np.ndarray, gammas: np.ndarray) -> np.ndarray:
    """Epistemic influence of every agent at once."""
    weighted = net.adjacency_matrix @ (np.asarray(gammas, dtype=float) * x)
    return np.clip(weighted / net.degrees, 0.0, 1.0)


def cascade_step(
    net: SocialNetwork,
    state: PopulationState,
    params: Union[Population, Sequence[AgentParams]],
    eps: float,
    rng: np.random.Generator,
) -> PopulationState:
    """One synchronous, irreversible adoption update.

    Influence is computed from the current adopter set. Thresholds for all agents are
    drawn in one call in agent-index order before any comparison, so the outcome only
    depends on `rng`.

    Args:
        net: Influence network.
        state: Current state; its reluctances parameterize the thresholds.
        params: Agent parameters (credibilities are used).
        eps: Reluctance clamp margin for the Beta parameters.
        rng: Stream for this step's threshold draws.

    Returns:
        State at t + 1 with the same reluctances.
    """
    gammas = _gammas(params)
    theta = influence_vector(net, state.x, gammas)
    phi = sample_threshold(state.rho, eps, rng)
    adopted = (state.x == 1) | (theta >= phi)
    return PopulationState(x=adopted.astype(np.int8), rho=state.rho.copy(), t=state.t + 1)


def update_reluctance(rho: ArrayLike, b: ArrayLike, u: ArrayLike) -> ArrayLike:
    """rho + b*u clamped to [0, 1]."""
    new = np.clip(np.asarray(rho, dtype=float) + np.asarray(b) * np.asarray(u), 0.0, 1.0)
    return float(new) if np.ndim(new) == 0 else new


def _gammas(params: Union[Population, Sequence[AgentParams]]) -> np.ndarray:
    if isinstance(params, Population):
        return params.gamma
    return np.array([a.gamma for a in params])
