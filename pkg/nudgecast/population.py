"""Agent parameters, initial state and the four deficit scenarios.

Reliability comes from the education level, credibility halves reliability once per
discriminated group the agent belongs to, and receptivity is either full (-1) or drawn
uniformly from [-1, 0] depending on the scenario.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Iterator, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .exceptions import AgentRecordError, EmptySeedSetError

logger = logging.getLogger(__name__)

RELIABILITY_SUPPORT = {
    "low": (0.0, 0.4),
    "medium": (0.4, 0.7),
    "high": (0.7, 1.0),
}
CREDIBILITY_FACTOR = 0.5
FULL_RECEPTIVITY = -1.0
DISCRIMINATION_RATE = 0.3  # synthetic records only

RECORD_COLUMNS = ["id", "rho0", "education", "gender_flag", "age_flag", "income_flag", "is_seed"]


class EducationLevel(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


class Scenario(str, Enum):
    """Deficit scenarios: none, credibility, receptivity, or both."""

    ND = "nd"
    CD = "cd"
    RD = "rd"
    CRD = "crd"

    @property
    def credibility_deficit(self) -> bool:
        return self in (Scenario.CD, Scenario.CRD)

    @property
    def receptivity_deficit(self) -> bool:
        return self in (Scenario.RD, Scenario.CRD)


@dataclass(frozen=True)
class GroupFlags:
    gender_discriminated: bool = False
    age_discriminated: bool = False
    income_discriminated: bool = False

    @property
    def count(self) -> int:
        return int(self.gender_discriminated) + int(self.age_discriminated) + int(
            self.income_discriminated
        )


@dataclass(frozen=True)
class AgentRecord:
    """One row of the agent-record CSV."""

    id: int
    rho0: float
    education: EducationLevel
    flags: GroupFlags = field(default_factory=GroupFlags)
    is_seed: bool = False


@dataclass(frozen=True)
class AgentParams:
    """Immutable per-agent model parameters."""

    rho0: float
    b: float
    zeta: float
    gamma: float
    education: EducationLevel
    flags: GroupFlags
    is_seed: bool

    def __post_init__(self):
        if not 0.0 <= self.rho0 <= 1.0:
            raise AgentRecordError(f"rho0 must lie in [0, 1], got {self.rho0}")
        if not -1.0 <= self.b <= 0.0:
            raise AgentRecordError(f"receptivity b must lie in [-1, 0], got {self.b}")
        if not 0.0 <= self.gamma <= self.zeta <= 1.0:
            raise AgentRecordError(
                f"need 0 <= gamma <= zeta <= 1, got gamma={self.gamma}, zeta={self.zeta}"
            )

    @property
    def deficit(self) -> float:
        """Credibility deficit zeta - gamma."""
        return self.zeta - self.gamma

    @property
    def discriminated(self) -> bool:
        return self.flags.count > 0


@dataclass(frozen=True)
class Population:
    """Sequence of AgentParams with cached array views used by the dynamics."""

    agents: Tuple[AgentParams, ...]
    scenario: Scenario

    def __len__(self) -> int:
        return len(self.agents)

    def __getitem__(self, v: int) -> AgentParams:
        return self.agents[v]

    def __iter__(self) -> Iterator[AgentParams]:
        return iter(self.agents)

    @cached_property
    def rho0(self) -> np.ndarray:
        return np.array([a.rho0 for a in self.agents])

    @cached_property
    def b(self) -> np.ndarray:
        return np.array([a.b for a in self.agents])

    @cached_property
    def zeta(self) -> np.ndarray:
        return np.array([a.zeta for a in self.agents])

    @cached_property
    def gamma(self) -> np.ndarray:
        return np.array([a.gamma for a in self.agents])

    @cached_property
    def is_seed(self) -> np.ndarray:
        return np.array([a.is_seed for a in self.agents], dtype=bool)

    @cached_property
    def discriminated(self) -> np.ndarray:
        return np.array([a.discriminated for a in self.agents], dtype=bool)


@dataclass(frozen=True)
class PopulationState:
    """Adoption bits, current reluctances and step index of one run."""

    x: np.ndarray
    rho: np.ndarray
    t: int = 0

    @property
    def n_agents(self) -> int:
        return len(self.x)

    @property
    def adoption_rate(self) -> float:
        """Gamma(t): fraction of adopters."""
        return float(np.mean(self.x))

    @property
    def adopters(self) -> np.ndarray:
        return np.flatnonzero(self.x)

    @property
    def non_adopters(self) -> np.ndarray:
        return np.flatnonzero(self.x == 0)


def sample_reliability(
    education: Union[EducationLevel, str], rng: np.random.Generator
) -> float:
    """Draw reliability uniformly from the support of the education level."""
    low, high = RELIABILITY_SUPPORT[EducationLevel(education).value]
    return float(rng.uniform(low, high))


def apply_credibility_halving(zeta: float, flags: GroupFlags) -> float:
    """Credibility: reliability halved once per discriminated group."""
    return zeta * CREDIBILITY_FACTOR**flags.count


def build_population(
    records: Sequence[AgentRecord], scenario: Union[Scenario, str], rng: np.random.Generator
) -> Population:
    """Build per-agent parameters for a scenario.

    All reliabilities are drawn first, then all receptivities, whatever the scenario,
    so two scenarios built from generators with the same seed share their draws.

    Args:
        records: Agent records in agent-index order.
        scenario: ND, CD, RD or CRD.
        rng: Parameter stream.

    Returns:
        Population of AgentParams.
    """
    scenario = Scenario(scenario)
    zetas = [sample_reliability(rec.education, rng) for rec in records]
    b_draws = rng.uniform(-1.0, 0.0, size=len(records))

    agents = []
    for rec, zeta, b_draw in zip(records, zetas, b_draws):
        _check_record(rec)
        gamma = zeta
        if scenario.credibility_deficit:
            gamma = apply_credibility_halving(zeta, rec.flags)
        b = float(b_draw) if scenario.receptivity_deficit else FULL_RECEPTIVITY
        agents.append(
            AgentParams(
                rho0=float(rec.rho0),
                b=b,
                zeta=zeta,
                gamma=gamma,
                education=EducationLevel(rec.education),
                flags=rec.flags,
                is_seed=bool(rec.is_seed),
            )
        )

    population = Population(tuple(agents), scenario)
    logger.debug(
        f"Built {scenario.name} population: {len(population)} agents, "
        f"mean gamma {np.mean(population.gamma):.3f}, mean b {np.mean(population.b):.3f}"
    )
    return population


def init_state(params: Sequence[AgentParams]) -> PopulationState:
    """Initial state: seeds adopted, reluctance at rho0, t = 0."""
    x = np.array([1 if a.is_seed else 0 for a in params], dtype=np.int8)
    if not x.any():
        raise EmptySeedSetError("seed set is empty: at least one agent must start as adopter")
    rho = np.array([a.rho0 for a in params], dtype=float)
    return PopulationState(x=x, rho=rho, t=0)


def load_agent_records(path: Union[str, Path]) -> List[AgentRecord]:
    """Read agent records from CSV.

    Header: id,rho0,education,gender_flag,age_flag,income_flag,is_seed. Rows are
    returned sorted by id; ids must be exactly 0..N-1.
    """
    try:
        frame = pd.read_csv(path, dtype={"education": str})
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise AgentRecordError(f"cannot parse agent records {path}: {e}") from e

    missing = [c for c in RECORD_COLUMNS if c not in frame.columns]
    if missing:
        raise AgentRecordError(f"{path}: missing columns {missing}")

    frame = frame.sort_values("id").reset_index(drop=True)
    if list(frame["id"]) != list(range(len(frame))):
        raise AgentRecordError(f"{path}: ids must be 0..{len(frame) - 1} without gaps")

    records = []
    for row in frame.itertuples(index=False):
        for col in ("gender_flag", "age_flag", "income_flag", "is_seed"):
            if getattr(row, col) not in (0, 1):
                raise AgentRecordError(f"{path}: agent {row.id}: {col} must be 0 or 1")
        try:
            education = EducationLevel(str(row.education).strip().lower())
        except ValueError:
            raise AgentRecordError(
                f"{path}: agent {row.id}: unknown education level {row.education!r}"
            ) from None
        try:
            rec = AgentRecord(
                id=int(row.id),
                rho0=float(row.rho0),
                education=education,
                flags=GroupFlags(bool(row.gender_flag), bool(row.age_flag), bool(row.income_flag)),
                is_seed=bool(row.is_seed),
            )
        except (TypeError, ValueError) as e:
            raise AgentRecordError(f"{path}: agent {row.id}: bad value: {e}") from e
        _check_record(rec)
        records.append(rec)

    logger.info(f"Loaded {len(records)} agent records from {path}")
    return records


def write_agent_records(records: Sequence[AgentRecord], path: Union[str, Path]) -> None:
    """Write records in the CSV format read by `load_agent_records`."""
    frame = pd.DataFrame(
        {
            "id": [r.id for r in records],
            "rho0": [r.rho0 for r in records],
            "education": [EducationLevel(r.education).value for r in records],
            "gender_flag": [int(r.flags.gender_discriminated) for r in records],
            "age_flag": [int(r.flags.age_discriminated) for r in records],
            "income_flag": [int(r.flags.income_discriminated) for r in records],
            "is_seed": [int(r.is_seed) for r in records],
        }
    )
    frame.to_csv(path, index=False, float_format="%.17g")


def synthesize_records(
    n_agents: int, n_seeds: int, rng: np.random.Generator
) -> List[AgentRecord]:
    """Synthetic agent records standing in for survey data.

    Education is uniform over the three levels, each discrimination flag is set with
    probability DISCRIMINATION_RATE, rho0 ~ Beta(2, 2), and `n_seeds` distinct agents
    are initial adopters.
    """
    if not 1 <= n_seeds <= n_agents:
        raise AgentRecordError(f"n_seeds must lie in [1, {n_agents}], got {n_seeds}")
    levels = list(EducationLevel)
    education = rng.integers(0, len(levels), size=n_agents)
    flags = rng.random((n_agents, 3)) < DISCRIMINATION_RATE
    rho0 = rng.beta(2.0, 2.0, size=n_agents)
    seeds = set(rng.choice(n_agents, size=n_seeds, replace=False).tolist())
    return [
        AgentRecord(
            id=v,
            rho0=float(rho0[v]),
            education=levels[education[v]],
            flags=GroupFlags(*(bool(f) for f in flags[v])),
            is_seed=v in seeds,
        )
        for v in range(n_agents)
    ]


def _check_record(rec: AgentRecord) -> None:
    if not 0.0 <= rec.rho0 <= 1.0:
        raise AgentRecordError(f"agent {rec.id}: rho0 must lie in [0, 1], got {rec.rho0}")
