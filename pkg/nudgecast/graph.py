"""Social influence network: loading, synthetic generation and validation."""

import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, List, Set, Tuple, Union

import networkx as nx
import numpy as np
from scipy import sparse

from .exceptions import (
    ConnectivityRetryError,
    DisconnectedGraphError,
    EdgeListParseError,
    IsolatedAgentError,
    ParameterError,
    SelfLoopError,
)
from .rng import GRAPH_STREAM, derive_seed

logger = logging.getLogger(__name__)

MAX_CONNECT_RETRIES = 100


@dataclass(frozen=True)
class SocialNetwork:
    """Undirected influence graph over `n_agents` agents.

    Construct through `from_edges`, `load_edge_list` or `generate_watts_strogatz`,
    which enforce the structural invariants (no self-loops, symmetric adjacency,
    every agent has a neighbor, connected).
    """

    n_agents: int
    adjacency: Tuple[Tuple[int, ...], ...]

    @classmethod
    def from_edges(cls, n_agents: int, edges: Iterable[Tuple[int, int]]) -> "SocialNetwork":
        """Build and validate a network from an edge iterable; duplicates are merged."""
        if n_agents < 1:
            raise ParameterError(f"n_agents must be positive, got {n_agents}")
        neighbor_sets: List[Set[int]] = [set() for _ in range(n_agents)]
        for v, w in edges:
            if not (0 <= v < n_agents and 0 <= w < n_agents):
                raise EdgeListParseError(f"edge ({v}, {w}) outside agent range [0, {n_agents})")
            if v == w:
                raise SelfLoopError(f"self-loop on agent {v}")
            neighbor_sets[v].add(w)
            neighbor_sets[w].add(v)

        isolated = [v for v, nbrs in enumerate(neighbor_sets) if not nbrs]
        if isolated:
            raise IsolatedAgentError(f"agents without neighbors: {isolated[:10]}")

        net = cls(n_agents, tuple(tuple(sorted(nbrs)) for nbrs in neighbor_sets))
        if not nx.is_connected(net.to_networkx()):
            n_comp = nx.number_connected_components(net.to_networkx())
            raise DisconnectedGraphError(f"network has {n_comp} connected components")
        return net

    @classmethod
    def from_networkx(cls, graph: nx.Graph) -> "SocialNetwork":
        """Build from a networkx graph whose nodes are 0..n-1."""
        return cls.from_edges(graph.number_of_nodes(), graph.edges())

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n_agents))
        graph.add_edges_from((v, w) for v, nbrs in enumerate(self.adjacency) for w in nbrs if v < w)
        return graph

    def neighbors(self, v: int) -> List[int]:
        """Sorted neighbor list N_v of agent `v`."""
        if not 0 <= v < self.n_agents:
            raise ParameterError(f"agent index {v} outside [0, {self.n_agents})")
        return list(self.adjacency[v])

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    @property
    def n_edges(self) -> int:
        return sum(len(nbrs) for nbrs in self.adjacency) // 2

    def edges(self) -> List[Tuple[int, int]]:
        return [(v, w) for v, nbrs in enumerate(self.adjacency) for w in nbrs if v < w]

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([len(nbrs) for nbrs in self.adjacency], dtype=float)

    @cached_property
    def adjacency_matrix(self) -> sparse.csr_matrix:
        """0/1 sparse adjacency matrix."""
        rows = [v for v, nbrs in enumerate(self.adjacency) for _ in nbrs]
        cols = [w for nbrs in self.adjacency for w in nbrs]
        ones = np.ones(len(rows))
        return sparse.csr_matrix((ones, (rows, cols)), shape=(self.n_agents, self.n_agents))


def neighbors(net: SocialNetwork, v: int) -> List[int]:
    """Return N_v for agent `v` of `net`."""
    return net.neighbors(v)


def load_edge_list(path: Union[str, Path]) -> SocialNetwork:
    """Load a network from an edge-list file.

    Format: first non-comment line `n <N>`, then one whitespace-separated `v w` pair
    per line with 0-based indices. Lines starting with `#` and blank lines are ignored.

    Args:
        path: Edge-list file.

    Returns:
        Validated SocialNetwork.
    """
    path = Path(path)
    n_agents = None
    edges: List[Tuple[int, int]] = []
    with open(path, "r") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if n_agents is None:
                if len(fields) != 2 or fields[0] != "n":
                    raise EdgeListParseError(f"{path}:{lineno}: expected header 'n <N>'")
                n_agents = _parse_int(fields[1], path, lineno)
                if n_agents < 1:
                    raise EdgeListParseError(f"{path}:{lineno}: agent count must be positive")
                continue
            if len(fields) != 2:
                raise EdgeListParseError(f"{path}:{lineno}: expected 'v w', got {line!r}")
            v, w = (_parse_int(tok, path, lineno) for tok in fields)
            if not (0 <= v < n_agents and 0 <= w < n_agents):
                raise EdgeListParseError(
                    f"{path}:{lineno}: edge ({v}, {w}) outside [0, {n_agents})"
                )
            edges.append((v, w))

    if n_agents is None:
        raise EdgeListParseError(f"{path}: missing 'n <N>' header")

    net = SocialNetwork.from_edges(n_agents, edges)
    logger.info(f"Loaded network from {path}: {net.n_agents} agents, {net.n_edges} edges")
    return net


def write_edge_list(net: SocialNetwork, path: Union[str, Path]) -> None:
    """Write `net` in the edge-list format read by `load_edge_list`."""
    with open(path, "w") as f:
        f.write(f"n {net.n_agents}\n")
        for v, w in net.edges():
            f.write(f"{v} {w}\n")


def generate_watts_strogatz(n: int, k: int, p_rewire: float, seed: int) -> SocialNetwork:
    """Generate a connected Watts-Strogatz small-world network.

    The generator is re-run with a fresh seed derived from `seed` until the result is
    connected, at most MAX_CONNECT_RETRIES times.

    Args:
        n: Number of agents.
        k: Even base-ring degree, 2 <= k < n.
        p_rewire: Rewiring probability in [0, 1].
        seed: Integer seed; equal arguments give an identical network.

    Returns:
        Connected SocialNetwork.
    """
    if k < 2 or k % 2 != 0:
        raise ParameterError(f"k must be an even integer >= 2, got {k}")
    if n <= k:
        raise ParameterError(f"n must exceed k, got n={n}, k={k}")
    if not 0.0 <= p_rewire <= 1.0:
        raise ParameterError(f"p_rewire must lie in [0, 1], got {p_rewire}")

    for attempt in range(MAX_CONNECT_RETRIES):
        attempt_seed = int(seed) if attempt == 0 else derive_seed(seed, GRAPH_STREAM, attempt)
        graph = nx.watts_strogatz_graph(n, k, p_rewire, seed=attempt_seed)
        if nx.is_connected(graph):
            return SocialNetwork.from_networkx(graph)
        logger.warning(f"Watts-Strogatz draw {attempt + 1} disconnected, retrying")

    raise ConnectivityRetryError(
        f"no connected network after {MAX_CONNECT_RETRIES} draws (n={n}, k={k}, p={p_rewire})"
    )


def _parse_int(token: str, path: Path, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise EdgeListParseError(f"{path}:{lineno}: not an integer: {token!r}") from None
