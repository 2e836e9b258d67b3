"""Seed derivation for reproducible Monte Carlo runs.

Every random stream is a pure function of the experiment's base seed and a tag, so
results do not depend on run ordering or on how many worker threads are used.
"""

import numpy as np

# Stream tags keep the parameter, record, run and graph-retry streams disjoint.
PARAM_STREAM = 1
RECORD_STREAM = 2
RUN_STREAM = 3
GRAPH_STREAM = 4


def derive_seed(base_seed: int, *tags: int) -> int:
    """Hash a base seed and integer tags into a fresh 63-bit seed."""
    seq = np.random.SeedSequence([int(base_seed) % 2**64, *[int(t) for t in tags]])
    return int(seq.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def run_seed(base_seed: int, run_index: int) -> int:
    """Seed of the `run_index`-th Monte Carlo run."""
    return derive_seed(base_seed, RUN_STREAM, run_index)


def param_rng(base_seed: int) -> np.random.Generator:
    """Generator for scenario parameters (reliability, receptivity), shared by all runs."""
    return np.random.default_rng(derive_seed(base_seed, PARAM_STREAM))


def record_rng(base_seed: int) -> np.random.Generator:
    """Generator for synthetic agent records."""
    return np.random.default_rng(derive_seed(base_seed, RECORD_STREAM))


def step_rng(seed: int, step: int) -> np.random.Generator:
    """Generator for the threshold draws of one step of one run."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(step),)))
