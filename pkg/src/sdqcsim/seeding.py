"""Reproducible per-trial random streams.

Every Monte Carlo trial gets its own counter-based generator keyed by
(seed, trial index), so results are independent of execution order and of
how trials are distributed across workers.
"""

from __future__ import annotations

import numpy as np


def trial_rng(seed: int, trial: int = 0) -> np.random.Generator:
    """Philox stream derived from (seed, trial) — stable under parallelism."""
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(trial,))
    return np.random.Generator(np.random.Philox(seq))
