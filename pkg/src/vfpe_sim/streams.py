"""Named random sub-streams derived from one run seed.

Each (node, purpose) pair owns an independent numpy Generator, so changing how often one
purpose draws (e.g. beacon entry selection under a larger cs) never shifts the draws of
another (mobility), and runs with equal seeds stay paired across schemes.
"""

from __future__ import annotations

from enum import IntEnum

import numpy as np


class Purpose(IntEnum):
    PLACEMENT = 0
    MOBILITY = 1
    BEACON_PHASE = 2
    SELECTION = 3
    ROUTING_PHASE = 4


class RunStreams:
    def __init__(self, seed: int):
        self.seed = seed
        self._cache: dict[tuple[int, Purpose], np.random.Generator] = {}

    def get(self, node_id: int, purpose: Purpose) -> np.random.Generator:
        key = (node_id, purpose)
        rng = self._cache.get(key)
        if rng is None:
            sequence = np.random.SeedSequence(
                entropy=self.seed, spawn_key=(node_id, int(purpose))
            )
            rng = np.random.default_rng(sequence)
            self._cache[key] = rng
        return rng


def run_seed(seed_base: int, run_index: int) -> int:
    """64-bit seed for run `run_index` of a campaign, independent of scheme and sweep value."""
    state = np.random.SeedSequence(entropy=seed_base, spawn_key=(run_index,)).generate_state(
        2, dtype=np.uint32
    )
    return (int(state[0]) << 32) | int(state[1])
