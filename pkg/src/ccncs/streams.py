"""Indexed random streams.

Every random draw made by the optimizers comes from a generator keyed by
``(master_seed, purpose, iteration, subproblem, process)``. Results therefore
do not depend on evaluation order or on how many workers were used.
"""

from __future__ import annotations

import numpy as np

INIT = 0
GROUPING = 1
SAMPLE = 2
EVAL = 3
SHARED = 4
TEST = 5


class RandomStreams:
    """Factory of independent generators derived from one master seed."""

    def __init__(self, master_seed: int, common_random_numbers: bool = False):
        self.master_seed = int(master_seed)
        self.common_random_numbers = bool(common_random_numbers)

    def _seq(self, *key: int) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.master_seed, spawn_key=tuple(int(k) for k in key))

    def generator(self, *key: int) -> np.random.Generator:
        return np.random.default_rng(self._seq(*key))

    def init(self) -> np.random.Generator:
        return self.generator(INIT)

    def grouping(self, iteration: int) -> np.random.Generator:
        return self.generator(GROUPING, iteration)

    def sampling(self, iteration: int, subproblem: int) -> np.random.Generator:
        """Stream for the offspring noise of one (sub-problem) step; row i feeds process i."""
        return self.generator(SAMPLE, iteration, subproblem)

    def shared(self, iteration: int, subproblem: int) -> np.random.Generator:
        return self.generator(SHARED, iteration, subproblem)

    def eval_seeds(self, iteration: int, subproblem: int, n: int, slot: int = 0) -> list[int]:
        """Integer seeds for the stochastic evaluations of one step, index = process.

        With common random numbers every evaluation of the step (parents and
        offspring, any slot) shares one seed, so comparisons are paired.
        """
        if self.common_random_numbers:
            seed = int(self._seq(EVAL, iteration, subproblem).generate_state(1, np.uint64)[0])
            return [seed] * n
        state = self._seq(EVAL, iteration, subproblem, slot).generate_state(n, np.uint64)
        return [int(v) for v in state]
