"""Self-adaptive DE: strategy probabilities and crossover rates learnt online."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .de import STRATEGIES, Strategy

EPSILON = 0.01
F_MEAN, F_SD = 0.5, 0.3
CR_MEAN, CR_SD = 0.5, 0.3
CR_LEARNT_SD = 0.1


@dataclass
class SadeState:
    LP: int = 50
    strategies: tuple[Strategy, ...] = STRATEGIES
    # one entry per finished generation, trimmed to the last LP
    successes: deque = field(default_factory=deque)
    failures: deque = field(default_factory=deque)
    cr_archive: deque = field(default_factory=deque)
    probabilities: np.ndarray = None
    generation: int = 0

    def __post_init__(self):
        if self.LP < 1:
            raise ValueError("LP must be at least 1")
        k = len(self.strategies)
        if self.probabilities is None:
            self.probabilities = np.full(k, 1.0 / k)

    @property
    def n_strategies(self) -> int:
        return len(self.strategies)

    def index(self, strategy: Strategy) -> int:
        return self.strategies.index(Strategy(strategy))

    def choose(self, rng) -> Strategy:
        return self.strategies[rng.choice(self.n_strategies, p=self.probabilities)]

    def archived_crs(self, strategy: Strategy) -> list[float]:
        k = self.index(strategy)
        return [cr for gen in self.cr_archive for cr in gen[k]]

    def record_generation(self, outcomes):
        """Log one generation: ``outcomes`` holds (strategy, CR, improved) per trial."""
        k = self.n_strategies
        succ = np.zeros(k, dtype=int)
        fail = np.zeros(k, dtype=int)
        crs = [[] for _ in range(k)]
        for strategy, cr, improved in outcomes:
            j = self.index(strategy)
            if improved:
                succ[j] += 1
                crs[j].append(float(cr))
            else:
                fail[j] += 1
        for buf, item in ((self.successes, succ), (self.failures, fail), (self.cr_archive, crs)):
            buf.append(item)
            while len(buf) > self.LP:
                buf.popleft()
        self.generation += 1
        sade_update_probabilities(self)


def sade_sample_rates(state: SadeState, strategy: Strategy, generation: int, rng) -> tuple[float, float]:
    """Draw (F, CR) for one trial.

    F is used as drawn, negative values included. CR has mean 0.5 until the
    learning period is over, then centres on the median successful CR of the
    strategy (0.5 when it has none).
    """
    F = float(rng.normal(F_MEAN, F_SD))
    if generation <= state.LP:
        cr = rng.normal(CR_MEAN, CR_SD)
    else:
        archive = state.archived_crs(strategy)
        centre = float(np.median(archive)) if archive else CR_MEAN
        cr = rng.normal(centre, CR_LEARNT_SD)
    return F, float(np.clip(cr, 0.0, 1.0))


def sade_update_probabilities(state: SadeState):
    """Recompute strategy probabilities from the trailing LP generations."""
    k = state.n_strategies
    if len(state.successes) < state.LP:
        state.probabilities = np.full(k, 1.0 / k)
        return
    s = np.sum(state.successes, axis=0).astype(float)
    f = np.sum(state.failures, axis=0).astype(float)
    rate = s / (s + f + EPSILON) + EPSILON
    state.probabilities = rate / rate.sum()
