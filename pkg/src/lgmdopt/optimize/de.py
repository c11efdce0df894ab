"""Differential evolution building blocks (maximisation)."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from ..errors import PopulationTooSmall

log = logging.getLogger(__name__)


class Strategy(enum.Enum):
    RAND_1_BIN = "rand/1/bin"
    RAND_TO_BEST_2_BIN = "rand-to-best/2/bin"
    RAND_2_BIN = "rand/2/bin"
    CURR_TO_RAND_1 = "current-to-rand/1"

    @property
    def n_random(self) -> int:
        """Distinct non-self population members the donor draws on."""
        return {"rand/1/bin": 3, "rand-to-best/2/bin": 4, "rand/2/bin": 5, "current-to-rand/1": 3}[self.value]

    @property
    def crosses(self) -> bool:
        # current-to-rand already mixes parent and donor through its random weight
        return self is not Strategy.CURR_TO_RAND_1


STRATEGIES = tuple(Strategy)


@dataclass(frozen=True)
class DeConfig:
    NP: int = 37
    F: float = 0.6607
    CR: float = 0.9426

    def __post_init__(self):
        if self.NP < 4:
            raise PopulationTooSmall(f"NP={self.NP}; differential evolution needs at least 4")
        if not 0 <= self.F <= 2:
            raise ValueError("F must lie in [0, 2]")
        if not 0 <= self.CR <= 1:
            raise ValueError("CR must lie in [0, 1]")


@dataclass
class Individual:
    params: np.ndarray
    fitness: float | None = None

    @property
    def evaluated(self) -> bool:
        return self.fitness is not None


def bounds_arrays(bounds) -> tuple[np.ndarray, np.ndarray]:
    """(lower, upper) from a Bounds object or a (D, 2) array."""
    if hasattr(bounds, "lower"):
        return np.asarray(bounds.lower, float), np.asarray(bounds.upper, float)
    b = np.asarray(bounds, dtype=float)
    return b[:, 0], b[:, 1]


def de_donor(pop, i: int, F: float, best_index: int = 0, strategy: Strategy = Strategy.RAND_1_BIN,
             rng=None, bounds=None) -> np.ndarray:
    """Mutant vector for member ``i``, clipped into ``bounds`` when given."""
    pop = np.asarray(pop, dtype=float)
    strategy = Strategy(strategy)
    rng = np.random.default_rng(rng)
    n = len(pop)
    if n < strategy.n_random + 1:
        raise PopulationTooSmall(f"{strategy.value} needs NP >= {strategy.n_random + 1}, got {n}")
    others = np.delete(np.arange(n), i)
    r = pop[rng.choice(others, size=strategy.n_random, replace=False)]
    x = pop[i]
    if strategy is Strategy.RAND_1_BIN:
        donor = r[0] + F * (r[1] - r[2])
    elif strategy is Strategy.RAND_TO_BEST_2_BIN:
        donor = x + F * (pop[best_index] - x) + F * (r[0] - r[1]) + F * (r[2] - r[3])
    elif strategy is Strategy.RAND_2_BIN:
        donor = r[0] + F * (r[1] - r[2]) + F * (r[3] - r[4])
    else:
        donor = x + rng.random() * (r[0] - x) + F * (r[1] - r[2])
    if bounds is not None:
        donor = np.clip(donor, *bounds_arrays(bounds))
    return donor


def de_crossover(parent, donor, CR: float, rng=None) -> np.ndarray:
    """Binomial crossover; index R always takes the donor value."""
    parent = np.asarray(parent, dtype=float)
    donor = np.asarray(donor, dtype=float)
    if parent.shape != donor.shape:
        raise ValueError("parent and donor differ in dimension")
    rng = np.random.default_rng(rng)
    forced = rng.integers(len(parent))
    take = rng.random(len(parent)) <= CR
    take[forced] = True
    return np.where(take, donor, parent)


def de_select(parent: Individual, trial: Individual) -> Individual:
    """Greedy one-to-one selection; only a strictly fitter trial replaces the parent."""
    if not (parent.evaluated and trial.evaluated):
        raise ValueError("both individuals must be evaluated")
    if trial.fitness is None or math.isnan(trial.fitness):
        log.warning("trial fitness is NaN; keeping the parent")
        return parent
    if math.isnan(parent.fitness) or trial.fitness > parent.fitness:
        return trial
    return parent
