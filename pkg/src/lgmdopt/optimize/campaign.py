"""Optimisation campaigns with a shared stall rule and evaluation log.

A campaign stops when ``budget`` evaluations have been spent or when, after
the initial design, ``10 * NP`` consecutive evaluations have failed to
strictly improve the best fitness. Batches may be evaluated concurrently
through ``executor.map``; results are always consumed in index order, so a
seed fixes the whole trace.
"""

from __future__ import annotations

import csv
import enum
import json
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import IllConditioned, PopulationTooSmall
from .bo import AcqKind, AcquisitionConfig, bo_step
from .de import DeConfig, Individual, Strategy, bounds_arrays, de_crossover, de_donor, de_select
from .gp import gp_fit
from .sade import SadeState, sade_sample_rates

log = logging.getLogger(__name__)

STALL_FACTOR = 10
SADE_MIN_NP = Strategy.RAND_2_BIN.n_random + 1


class Method(enum.Enum):
    DE = "DE"
    SADE = "SADE"
    BO_PI = "BO_PI"
    BO_EI = "BO_EI"
    BO_UCB = "BO_UCB"
    RNG = "RNG"

    @property
    def is_bo(self) -> bool:
        return self.value.startswith("BO_")


def default_np(dim: int) -> int:
    return math.ceil(10 * dim / 3)


def bo_initial_design(dim: int) -> int:
    return 2 * dim + 2


@dataclass
class EvalRecord:
    index: int
    fitness: float
    best_so_far: float
    params: np.ndarray


@dataclass
class CampaignResult:
    method: Method
    seed: int | None
    NP: int
    initial_design: int
    records: list[EvalRecord] = field(default_factory=list)
    best_params: np.ndarray | None = None
    best_fitness: float = -math.inf
    stop_reason: str = ""
    wall_clock: float = 0.0

    @property
    def n_evals(self) -> int:
        return len(self.records)

    def trace(self) -> tuple[np.ndarray, np.ndarray]:
        """Evaluation counts and best-so-far values."""
        return (np.array([r.index + 1 for r in self.records]),
                np.array([r.best_so_far for r in self.records]))

    def write_log(self, path, names=None, header_lines=()):
        D = len(self.records[0].params) if self.records else 0
        names = list(names) if names is not None else [f"x{i}" for i in range(D)]
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["eval_index", "method", "seed", "fitness", "best_so_far", *names])
            for r in self.records:
                w.writerow([r.index, self.method.value, self.seed, repr(r.fitness), repr(r.best_so_far),
                            *[repr(float(v)) for v in r.params]])

    def summary(self, names=None, report=None) -> dict:
        best = None
        if self.best_params is not None:
            values = [float(v) for v in self.best_params]
            best = dict(zip(names, values)) if names is not None else values
        return {
            "method": self.method.value,
            "seed": self.seed,
            "NP": self.NP,
            "initial_design": self.initial_design,
            "evaluations": self.n_evals,
            "stop_reason": self.stop_reason,
            "best_fitness": self.best_fitness,
            "best_params": best,
            "wall_clock_s": self.wall_clock,
            "report": report,
        }

    def write_summary(self, path, names=None, report=None, **extra):
        with open(path, "w") as fh:
            json.dump({**self.summary(names, report), **extra}, fh, indent=2)


class _Tracker:
    def __init__(self, result: CampaignResult, budget: int, stall_limit: int):
        self.result = result
        self.budget = budget
        self.stall_limit = stall_limit
        self.stall = 0

    @property
    def done(self) -> bool:
        return bool(self.result.stop_reason)

    def add(self, x, f: float):
        res = self.result
        f = float(f)
        improved = not math.isnan(f) and f > res.best_fitness
        if improved:
            res.best_fitness = f
            res.best_params = np.array(x, dtype=float)
        if res.n_evals >= res.initial_design:
            self.stall = 0 if improved else self.stall + 1
        res.records.append(EvalRecord(res.n_evals, f, res.best_fitness, np.array(x, dtype=float)))
        if res.n_evals >= self.budget:
            res.stop_reason = "budget"
        elif self.stall >= self.stall_limit:
            res.stop_reason = "stalled"


def _evaluate(objective, xs, executor):
    if executor is None:
        return [float(objective(x)) for x in xs]
    return [float(f) for f in executor.map(objective, xs)]


def _consume(tracker, xs, fits):
    """Feed a batch to the tracker; returns how many were taken before stopping."""
    for k, (x, f) in enumerate(zip(xs, fits)):
        tracker.add(x, f)
        if tracker.done:
            return k + 1
    return len(xs)


def run_campaign(method, objective, bounds, seed=None, budget: int = 1000, NP: int | None = None,
                 executor=None, de_config: DeConfig | None = None, LP: int = 50,
                 acquisition: AcquisitionConfig | None = None,
                 stall_factor: int | None = STALL_FACTOR) -> CampaignResult:
    """Maximise ``objective`` over the box ``bounds``.

    ``objective`` maps a parameter vector to a float (NaN marks a failed
    evaluation). NP defaults to ``ceil(10 * D / 3)``; BO starts from
    ``2 * D + 2`` uniform points. ``stall_factor=None`` disables the stall
    rule so only the budget stops the run.
    """
    method = Method(method)
    lo, hi = bounds_arrays(bounds)
    D = len(lo)
    NP = default_np(D) if NP is None else int(NP)
    initial = bo_initial_design(D) if method.is_bo else NP
    if budget < initial:
        raise ValueError(f"budget {budget} is below the initial design of {initial}")
    rng = np.random.default_rng(seed)
    result = CampaignResult(method, seed, NP, initial)
    stall = math.inf if stall_factor is None else stall_factor * NP
    tracker = _Tracker(result, budget, stall)
    t0 = time.perf_counter()
    if method is Method.RNG:
        _run_rng(objective, lo, hi, NP, rng, tracker, executor)
    elif method is Method.DE:
        cfg = de_config or DeConfig(NP=NP)
        _run_de(objective, lo, hi, NP, rng, tracker, executor, cfg)
    elif method is Method.SADE:
        _run_sade(objective, lo, hi, NP, rng, tracker, executor, LP)
    else:
        kind = {Method.BO_PI: AcqKind.PI, Method.BO_EI: AcqKind.EI, Method.BO_UCB: AcqKind.UCB_FIXED}[method]
        acq = acquisition or AcquisitionConfig(kind=kind, d=D)
        _run_bo(objective, lo, hi, initial, rng, tracker, executor, acq)
    result.wall_clock = time.perf_counter() - t0
    return result


def _uniform(rng, lo, hi, n):
    return lo + rng.random((n, len(lo))) * (hi - lo)


def _run_rng(objective, lo, hi, NP, rng, tracker, executor):
    while not tracker.done:
        xs = _uniform(rng, lo, hi, NP)
        _consume(tracker, xs, _evaluate(objective, xs, executor))


def _initial_population(objective, lo, hi, NP, rng, tracker, executor):
    xs = _uniform(rng, lo, hi, NP)
    fits = _evaluate(objective, xs, executor)
    _consume(tracker, xs, fits)
    return [Individual(x, f) for x, f in zip(xs, fits)]


def _best_index(pop) -> int:
    fits = np.array([p.fitness for p in pop], dtype=float)
    fits = np.where(np.isnan(fits), -np.inf, fits)
    return int(np.argmax(fits))


def _run_de(objective, lo, hi, NP, rng, tracker, executor, cfg: DeConfig):
    box = np.column_stack([lo, hi])
    pop = _initial_population(objective, lo, hi, NP, rng, tracker, executor)
    while not tracker.done:
        X = np.array([p.params for p in pop])
        best = _best_index(pop)
        trials = []
        for i in range(NP):
            donor = de_donor(X, i, cfg.F, best, Strategy.RAND_1_BIN, rng, box)
            trials.append(de_crossover(X[i], donor, cfg.CR, rng))
        fits = _evaluate(objective, trials, executor)
        taken = _consume(tracker, trials, fits)
        for i in range(taken):
            pop[i] = de_select(pop[i], Individual(trials[i], fits[i]))


def _run_sade(objective, lo, hi, NP, rng, tracker, executor, LP):
    if NP < SADE_MIN_NP:
        raise PopulationTooSmall(f"SADE needs NP >= {SADE_MIN_NP}, got {NP}")
    state = SadeState(LP=LP)
    box = np.column_stack([lo, hi])
    pop = _initial_population(objective, lo, hi, NP, rng, tracker, executor)
    generation = 0
    while not tracker.done:
        generation += 1
        X = np.array([p.params for p in pop])
        best = _best_index(pop)
        trials, meta = [], []
        for i in range(NP):
            strategy = state.choose(rng)
            F, CR = sade_sample_rates(state, strategy, generation, rng)
            donor = de_donor(X, i, F, best, strategy, rng, box)
            trials.append(de_crossover(X[i], donor, CR, rng) if strategy.crosses else donor)
            meta.append((strategy, CR))
        fits = _evaluate(objective, trials, executor)
        taken = _consume(tracker, trials, fits)
        outcomes = []
        for i in range(taken):
            survivor = de_select(pop[i], Individual(trials[i], fits[i]))
            outcomes.append((*meta[i], survivor is not pop[i]))
            pop[i] = survivor
        if taken == NP:
            state.record_generation(outcomes)


def _standardise(y):
    y = np.asarray(y, dtype=float)
    finite = np.isfinite(y)
    if not finite.any():
        return np.zeros_like(y)
    # failed evaluations are imputed with the worst observed value
    y = np.where(finite, y, np.min(y[finite]))
    sd = y.std()
    return (y - y.mean()) / (sd if sd > 0 else 1.0)


def _run_bo(objective, lo, hi, n_init, rng, tracker, executor, acq: AcquisitionConfig):
    D = len(lo)
    unit = np.column_stack([np.zeros(D), np.ones(D)])
    U = rng.random((n_init, D))
    xs = lo + U * (hi - lo)
    ys = _evaluate(objective, xs, executor)
    _consume(tracker, xs, ys)
    U, ys = list(U), list(ys)
    t = 0
    while not tracker.done:
        t += 1
        yz = _standardise(ys)
        cfg = AcquisitionConfig(acq.kind, acq.zeta, acq.kappa, acq.nu, acq.delta, t=t, d=D)
        try:
            model = gp_fit(np.array(U), yz, rng=rng)
            u = bo_step(model, unit, cfg, rng, best_f=float(yz.max()))
        except IllConditioned:
            log.warning("GP fit failed at iteration %d; sampling uniformly", t)
            u = rng.random(D)
        x = lo + u * (hi - lo)
        f = _evaluate(objective, [x], None)[0]
        tracker.add(x, f)
        U.append(u)
        ys.append(f)
