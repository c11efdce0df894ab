"""Acquisition functions and the BO proposal step."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .de import bounds_arrays
from .gp import GpModel

N_CANDIDATES = 4096
N_REFINE = 64
REFINE_STEPS = 20
REFINE_STEP0 = 0.1


class AcqKind(enum.Enum):
    PI = "PI"
    EI = "EI"
    UCB_FIXED = "UCB_FIXED"
    UCB_SCHEDULED = "UCB_SCHEDULED"


@dataclass(frozen=True)
class AcquisitionConfig:
    kind: AcqKind = AcqKind.EI
    zeta: float = 0.01
    kappa: float = 2.576
    nu: float = 1.0
    delta: float = 0.1
    t: int = 1
    d: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", AcqKind(self.kind))
        if self.zeta < 0 or self.kappa < 0:
            raise ValueError("zeta and kappa must be non-negative")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")

    def scheduled_kappa(self) -> float:
        tau = 2 * math.log(self.t ** (self.d / 2 + 2) * math.pi ** 2 / (3 * self.delta))
        return math.sqrt(self.nu * tau)


def _phi(z):
    with np.errstate(over="ignore"):
        return np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)


def acquisition_values(mu, sigma, best_f: float, cfg: AcquisitionConfig) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if cfg.kind in (AcqKind.UCB_FIXED, AcqKind.UCB_SCHEDULED):
        kappa = cfg.kappa if cfg.kind is AcqKind.UCB_FIXED else cfg.scheduled_kappa()
        return mu + kappa * sigma
    gain = mu - best_f - cfg.zeta
    pos = sigma > 0
    safe = np.where(pos, sigma, 1.0)
    with np.errstate(over="ignore"):
        z = gain / safe
    if cfg.kind is AcqKind.PI:
        return np.where(pos, ndtr(z), (gain > 0).astype(float))
    ei = gain * ndtr(z) + safe * _phi(z)
    return np.where(pos, np.maximum(ei, 0.0), 0.0)


def acquire(model: GpModel, x, best_f: float, cfg: AcquisitionConfig):
    """Acquisition value at ``x`` (one point or a batch of rows)."""
    x = np.asarray(x, dtype=float)
    mu, sigma = model.predict(np.atleast_2d(x))
    vals = acquisition_values(mu, sigma, best_f, cfg)
    return float(vals[0]) if x.ndim == 1 else vals


def _pattern_search(model, points, vals, best_f, cfg):
    n, D = points.shape
    step = np.full(n, REFINE_STEP0)
    eye = np.eye(D)
    moves = np.concatenate([eye, -eye])
    for _ in range(REFINE_STEPS):
        trial = np.clip(points[:, None, :] + step[:, None, None] * moves[None], 0.0, 1.0)
        tv = acquire(model, trial.reshape(-1, D), best_f, cfg).reshape(n, 2 * D)
        k = np.argmax(tv, axis=1)
        best_tv = tv[np.arange(n), k]
        better = best_tv > vals
        points = np.where(better[:, None], trial[np.arange(n), k], points)
        vals = np.where(better, best_tv, vals)
        step = np.where(better, step, step / 2)
    return points, vals


def bo_step(model: GpModel, bounds, cfg: AcquisitionConfig, rng=None, best_f: float | None = None) -> np.ndarray:
    """Next point to evaluate, in the coordinates of ``bounds``.

    The acquisition is maximised over uniform candidates in the unit cube;
    the top candidates are then polished by a coordinate pattern search.
    Ties go to the lowest candidate index.
    """
    rng = np.random.default_rng(rng)
    lo, hi = bounds_arrays(bounds)
    D = len(lo)
    best_f = float(np.max(model.y)) if best_f is None else best_f
    cand = rng.random((N_CANDIDATES, D))
    vals = acquire(model, cand, best_f, cfg)
    top = np.argsort(-vals, kind="stable")[:N_REFINE]
    refined, rvals = _pattern_search(model, cand[top], vals[top], best_f, cfg)
    pool = np.concatenate([cand, refined])
    pool_vals = np.concatenate([vals, rvals])
    u = pool[int(np.argmax(pool_vals))]
    return np.clip(lo + u * (hi - lo), lo, hi)
