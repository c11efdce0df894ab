"""Pair-based STDP with exponentially decaying traces and a proportional clamp.

Every spike first bumps the trace on its own side of the synapse, then moves
the weight by the trace difference ``A_pre - A_post``. With the partner trace
at zero this is plain potentiation on a pre spike and depression on a post
spike; the partner term makes the net change depend on spike order.
Weights stay inside ``[w0 * (1 - c), w0 * (1 + c)]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba


@dataclass(frozen=True)
class StdpParams:
    tau_pre: float
    tau_post: float
    Delta_pre: float
    Delta_post: float
    c: float = 0.05

    def __post_init__(self):
        if self.tau_pre <= 0 or self.tau_post <= 0:
            raise ValueError("trace time constants must be positive")
        if self.Delta_pre < 0 or self.Delta_post < 0:
            raise ValueError("trace increments must be non-negative")
        if not 0.0 <= self.c <= 1.0:
            raise ValueError("clamp c must lie in [0, 1]")


@dataclass
class SynapseState:
    w: float = 1.0
    A_pre: float = 0.0
    A_post: float = 0.0
    last_update: float = 0.0
    w0: float = 1.0


@numba.njit(cache=True)
def decay(a_pre, a_post, elapsed, tau_pre, tau_post):
    if elapsed == 0.0:
        return a_pre, a_post
    return a_pre * math.exp(-elapsed / tau_pre), a_post * math.exp(-elapsed / tau_post)


@numba.njit(cache=True)
def clamp(w, lo, hi):
    if w < lo:
        return lo
    if w > hi:
        return hi
    return w


@numba.njit(cache=True)
def pre_update(w, a_pre, a_post, delta_pre, lo, hi):
    a_pre += delta_pre
    return clamp(w + a_pre - a_post, lo, hi), a_pre


@numba.njit(cache=True)
def post_update(w, a_pre, a_post, delta_post, lo, hi):
    a_post += delta_post
    return clamp(w + a_pre - a_post, lo, hi), a_post


def decay_traces(state: SynapseState, now: float, params: StdpParams):
    """Decay both traces exactly from ``state.last_update`` to ``now`` (ms)."""
    elapsed = now - state.last_update
    if elapsed < 0:
        raise ValueError("cannot decay traces backwards in time")
    state.A_pre, state.A_post = decay(state.A_pre, state.A_post, float(elapsed), params.tau_pre, params.tau_post)
    state.last_update = now


def _bounds(state: SynapseState, params: StdpParams):
    return state.w0 * (1.0 - params.c), state.w0 * (1.0 + params.c)


def on_pre_spike(state: SynapseState, params: StdpParams, q: float) -> float:
    """Return the current delivered by this spike, then update the synapse."""
    injected = state.w * q
    state.w, state.A_pre = pre_update(state.w, state.A_pre, state.A_post, params.Delta_pre, *_bounds(state, params))
    return injected


def on_post_spike(state: SynapseState, params: StdpParams):
    state.w, state.A_post = post_update(state.w, state.A_pre, state.A_post, params.Delta_post, *_bounds(state, params))
