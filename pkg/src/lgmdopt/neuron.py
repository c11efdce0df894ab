"""Adaptive exponential integrate-and-fire (AEIF) layer dynamics.

Units: mV, ms, pA, pF, nS. With these, nS * mV = pA and pA / pF = mV / ms,
so the membrane equation needs no conversion factors.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import NumericalBlowup

EXP_ARG_MAX = 20.0
DT = 0.1


@dataclass(frozen=True)
class NeuronConstants:
    C: float = 124.2
    g_L: float = 60.05
    E_L: float = -73.12
    V_T: float = -3.98
    Delta_T: float = 6.71
    V_r: float | None = None
    # ceiling applied to the recorded trace at spike samples only
    V_peak: float = 20.0

    def __post_init__(self):
        if self.V_r is None:
            object.__setattr__(self, "V_r", self.E_L)
        if self.C <= 0 or self.g_L <= 0 or self.Delta_T <= 0:
            raise ValueError("C, g_L and Delta_T must be positive")

    @property
    def tau_m(self) -> float:
        return self.C / self.g_L


@dataclass(frozen=True)
class AdaptationParams:
    a: float = 0.0
    b: float = 0.0
    tau_w: float = 1.0
    enabled: bool = False

    def __post_init__(self):
        if self.enabled and self.tau_w <= 0:
            raise ValueError("tau_w must be positive")


NO_ADAPTATION = AdaptationParams()


class Current(enum.Enum):
    E = "E"
    IA = "IA"
    IB = "IB"


@dataclass
class LayerState:
    """Per-neuron state of a homogeneous layer."""

    V: np.ndarray
    I_e: np.ndarray
    I_iA: np.ndarray
    I_iB: np.ndarray
    I_adapt: np.ndarray = field(default=None)

    def __post_init__(self):
        n = len(self.V)
        if self.I_adapt is None:
            self.I_adapt = np.zeros(n)
        for name in ("V", "I_e", "I_iA", "I_iB", "I_adapt"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (n,):
                raise ValueError(f"{name} has shape {arr.shape}, expected ({n},)")
            setattr(self, name, arr)

    @classmethod
    def at_rest(cls, size: int, consts: NeuronConstants = NeuronConstants()) -> "LayerState":
        z = np.zeros(size)
        return cls(np.full(size, consts.E_L), z.copy(), z.copy(), z.copy(), z.copy())

    @property
    def size(self) -> int:
        return len(self.V)

    def copy(self) -> "LayerState":
        return LayerState(self.V.copy(), self.I_e.copy(), self.I_iA.copy(), self.I_iB.copy(), self.I_adapt.copy())


@numba.njit(cache=True)
def update_neuron(i, V, I_e, I_iA, I_iB, I_ad,
                  g_L, E_L, V_T, V_r, V_peak, exp_rest, gl_delta, inv_delta, dt_over_C,
                  k_e, k_iA, k_iB, a, b, dt_over_tau_w, adapt):
    """Advance neuron ``i`` by one step; returns (spiked, trace value, finite).

    Constants arrive pre-combined (see ``kernel_constants``) to keep
    divisions out of the inner loop.
    """
    v0 = V[i]
    v = v0
    arg = (v - V_T) * inv_delta
    if arg > EXP_ARG_MAX:
        arg = EXP_ARG_MAX
    I = I_e[i] - I_iA[i] - I_iB[i] - I_ad[i]
    dv = -g_L * (v - E_L) + gl_delta * (math.exp(arg) - exp_rest) + I
    if adapt:
        I_ad[i] += dt_over_tau_w * (a * (v - E_L) - I_ad[i])
    v += dt_over_C * dv
    I_e[i] *= k_e
    I_iA[i] *= k_iA
    I_iB[i] *= k_iB
    # checked before the reset, which would otherwise mask an infinite V
    finite = math.isfinite(v) and math.isfinite(I_ad[i])
    # a state handed in above threshold (never produced by the update itself,
    # which resets) also counts as a spike
    spiked = v > V_T or v0 > V_T
    rec = max(v, v0) if spiked else v
    if spiked:
        if rec > V_peak:
            rec = V_peak
        v = V_r
        if adapt:
            I_ad[i] += b
    V[i] = v
    return spiked, rec, finite


def kernel_constants(consts: NeuronConstants, dt: float = DT) -> tuple:
    """(g_L, E_L, V_T, V_r, V_peak, exp_rest, g_L*Delta_T, 1/Delta_T, dt/C) for ``update_neuron``."""
    c = consts
    # the exponential term is measured from its value at rest so E_L is an exact fixed point
    exp_rest = math.exp((c.E_L - c.V_T) / c.Delta_T)
    return (c.g_L, c.E_L, c.V_T, c.V_r, c.V_peak, exp_rest, c.g_L * c.Delta_T, 1.0 / c.Delta_T, dt / c.C)


@numba.njit(cache=True)
def euler_step(V, I_e, I_iA, I_iB, I_ad, spiked, v_rec,
               g_L, E_L, V_T, V_r, V_peak, exp_rest, gl_delta, inv_delta, dt_over_C,
               k_e, k_iA, k_iB, a, b, dt_over_tau_w, adapt):
    """Advance every neuron by one step in place.

    ``k_*`` are the per-step current retention factors ``1 - dt / tau``.
    Fills ``spiked`` and ``v_rec`` (the trace value: post-update voltage,
    capped at ``V_peak`` for spiking neurons). Returns the index of the
    first neuron whose state became non-finite, or -1.
    """
    bad = -1
    for i in range(V.shape[0]):
        s, r, ok = update_neuron(i, V, I_e, I_iA, I_iB, I_ad, g_L, E_L, V_T, V_r, V_peak, exp_rest,
                                 gl_delta, inv_delta, dt_over_C, k_e, k_iA, k_iB, a, b, dt_over_tau_w, adapt)
        spiked[i] = s
        v_rec[i] = r
        if bad < 0 and not ok:
            bad = i
    return bad


def step_layer(state: LayerState, consts: NeuronConstants, taus, adapt: AdaptationParams = NO_ADAPTATION,
               dt: float = DT) -> np.ndarray:
    """One forward-Euler step of the layer; returns the boolean spike flags.

    ``taus`` maps ``tau_e``, ``tau_iA`` and ``tau_iB`` (ms) to values.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    spiked = np.zeros(state.size, dtype=np.bool_)
    v_rec = np.empty(state.size)
    bad = euler_step(
        state.V, state.I_e, state.I_iA, state.I_iB, state.I_adapt, spiked, v_rec,
        *kernel_constants(consts, dt),
        1.0 - dt / taus["tau_e"], 1.0 - dt / taus["tau_iA"], 1.0 - dt / taus["tau_iB"],
        adapt.a, adapt.b, dt / adapt.tau_w, adapt.enabled,
    )
    if bad >= 0:
        raise NumericalBlowup(bad)
    if not adapt.enabled:
        state.I_adapt[:] = 0.0
    return spiked


_CURRENT_ATTR = {Current.E: "I_e", Current.IA: "I_iA", Current.IB: "I_iB"}


def inject(state: LayerState, neuron_index: int, kind, amount: float):
    """Add ``amount`` pA to one neuron's excitatory or inhibitory accumulator."""
    if amount < 0:
        raise ValueError("injected amount must be non-negative")
    if not 0 <= neuron_index < state.size:
        raise IndexError(f"neuron {neuron_index} out of range for layer of {state.size}")
    getattr(state, _CURRENT_ATTR[Current(kind)])[neuron_index] += amount
