"""Five-layer LGMD network: parameters, topology, construction and simulation.

Layers are P (photoreceptors, driven by events), S (summing), IP and IS
(sum-pooled copies of P and S) and a single LGMD output neuron. All neurons
share one set of AEIF constants. Every synapse delivers its charge one
integration step after the presynaptic spike.
"""

from __future__ import annotations

import enum
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields

import numba
import numpy as np

from . import plasticity
from .errors import ConfigError, GridMismatch, NumericalBlowup
from .events import EventStream
from .neuron import DT, NeuronConstants, kernel_constants, update_neuron

CORE_NAMES = (
    "tau_e", "tau_iA", "tau_iB",
    "q_eP", "q_eS", "q_eIP", "q_eIS", "q_eL",
    "inhA_S", "inhB_S", "inhA_L",
)
ADAPT_NAMES = ("a", "b", "tau_w")
PLASTIC_NAMES = ("tau_pre", "tau_post", "Delta_pre", "Delta_post")

PARAM_BOUNDS = {
    "tau_e": (1.0, 10.0),
    "tau_iA": (1.0, 20.0),
    "tau_iB": (1.0, 25.0),
    "q_eP": (0.0, 1363.0),
    "q_eS": (0.0, 5000.0),
    "q_eIP": (0.0, 230.0),
    "q_eIS": (0.0, 270.0),
    "q_eL": (0.0, 472.0),
    "inhA_S": (0.04, 1.22),
    "inhB_S": (0.24, 1.5),
    "inhA_L": (0.019, 1.3),
    "a": (1.0, 8.0),
    "b": (40.0, 141.0),
    "tau_w": (1.0, 150.0),
    "tau_pre": (1.0, 25.0),
    "tau_post": (1.0, 25.0),
    "Delta_pre": (1e-16, 0.05),
    "Delta_post": (1e-16, 0.05),
}

LAYERS = ("P", "S", "IP", "IS", "LGMD")


class Variant(enum.Enum):
    LGMD = "LGMD"
    A = "A"
    P = "P"
    AP = "AP"

    @property
    def adaptive(self) -> bool:
        return self in (Variant.A, Variant.AP)

    @property
    def plastic(self) -> bool:
        return self in (Variant.P, Variant.AP)

    def names(self) -> tuple[str, ...]:
        names = CORE_NAMES
        if self.adaptive:
            names += ADAPT_NAMES
        if self.plastic:
            names += PLASTIC_NAMES
        return names


@dataclass
class ParamVector:
    tau_e: float
    tau_iA: float
    tau_iB: float
    q_eP: float
    q_eS: float
    q_eIP: float
    q_eIS: float
    q_eL: float
    inhA_S: float
    inhB_S: float
    inhA_L: float
    a: float | None = None
    b: float | None = None
    tau_w: float | None = None
    tau_pre: float | None = None
    tau_post: float | None = None
    Delta_pre: float | None = None
    Delta_post: float | None = None

    @property
    def has_adaptation(self) -> bool:
        return all(getattr(self, n) is not None for n in ADAPT_NAMES)

    @property
    def has_plasticity(self) -> bool:
        return all(getattr(self, n) is not None for n in PLASTIC_NAMES)

    def names(self) -> tuple[str, ...]:
        names = CORE_NAMES
        if self.has_adaptation:
            names += ADAPT_NAMES
        if self.has_plasticity:
            names += PLASTIC_NAMES
        return names

    def to_array(self, names=None) -> np.ndarray:
        names = self.names() if names is None else names
        return np.array([getattr(self, n) for n in names], dtype=float)

    @classmethod
    def from_array(cls, values, names=CORE_NAMES) -> "ParamVector":
        values = np.asarray(values, dtype=float)
        if len(values) != len(names):
            raise ConfigError(f"expected {len(names)} values, got {len(values)}")
        return cls(**{n: float(v) for n, v in zip(names, values)})

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> "ParamVector":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown parameters: {sorted(unknown)}")
        missing = [n for n in CORE_NAMES if n not in d]
        if missing:
            raise ConfigError(f"missing parameters: {missing}")
        return cls(**{k: float(v) for k, v in d.items()})


@dataclass(frozen=True)
class Bounds:
    names: tuple[str, ...]
    lower: np.ndarray
    upper: np.ndarray

    @classmethod
    def for_names(cls, names, table=PARAM_BOUNDS) -> "Bounds":
        names = tuple(names)
        lo = np.array([table[n][0] for n in names], dtype=float)
        hi = np.array([table[n][1] for n in names], dtype=float)
        if np.any(lo >= hi):
            raise ConfigError("every bound needs min < max")
        return cls(names, lo, hi)

    @classmethod
    def for_variant(cls, variant) -> "Bounds":
        return cls.for_names(Variant(variant).names())

    @property
    def dim(self) -> int:
        return len(self.names)

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.lower, self.upper])


def clip_to_bounds(raw: ParamVector, bounds: Bounds | None = None) -> ParamVector:
    """Clamp every present parameter into its bounds (the default search box unless given)."""
    bounds = Bounds.for_names(raw.names()) if bounds is None else bounds
    values = raw.to_dict()
    for name, lo, hi in zip(bounds.names, bounds.lower, bounds.upper):
        if name in values:
            values[name] = float(min(max(values[name], lo), hi))
    return ParamVector(**values)


_REFERENCE_CORE = dict(
    tau_e=5.87, tau_iA=3.57, tau_iB=4.20, q_eP=1014.00, q_eS=4635.30, q_eIP=84.26,
    q_eIS=168.11, q_eL=80.00, inhA_S=1.19, inhB_S=1.50, inhA_L=0.14,
)
_REFERENCE_ADAPT = dict(a=0.79, b=14.51, tau_w=30.00)
_REFERENCE_PLASTIC = dict(tau_pre=1.56, tau_post=10.03, Delta_pre=0.031, Delta_post=0.027)

# Hand-entered parameter sets reported for each model. a and b sit outside
# the optimisation bounds; they are used as given.
REFERENCE_PARAMS = {
    Variant.LGMD: ParamVector(**_REFERENCE_CORE),
    Variant.A: ParamVector(**{**_REFERENCE_CORE, "q_eL": 100.0, **_REFERENCE_ADAPT}),
    Variant.P: ParamVector(**_REFERENCE_CORE, **_REFERENCE_PLASTIC),
    Variant.AP: ParamVector(**{**_REFERENCE_CORE, "q_eL": 100.0, **_REFERENCE_ADAPT, **_REFERENCE_PLASTIC}),
}
REFERENCE_CLAMP = 0.05


# --------------------------------------------------------------------------
# Topology


def chebyshev_ring(radius: int) -> list[tuple[int, int]]:
    return [
        (dx, dy)
        for dy in range(-radius, radius + 1)
        for dx in range(-radius, radius + 1)
        if max(abs(dx), abs(dy)) == radius
    ]


def assign_inhibition_weights(offsets) -> dict[tuple[int, int], float]:
    """Weight each kernel offset by the inverse of its Euclidean distance."""
    table = {}
    for dx, dy in offsets:
        if dx == 0 and dy == 0:
            raise ConfigError("the centre offset carries excitation only")
        table[(int(dx), int(dy))] = 1.0 / math.hypot(dx, dy)
    return table


def default_ring(radius: int) -> tuple[tuple[int, int, float], ...]:
    """Chebyshev ring with 1/distance weights scaled to sum to one.

    With raw 1/distance weights a ring sums to about 7, so any edge (whose
    neighbours fire together) drives far more inhibition than excitation
    into S and the layer falls silent; unit-sum rings keep the inhA_S and
    inhB_S ratios meaningful as inhibition-to-excitation ratios.
    """
    table = assign_inhibition_weights(chebyshev_ring(radius))
    total = sum(table.values())
    return tuple((dx, dy, w / total) for (dx, dy), w in table.items())


@dataclass(frozen=True)
class Topology:
    width: int = 32
    height: int = 32
    pool: int = 4
    a_ring: tuple = field(default_factory=lambda: default_ring(1))
    b_ring: tuple = field(default_factory=lambda: default_ring(2))

    def __post_init__(self):
        object.__setattr__(self, "a_ring", tuple(tuple(e) for e in self.a_ring))
        object.__setattr__(self, "b_ring", tuple(tuple(e) for e in self.b_ring))
        if self.width % self.pool or self.height % self.pool:
            raise GridMismatch(f"pool {self.pool} does not divide {self.width}x{self.height}")
        offsets = [(dx, dy) for dx, dy, _ in self.a_ring + self.b_ring]
        if len(set(offsets)) != len(offsets):
            raise ConfigError("kernel offsets must be unique")
        if (0, 0) in offsets:
            raise ConfigError("the centre offset carries excitation only")

    @property
    def n_p(self) -> int:
        return self.width * self.height

    @property
    def pooled(self) -> tuple[int, int]:
        return self.width // self.pool, self.height // self.pool

    @property
    def n_pool(self) -> int:
        pw, ph = self.pooled
        return pw * ph

    def layer_sizes(self) -> dict[str, int]:
        return {"P": self.n_p, "S": self.n_p, "IP": self.n_pool, "IS": self.n_pool, "LGMD": 1}

    def to_dict(self) -> dict:
        return {
            "width": self.width, "height": self.height, "pool": self.pool,
            "a_ring": [list(e) for e in self.a_ring], "b_ring": [list(e) for e in self.b_ring],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Topology":
        return cls(**d)


# --------------------------------------------------------------------------
# Construction

E, IA, IB = 0, 1, 2


@dataclass
class Network:
    topology: Topology
    params: ParamVector
    variant: Variant
    consts: NeuronConstants
    clamp_c: float
    offsets: dict[str, int]
    pre_ptr: np.ndarray
    post: np.ndarray
    kind: np.ndarray
    charge: np.ndarray
    plastic_id: np.ndarray
    plastic_post_ptr: np.ndarray
    plastic_post_syn: np.ndarray
    n_plastic: int
    group_counts: dict[str, int]

    @property
    def n_neurons(self) -> int:
        return sum(self.topology.layer_sizes().values())

    @property
    def n_synapses(self) -> int:
        return len(self.post)

    @property
    def lgmd_index(self) -> int:
        return self.offsets["LGMD"]

    def stdp_params(self) -> plasticity.StdpParams | None:
        if not self.variant.plastic:
            return None
        p = self.params
        return plasticity.StdpParams(p.tau_pre, p.tau_post, p.Delta_pre, p.Delta_post, self.clamp_c)

    def layer_of(self, index: int) -> str:
        for name in reversed(LAYERS):
            if index >= self.offsets[name]:
                return name
        raise IndexError(index)


def _pool_targets(topo: Topology, src_offset, dst_offset):
    n = topo.n_p
    idx = np.arange(n)
    x, y = idx % topo.width, idx // topo.width
    pw = topo.width // topo.pool
    return src_offset + idx, dst_offset + (y // topo.pool) * pw + x // topo.pool


def _ring_synapses(topo: Topology, ring, src_offset, dst_offset):
    pre, post, weight = [], [], []
    idx = np.arange(topo.n_p)
    x, y = idx % topo.width, idx // topo.width
    for dx, dy, w in ring:
        tx, ty = x + dx, y + dy
        ok = (tx >= 0) & (tx < topo.width) & (ty >= 0) & (ty < topo.height)
        pre.append(src_offset + idx[ok])
        post.append(dst_offset + ty[ok] * topo.width + tx[ok])
        weight.append(np.full(ok.sum(), w))
    if not ring:
        return np.zeros(0, int), np.zeros(0, int), np.zeros(0)
    return np.concatenate(pre), np.concatenate(post), np.concatenate(weight)


def build(params: ParamVector, topo: Topology = Topology(), variant=Variant.LGMD,
          consts: NeuronConstants = NeuronConstants(), clamp_c: float = REFERENCE_CLAMP) -> Network:
    """Wire the five layers for ``params``; see the module docstring."""
    variant = Variant(variant)
    if variant.adaptive and not params.has_adaptation:
        raise ConfigError(f"variant {variant.value} needs the adaptation block (a, b, tau_w)")
    if variant.plastic and not params.has_plasticity:
        raise ConfigError(f"variant {variant.value} needs the plasticity block")
    if variant.plastic and not 0.0 <= clamp_c <= 1.0:
        raise ConfigError("clamp c must lie in [0, 1]")
    p = params
    sizes = topo.layer_sizes()
    offsets, pos = {}, 0
    for name in LAYERS:
        offsets[name] = pos
        pos += sizes[name]

    groups = []  # (name, pre, post, kind, charge, plastic)
    idx = np.arange(topo.n_p)
    groups.append(("P->S exc", offsets["P"] + idx, offsets["S"] + idx, E, np.full(topo.n_p, p.q_eS), False))
    pre, post, w = _ring_synapses(topo, topo.a_ring, offsets["P"], offsets["S"])
    groups.append(("P->S inhA", pre, post, IA, p.inhA_S * p.q_eS * w, False))
    pre, post, w = _ring_synapses(topo, topo.b_ring, offsets["P"], offsets["S"])
    groups.append(("P->S inhB", pre, post, IB, p.inhB_S * p.q_eS * w, False))
    pre, post = _pool_targets(topo, offsets["P"], offsets["IP"])
    groups.append(("P->IP exc", pre, post, E, np.full(topo.n_p, p.q_eIP), False))
    pre, post = _pool_targets(topo, offsets["S"], offsets["IS"])
    groups.append(("S->IS exc", pre, post, E, np.full(topo.n_p, p.q_eIS), variant.plastic))
    pool_idx = np.arange(topo.n_pool)
    lgmd = np.full(topo.n_pool, offsets["LGMD"])
    groups.append(("IS->LGMD exc", offsets["IS"] + pool_idx, lgmd, E, np.full(topo.n_pool, p.q_eL), variant.plastic))
    groups.append(("IP->LGMD inhA", offsets["IP"] + pool_idx, lgmd, IA, np.full(topo.n_pool, p.inhA_L * p.q_eL), False))

    pre = np.concatenate([g[1] for g in groups]).astype(np.int64)
    post = np.concatenate([g[2] for g in groups]).astype(np.int64)
    kind = np.concatenate([np.full(len(g[1]), g[3]) for g in groups]).astype(np.int8)
    charge = np.concatenate([g[4] for g in groups]).astype(np.float64)
    plastic = np.concatenate([np.full(len(g[1]), g[5]) for g in groups])

    order = np.argsort(pre, kind="stable")
    pre, post, kind, charge, plastic = pre[order], post[order], kind[order], charge[order], plastic[order]
    pre_ptr = np.zeros(pos + 1, dtype=np.int64)
    np.add.at(pre_ptr, pre + 1, 1)
    pre_ptr = np.cumsum(pre_ptr)

    plastic_id = np.full(len(pre), -1, dtype=np.int64)
    n_plastic = int(plastic.sum())
    plastic_id[plastic] = np.arange(n_plastic)
    # incoming plastic synapses grouped by postsynaptic neuron
    p_post = post[plastic]
    p_order = np.argsort(p_post, kind="stable")
    plastic_post_syn = np.arange(n_plastic, dtype=np.int64)[p_order]
    plastic_post_ptr = np.zeros(pos + 1, dtype=np.int64)
    np.add.at(plastic_post_ptr, p_post + 1, 1)
    plastic_post_ptr = np.cumsum(plastic_post_ptr)

    return Network(
        topology=topo, params=params, variant=variant, consts=consts, clamp_c=float(clamp_c),
        offsets=offsets, pre_ptr=pre_ptr, post=post, kind=kind, charge=charge,
        plastic_id=plastic_id, plastic_post_ptr=plastic_post_ptr, plastic_post_syn=plastic_post_syn,
        n_plastic=n_plastic, group_counts={g[0]: len(g[1]) for g in groups},
    )


# --------------------------------------------------------------------------
# Simulation


@dataclass
class SimResult:
    lgmd_spike_times: np.ndarray
    lgmd_voltage: np.ndarray
    dt: float = DT
    rasters: dict[str, tuple[np.ndarray, np.ndarray]] | None = None
    layer_spike_counts: dict[str, int] | None = None
    weights: np.ndarray | None = None

    @property
    def n_steps(self) -> int:
        return len(self.lgmd_voltage)

    @property
    def spike_steps(self) -> np.ndarray:
        return np.rint(self.lgmd_spike_times / self.dt).astype(np.int64)


# Below these magnitudes a neuron is snapped to exact rest and skipped until its next input.
QUIESCENT_V = 1e-2
QUIESCENT_I = 1e-1


@numba.njit(cache=True)
def _wake(i, active, alist, n_active):
    if not active[i]:
        active[i] = True
        alist[n_active] = i
        return n_active + 1
    return n_active


@numba.njit(cache=True)
def _run(n_steps, ev_step, ev_neuron, q_in,
         V, I_e, I_iA, I_iB, I_ad,
         g_L, E_L, V_T, V_r, V_peak, exp_rest, gl_delta, inv_delta, dt_over_C,
         k_e, k_iA, k_iB, a, b, dt_over_tau_w, adapt_out, dt,
         pre_ptr, post, kind, charge, plastic_id,
         w, A_pre, A_post, last, post_ptr, post_syn,
         tau_pre, tau_post, d_pre, d_post, w_lo, w_hi,
         v_trace, out_spike, layer_id, layer_counts,
         rec_step, rec_neuron, record):
    n = V.shape[0]
    out = n - 1
    active = np.zeros(n, dtype=np.bool_)
    alist = np.empty(n, dtype=np.int64)
    n_active = 0
    prev = np.empty(n, dtype=np.int64)
    n_prev = 0
    ev = 0
    n_ev = ev_step.shape[0]
    n_rec = 0
    cap = rec_step.shape[0]
    for step in range(n_steps):
        while ev < n_ev and ev_step[ev] == step:
            j = ev_neuron[ev]
            I_e[j] += q_in
            n_active = _wake(j, active, alist, n_active)
            ev += 1
        t_spike = (step - 1) * dt
        for k in range(n_prev):
            j = prev[k]
            for s in range(pre_ptr[j], pre_ptr[j + 1]):
                amount = charge[s]
                pid = plastic_id[s]
                if pid >= 0:
                    A_pre[pid], A_post[pid] = plasticity.decay(
                        A_pre[pid], A_post[pid], t_spike - last[pid], tau_pre, tau_post)
                    last[pid] = t_spike
                    amount = w[pid] * amount
                    w[pid], A_pre[pid] = plasticity.pre_update(w[pid], A_pre[pid], A_post[pid], d_pre, w_lo, w_hi)
                tgt = post[s]
                if kind[s] == 0:
                    I_e[tgt] += amount
                elif kind[s] == 1:
                    I_iA[tgt] += amount
                else:
                    I_iB[tgt] += amount
                n_active = _wake(tgt, active, alist, n_active)
        for k in range(n_prev):
            j = prev[k]
            for m in range(post_ptr[j], post_ptr[j + 1]):
                pid = post_syn[m]
                A_pre[pid], A_post[pid] = plasticity.decay(
                    A_pre[pid], A_post[pid], t_spike - last[pid], tau_pre, tau_post)
                last[pid] = t_spike
                w[pid], A_post[pid] = plasticity.post_update(w[pid], A_pre[pid], A_post[pid], d_post, w_lo, w_hi)

        n_prev = 0
        kept = 0
        v_trace[step] = V[out]
        for k in range(n_active):
            i = alist[k]
            if i == out:
                spk, rec, ok = update_neuron(i, V, I_e, I_iA, I_iB, I_ad, g_L, E_L, V_T, V_r, V_peak, exp_rest,
                                             gl_delta, inv_delta, dt_over_C, k_e, k_iA, k_iB,
                                             a, b, dt_over_tau_w, adapt_out)
                v_trace[step] = rec
                out_spike[step] = spk
            else:
                spk, rec, ok = update_neuron(i, V, I_e, I_iA, I_iB, I_ad, g_L, E_L, V_T, V_r, V_peak, exp_rest,
                                             gl_delta, inv_delta, dt_over_C, k_e, k_iA, k_iB,
                                             0.0, 0.0, 0.0, False)
            if not ok:
                return step, i
            if spk:
                prev[n_prev] = i
                n_prev += 1
                layer_counts[layer_id[i]] += 1
                if record:
                    if n_rec < cap:
                        rec_step[n_rec] = step
                        rec_neuron[n_rec] = i
                    n_rec += 1
            if (not spk and abs(V[i] - E_L) < QUIESCENT_V and abs(I_e[i]) < QUIESCENT_I
                    and abs(I_iA[i]) < QUIESCENT_I and abs(I_iB[i]) < QUIESCENT_I
                    and abs(I_ad[i]) < QUIESCENT_I):
                V[i] = E_L
                I_e[i] = 0.0
                I_iA[i] = 0.0
                I_iB[i] = 0.0
                I_ad[i] = 0.0
                active[i] = False
            else:
                alist[kept] = i
                kept += 1
        n_active = kept
    return -1, n_rec


def event_steps(t_us: np.ndarray, dt: float = DT) -> np.ndarray:
    """Integration step receiving each event: events in ``(t, t + dt]`` land in step ``t / dt``."""
    dt_us = int(round(dt * 1000))
    return np.maximum((np.asarray(t_us, dtype=np.int64) + dt_us - 1) // dt_us - 1, 0)


def simulate(network: Network, stream: EventStream, record_rasters: bool = False,
             dt: float = DT) -> SimResult:
    """Run the network over ``stream`` from rest; deterministic."""
    topo = network.topology
    if (stream.width, stream.height) != (topo.width, topo.height):
        raise GridMismatch(
            f"stream is {stream.width}x{stream.height}, P layer is {topo.width}x{topo.height}; pool first"
        )
    dt_us = int(round(dt * 1000))
    n_steps = -(-stream.duration // dt_us)
    steps = event_steps(stream.t, dt)
    keep = steps < n_steps
    ev_step = np.ascontiguousarray(steps[keep])
    ev_neuron = (stream.y[keep].astype(np.int64) * topo.width + stream.x[keep]) + network.offsets["P"]

    c, p = network.consts, network.params
    n = network.n_neurons
    V = np.full(n, c.E_L)
    I_e, I_iA, I_iB, I_ad = (np.zeros(n) for _ in range(4))
    n_pl = max(network.n_plastic, 0)
    w = np.ones(n_pl)
    A_pre, A_post, last = np.zeros(n_pl), np.zeros(n_pl), np.zeros(n_pl)
    stdp = network.stdp_params()
    if stdp is None:
        tau_pre = tau_post = 1.0
        d_pre = d_post = 0.0
        w_lo = w_hi = 1.0
    else:
        tau_pre, tau_post, d_pre, d_post = stdp.tau_pre, stdp.tau_post, stdp.Delta_pre, stdp.Delta_post
        w_lo, w_hi = 1.0 - stdp.c, 1.0 + stdp.c
    adapt = network.variant.adaptive
    a, b, tau_w = (p.a, p.b, p.tau_w) if adapt else (0.0, 0.0, 1.0)

    v_trace = np.empty(n_steps)
    out_spike = np.zeros(n_steps, dtype=np.bool_)
    bounds = np.array([network.offsets[name] for name in LAYERS] + [n], dtype=np.int64)
    layer_id = np.repeat(np.arange(len(LAYERS), dtype=np.int64), np.diff(bounds))
    counts = np.zeros(len(LAYERS), dtype=np.int64)
    cap = 1 << 20 if record_rasters else 0
    while True:
        rec_step = np.empty(cap, dtype=np.int64)
        rec_neuron = np.empty(cap, dtype=np.int64)
        args = (
            n_steps, ev_step, ev_neuron, float(p.q_eP),
            V.copy(), I_e.copy(), I_iA.copy(), I_iB.copy(), I_ad.copy(),
            *kernel_constants(c, dt),
            1.0 - dt / p.tau_e, 1.0 - dt / p.tau_iA, 1.0 - dt / p.tau_iB,
            float(a), float(b), dt / float(tau_w), adapt, dt,
            network.pre_ptr, network.post, network.kind, network.charge, network.plastic_id,
            w, A_pre, A_post, last, network.plastic_post_ptr, network.plastic_post_syn,
            float(tau_pre), float(tau_post), float(d_pre), float(d_post), float(w_lo), float(w_hi),
            v_trace, out_spike, layer_id, counts, rec_step, rec_neuron, record_rasters,
        )
        w[:], A_pre[:], A_post[:], last[:] = 1.0, 0.0, 0.0, 0.0
        counts[:] = 0
        err_step, info = _run(*args)
        if err_step >= 0:
            raise NumericalBlowup(int(info), time=err_step * dt, layer=network.layer_of(int(info)))
        if not record_rasters or info <= cap:
            break
        cap = int(info)

    rasters = None
    if record_rasters:
        rec_step, rec_neuron = rec_step[:info], rec_neuron[:info]
        rasters = {}
        for k, name in enumerate(LAYERS):
            sel = (rec_neuron >= bounds[k]) & (rec_neuron < bounds[k + 1])
            rasters[name] = (rec_step[sel] * dt, rec_neuron[sel] - bounds[k])
    return SimResult(
        lgmd_spike_times=np.nonzero(out_spike)[0] * dt,
        lgmd_voltage=v_trace,
        dt=dt,
        rasters=rasters,
        layer_spike_counts={name: int(k) for name, k in zip(LAYERS, counts)},
        weights=w.copy() if network.n_plastic else None,
    )


# --------------------------------------------------------------------------
# JSON config


def network_config(params: ParamVector, topo: Topology = Topology(), variant=Variant.LGMD,
                   consts: NeuronConstants = NeuronConstants(), clamp_c: float = REFERENCE_CLAMP) -> dict:
    return {
        "topology": topo.to_dict(),
        "variant": Variant(variant).value,
        "neuron": asdict(consts),
        "params": params.to_dict(),
        "clamp_c": clamp_c,
    }


def load_network_config(cfg) -> tuple[ParamVector, Topology, Variant, NeuronConstants, float]:
    """Read a network config (dict, JSON text or path) into build() arguments."""
    if isinstance(cfg, os.PathLike) or (isinstance(cfg, (str, bytes)) and not str(cfg).lstrip().startswith("{")):
        with open(cfg, encoding="utf-8") as fh:
            cfg = json.load(fh)
    elif isinstance(cfg, (str, bytes)):
        cfg = json.loads(cfg)
    try:
        variant = Variant(cfg.get("variant", "LGMD"))
        topo = Topology.from_dict(cfg.get("topology", {}))
        consts = NeuronConstants(**cfg.get("neuron", {}))
        params = ParamVector.from_dict(cfg["params"])
        clamp_c = float(cfg.get("clamp_c", REFERENCE_CLAMP))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad network config: {exc}") from None
    return params, topo, variant, consts, clamp_c
