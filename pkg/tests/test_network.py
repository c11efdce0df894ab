import json
import math

import numpy as np
import pytest

from lgmdopt.errors import ConfigError, GridMismatch, NumericalBlowup
from lgmdopt.events import EventStream, Label, Motion, Shape, StimulusSpec, pool_to_grid, synthesize
from lgmdopt.network import (ADAPT_NAMES, PARAM_BOUNDS, REFERENCE_PARAMS, Bounds, ParamVector, Topology, Variant,
                             assign_inhibition_weights, build, chebyshev_ring, clip_to_bounds, default_ring,
                             load_network_config, network_config, simulate)
from lgmdopt.neuron import NeuronConstants
from lgmdopt.objective import mean_rates_by_label, segment_rates

REF = REFERENCE_PARAMS[Variant.LGMD]


def with_(p: ParamVector, **kw) -> ParamVector:
    return ParamVector(**{**p.to_dict(), **kw})


# ---------------------------------------------------------------- parameters

def test_clip_examples():
    assert clip_to_bounds(with_(REF, tau_e=15.0)).tau_e == 10.0
    assert clip_to_bounds(with_(REF, tau_e=-3.0)).tau_e == 1.0
    assert clip_to_bounds(REF) == REF


def test_clip_every_component_into_box():
    raw = ParamVector.from_array(np.full(11, 1e9))
    clipped = clip_to_bounds(raw).to_array()
    assert np.array_equal(clipped, Bounds.for_variant("LGMD").upper)


def test_bounds_shape():
    b = Bounds.for_variant(Variant.AP)
    assert b.dim == 18 and np.all(b.lower < b.upper)
    assert Bounds.for_variant(Variant.A).names[-3:] == ADAPT_NAMES
    assert set(PARAM_BOUNDS) == set(Bounds.for_variant(Variant.AP).names)


def test_param_vector_roundtrip():
    p = REFERENCE_PARAMS[Variant.AP]
    assert ParamVector.from_dict(p.to_dict()) == p
    assert ParamVector.from_array(p.to_array(), p.names()) == p
    with pytest.raises(ConfigError):
        ParamVector.from_dict({"tau_e": 1.0})
    with pytest.raises(ConfigError):
        ParamVector.from_dict({**REF.to_dict(), "bogus": 1.0})


# ---------------------------------------------------------------- topology

def test_inhibition_weights():
    w = assign_inhibition_weights(chebyshev_ring(1) + chebyshev_ring(2))
    assert w[(1, 0)] == 1.0
    assert w[(1, 1)] == pytest.approx(1 / math.sqrt(2))
    assert w[(2, 0)] == 0.5
    with pytest.raises(ConfigError):
        assign_inhibition_weights([(0, 0)])


def test_rings():
    assert len(chebyshev_ring(1)) == 8 and len(chebyshev_ring(2)) == 16
    for r in (1, 2):
        ring = default_ring(r)
        assert sum(w for *_, w in ring) == pytest.approx(1.0)
        raw = assign_inhibition_weights([(dx, dy) for dx, dy, _ in ring])
        # proportional to inverse distance
        ratios = {w / raw[(dx, dy)] for dx, dy, w in ring}
        assert max(ratios) - min(ratios) < 1e-12


def test_topology_validation():
    with pytest.raises(GridMismatch):
        Topology(width=10, height=10, pool=4)
    with pytest.raises(ConfigError):
        Topology(a_ring=((1, 0, 1.0), (1, 0, 0.5)))
    with pytest.raises(ConfigError):
        Topology(a_ring=((0, 0, 1.0),))


def _ring_pairs(W, H, ring):
    # enumerate every (pre, post) pair the kernel can form inside the grid
    return sum((W - abs(dx)) * (H - abs(dy)) for dx, dy, _ in ring)


@pytest.mark.parametrize("W,H,pool", [(32, 32, 4), (8, 8, 4), (12, 8, 2)])
def test_synapse_counts(W, H, pool):
    topo = Topology(width=W, height=H, pool=pool)
    net = build(REF, topo)
    g = net.group_counts
    n_pool = (W // pool) * (H // pool)
    assert g["P->S exc"] == W * H
    assert g["P->S inhA"] == _ring_pairs(W, H, topo.a_ring)
    assert g["P->S inhB"] == _ring_pairs(W, H, topo.b_ring)
    assert g["P->IP exc"] == g["S->IS exc"] == W * H
    assert g["IS->LGMD exc"] == g["IP->LGMD inhA"] == n_pool
    assert net.n_synapses == sum(g.values())
    assert net.n_neurons == 2 * W * H + 2 * n_pool + 1


def test_small_grid_pooling():
    topo = Topology(width=8, height=8, pool=4)
    assert topo.pooled == (2, 2)
    assert build(REF, topo).group_counts["P->IP exc"] == 64


def test_every_p_neuron_fans_out_per_kernel():
    topo = Topology()
    net = build(REF, topo)
    P0, S0 = net.offsets["P"], net.offsets["S"]
    for idx in range(topo.n_p):
        x, y = idx % topo.width, idx // topo.width
        lo, hi = net.pre_ptr[P0 + idx], net.pre_ptr[P0 + idx + 1]
        to_s = np.sum((net.post[lo:hi] >= S0) & (net.post[lo:hi] < S0 + topo.n_p))
        inside = lambda ring: sum(0 <= x + dx < topo.width and 0 <= y + dy < topo.height for dx, dy, _ in ring)
        assert to_s == 1 + inside(topo.a_ring) + inside(topo.b_ring)


def test_build_charges():
    net = build(REF)
    P0, S0 = net.offsets["P"], net.offsets["S"]
    lo, hi = net.pre_ptr[P0 + 100], net.pre_ptr[P0 + 101]
    exc = (net.post[lo:hi] == S0 + 100)
    assert net.charge[lo:hi][exc][0] == REF.q_eS
    assert net.charge[lo:hi][net.kind[lo:hi] == 1].sum() == pytest.approx(REF.inhA_S * REF.q_eS)


def test_variant_needs_blocks():
    with pytest.raises(ConfigError):
        build(REF, variant=Variant.A)
    with pytest.raises(ConfigError):
        build(REF, variant=Variant.P)
    build(REFERENCE_PARAMS[Variant.AP], variant="AP")


def test_plastic_groups():
    net = build(REFERENCE_PARAMS[Variant.P], variant=Variant.P)
    g = net.group_counts
    assert net.n_plastic == g["S->IS exc"] + g["IS->LGMD exc"]
    assert build(REF).n_plastic == 0


# ---------------------------------------------------------------- simulation

@pytest.fixture(scope="module")
def looms32():
    streams = []
    for rate, seed in ((300.0, 1), (600.0, 2), (1200.0, 3)):
        spec = StimulusSpec(Shape.CIRCLE, Motion.LOOM, rate, 150_000, size=8.0, events_per_change=8)
        streams.append(pool_to_grid(synthesize(spec, seed)[0], 32, 32))
    return streams


def test_empty_stream_rests():
    net = build(REF)
    res = simulate(net, EventStream(32, 32, duration=50_000))
    assert len(res.lgmd_spike_times) == 0
    assert res.n_steps == 500
    assert np.max(np.abs(res.lgmd_voltage - NeuronConstants().E_L)) < 1e-6


def test_zero_output_gain_is_silent(looms32):
    net = build(with_(REF, q_eL=0.0))
    for s in looms32:
        assert len(simulate(net, s).lgmd_spike_times) == 0


def test_stream_must_match_grid():
    with pytest.raises(GridMismatch):
        simulate(build(REF), EventStream(64, 64, duration=10))


def test_determinism(looms32):
    net = build(REFERENCE_PARAMS[Variant.AP], variant=Variant.AP)
    a, b = simulate(net, looms32[1]), simulate(net, looms32[1])
    assert np.array_equal(a.lgmd_spike_times, b.lgmd_spike_times)
    assert np.array_equal(a.lgmd_voltage, b.lgmd_voltage)
    assert np.array_equal(a.weights, b.weights)


def test_spike_times_strictly_increasing(looms32):
    res = simulate(build(with_(REF, q_eL=400.0)), looms32[2])
    assert len(res.lgmd_spike_times) > 0
    assert np.all(np.diff(res.lgmd_spike_times) > 0)


def test_monotone_gain(looms32):
    for s in looms32:
        counts = [len(simulate(build(with_(REF, q_eL=g)), s).lgmd_spike_times) for g in (40, 80, 160, 320, 472)]
        assert all(a <= b for a, b in zip(counts, counts[1:])), counts


def test_rasters(looms32):
    res = simulate(build(REF), looms32[0], record_rasters=True)
    for name in ("P", "S", "IP", "IS", "LGMD"):
        t, idx = res.rasters[name]
        assert len(t) == res.layer_spike_counts[name]
    assert np.array_equal(res.rasters["LGMD"][0], res.lgmd_spike_times)
    assert res.layer_spike_counts["P"] > 0


def test_blowup_names_layer(looms32):
    net = build(with_(REF, q_eS=1e308, inhA_S=0.04, inhB_S=0.24))
    net.charge[:] = np.where(net.charge > 1e300, np.inf, net.charge)
    with pytest.raises(NumericalBlowup) as info:
        simulate(net, looms32[0])
    assert info.value.layer == "S"


def test_reference_params_prefer_looms(composite32):
    stream, labels = composite32
    res = simulate(build(REF), stream)
    rates = mean_rates_by_label(res.lgmd_spike_times, labels)
    assert rates[Label.LOOMING] > rates[Label.NON_LOOMING]
    per = segment_rates(res.lgmd_spike_times, labels)
    assert len(per) == 16


def test_reference_peak_rate_loom_above_translation(composite32):
    from lgmdopt.objective import sliding_rate

    stream, labels = composite32
    res = simulate(build(REF), stream)
    sr = sliding_rate(res.lgmd_spike_times, res.n_steps, res.dt)
    peak = {"loom": 0, "translate": 0}
    for k, (s, e, lab) in enumerate(labels.intervals):
        seg = sr[s // 100:e // 100].max()
        if lab is Label.LOOMING:
            peak["loom"] = max(peak["loom"], seg)
        elif k % 4 == 3:  # translations sit at every other non-loom slot
            peak["translate"] = max(peak["translate"], seg)
    assert peak["loom"] > peak["translate"]


# ---------------------------------------------------------------- config

def test_network_config_roundtrip(tmp_path):
    p = REFERENCE_PARAMS[Variant.A]
    cfg = network_config(p, Topology(width=16, height=16), Variant.A, clamp_c=0.3)
    path = tmp_path / "net.json"
    path.write_text(json.dumps(cfg))
    params, topo, variant, consts, clamp = load_network_config(str(path))
    assert params == p and variant is Variant.A and clamp == 0.3
    assert topo == Topology(width=16, height=16) and consts == NeuronConstants()
    assert load_network_config(json.dumps(cfg))[0] == p


def test_network_config_errors():
    with pytest.raises(ConfigError):
        load_network_config({"params": {"tau_e": 1}})
    with pytest.raises(ConfigError):
        load_network_config({"params": REF.to_dict(), "variant": "Q"})
