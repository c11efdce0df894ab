import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lgmdopt.errors import NumericalBlowup
from lgmdopt.neuron import (DT, AdaptationParams, Current, LayerState, NeuronConstants, inject, step_layer)

C = NeuronConstants()
TAUS = {"tau_e": 5.0, "tau_iA": 3.57, "tau_iB": 4.2}


def run(state, n, taus=TAUS, adapt=AdaptationParams(), consts=C):
    out = []
    for _ in range(n):
        spk = step_layer(state, consts, taus, adapt)
        out.append((state.V.copy(), state.I_e.copy(), spk.copy()))
    return out


def test_rest_is_nearly_fixed():
    s = LayerState.at_rest(1)
    step_layer(s, C, TAUS)
    assert abs(s.V[0] - C.E_L) < 1e-3


def test_current_one_step():
    s = LayerState.at_rest(1)
    s.I_e[0] = 100.0
    step_layer(s, C, TAUS)
    assert s.I_e[0] == pytest.approx(98.0, abs=1e-12)


def test_one_step_by_hand():
    # one explicit Euler step of the membrane equation, written out in full
    s = LayerState.at_rest(1)
    s.V[0], s.I_e[0], s.I_iA[0], s.I_iB[0] = -60.0, 300.0, 40.0, 10.0
    I = 300.0 - 40.0 - 10.0
    expo = C.g_L * C.Delta_T * (math.exp((-60.0 - C.V_T) / C.Delta_T) - math.exp((C.E_L - C.V_T) / C.Delta_T))
    dv = (-C.g_L * (-60.0 - C.E_L) + expo + I) / C.C
    step_layer(s, C, TAUS)
    assert s.V[0] == pytest.approx(-60.0 + DT * dv, abs=1e-12)
    assert s.I_iA[0] == pytest.approx(40.0 * (1 - DT / TAUS["tau_iA"]))


def test_spike_and_reset():
    s = LayerState.at_rest(2)
    s.V[0] = C.V_T + 1.0
    adapt = AdaptationParams(a=0.0, b=14.51, tau_w=30.0, enabled=True)
    spk = step_layer(s, C, TAUS, adapt)
    assert spk.tolist() == [True, False]
    assert s.V[0] == C.V_r
    assert s.I_adapt[0] == pytest.approx(14.51)
    assert s.I_adapt[1] == 0.0


def test_adaptation_off_holds_zero():
    s = LayerState.at_rest(1)
    s.V[0] = C.V_T + 1.0
    step_layer(s, C, TAUS, AdaptationParams(a=2.0, b=50.0, tau_w=30.0, enabled=False))
    assert s.I_adapt[0] == 0.0


def test_subthreshold_adaptation_tracks_voltage():
    # I_ad relaxes towards a * (V - E_L) with time constant tau_w
    s = LayerState.at_rest(1)
    s.V[0] = C.E_L + 2.0
    step_layer(s, C, TAUS, AdaptationParams(a=3.0, b=0.0, tau_w=10.0, enabled=True))
    assert s.I_adapt[0] == pytest.approx(DT / 10.0 * 3.0 * 2.0)


def test_free_decay_matches_closed_form():
    s = LayerState.at_rest(1)
    s.V[0] = C.E_L + 5.0
    trace = np.array([v[0] for v, _, _ in run(s, 100)])
    t = np.arange(1, 101) * DT
    exact = C.E_L + 5.0 * np.exp(-t * C.g_L / C.C)
    # error measured against the initial 5 mV displacement
    assert np.max(np.abs(trace - exact)) / 5.0 < 0.01


@pytest.mark.parametrize("tau", [5.0, 10.0])
def test_current_decay_matches_exponential(tau):
    s = LayerState.at_rest(1)
    s.I_e[0] = 100.0
    n = int(round(5 * tau / DT))
    trace = np.array([i[0] for _, i, _ in run(s, n, {**TAUS, "tau_e": tau})])
    exact = 100.0 * np.exp(-np.arange(1, n + 1) * DT / tau)
    assert np.max(np.abs(trace - exact)) / 100.0 < 0.005


def test_strong_drive_spikes_repeatedly_and_stays_finite():
    s = LayerState.at_rest(1)
    spikes = 0
    for _ in range(2000):
        s.I_e[0] = 5000.0
        spikes += int(step_layer(s, C, TAUS)[0])
        assert np.isfinite(s.V).all()
    assert spikes > 10


def test_exp_argument_clipped():
    # far above threshold the exponential is capped, so one step stays finite
    s = LayerState.at_rest(1)
    s.V[0] = 1e4
    step_layer(s, C, TAUS)
    assert s.V[0] == C.V_r


def test_blowup_detected():
    s = LayerState.at_rest(3)
    s.I_e[2] = np.inf
    with pytest.raises(NumericalBlowup) as info:
        step_layer(s, C, TAUS)
    assert info.value.index == 2


def test_inject_additive_and_bounds():
    s = LayerState.at_rest(3)
    inject(s, 1, Current.E, 50.0)
    inject(s, 1, "E", 50.0)
    assert s.I_e[1] == 100.0
    before = s.copy()
    inject(s, 0, Current.IA, 0.0)
    assert np.array_equal(before.I_iA, s.I_iA)
    inject(s, 2, Current.IB, 1.0)
    with pytest.raises(IndexError):
        inject(s, 3, Current.IB, 1.0)
    with pytest.raises(ValueError):
        inject(s, 0, Current.E, -1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1e3), st.floats(0, 1e3))
def test_injection_linearity(a, b):
    s1, s2 = LayerState.at_rest(1), LayerState.at_rest(1)
    inject(s1, 0, Current.E, a)
    inject(s1, 0, Current.E, b)
    inject(s2, 0, Current.E, a + b)
    step_layer(s1, C, TAUS)
    step_layer(s2, C, TAUS)
    assert s1.V[0] == pytest.approx(s2.V[0], rel=1e-12, abs=1e-9)


def test_units_consistent():
    # nS * mV = pA and pA / pF = mV / ms: 1 nS leak over 1 mV on 1 pF moves V by dt mV per step
    consts = NeuronConstants(C=1.0, g_L=1.0, E_L=0.0, V_T=1e3, Delta_T=1.0)
    s = LayerState.at_rest(1, consts)
    s.V[0] = 1.0
    step_layer(s, consts, TAUS)
    assert s.V[0] == pytest.approx(1.0 - DT, abs=1e-9)


def test_layer_state_shape_check():
    with pytest.raises(ValueError):
        LayerState(np.zeros(3), np.zeros(2), np.zeros(3), np.zeros(3))


def test_constants_validation():
    with pytest.raises(ValueError):
        NeuronConstants(C=0.0)
    with pytest.raises(ValueError):
        AdaptationParams(tau_w=0.0, enabled=True)
    assert NeuronConstants().V_r == NeuronConstants().E_L
