"""
Plastic synapses and the clamp
==============================

The P variant makes the photoreceptor synapses plastic, with weights held
in [1 - c, 1 + c]. At c = 0 it reduces exactly to the plain network.
"""

# %%

import numpy as np

from lgmdopt import REFERENCE_PARAMS, Variant, build, pool_to_grid, simulate, synthesize_composite
from lgmdopt.objective import evaluate

stream, labels = synthesize_composite(seed=0)
stream = pool_to_grid(stream, 32, 32)
params = REFERENCE_PARAMS[Variant.P]

# %%

plain = simulate(build(params, variant=Variant.LGMD), stream)
for c in (0.0, 0.05, 0.25, 0.5, 1.0):
    res = simulate(build(params, variant=Variant.P, clamp_c=c), stream)
    rep = evaluate(res, labels)
    same = np.array_equal(res.lgmd_voltage, plain.lgmd_voltage)
    w = res.weights
    spread = f"w in [{w.min():.3f}, {w.max():.3f}]" if w is not None and len(w) else ""
    print(f"c={c:<5g} spikes {len(res.lgmd_spike_times):4d}  Acc {rep.Acc:.2f}  same as plain: {same}  {spread}")
