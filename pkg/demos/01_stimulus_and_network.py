"""
Stimulus and network
====================

Build the synthetic composite, pool it onto the 32x32 input grid and run
the reference LGMD network over it.
"""

# %%
# The composite alternates eight looms with eight distractors (shrinking
# discs and discs sweeping across the field).

import numpy as np

from lgmdopt import REFERENCE_PARAMS, Label, Variant, build, pool_to_grid, simulate, synthesize_composite
from lgmdopt.objective import evaluate, segment_rates

stream, labels = synthesize_composite(seed=0)
print(f"{len(stream)} events, {stream.duration / 1e6:.2f} s, {stream.width}x{stream.height}")
for start, end, lab in labels.intervals[:4]:
    print(f"  {start / 1e3:8.1f} .. {end / 1e3:8.1f} ms  {lab.value}")

# %%
# Pool to the network's photoreceptor grid. Counts add up, so nothing is lost.

small = pool_to_grid(stream, 32, 32)
print("pooled events:", len(small))

# %%
# Simulate. Spike counts per layer show how activity thins out towards the
# output neuron.

net = build(REFERENCE_PARAMS[Variant.LGMD])
result = simulate(net, small)
for layer, n in result.layer_spike_counts.items():
    print(f"  {layer:>5}: {n} spikes")

# %%
# Mean spike rate per segment. Looms should drive the output harder than
# the distractors.

for lab, rate in segment_rates(result.lgmd_spike_times, labels):
    print(f"  {lab.value:8s} {rate:6.3f}")
loom = np.mean([r for lab, r in segment_rates(result.lgmd_spike_times, labels) if lab is Label.LOOMING])
print("mean loom rate:", round(float(loom), 3))

# %%
# The full report: confusion counts, the four metrics and the fitness terms.

print(evaluate(result, labels).to_json(indent=1))
