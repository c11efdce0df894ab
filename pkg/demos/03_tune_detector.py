"""
Tuning the detector
===================

A short SADE campaign on the composite. The objective is F_acc: accuracy
gates a fitness built from reward, punishment and the membrane-trace error.
"""

# %%

from lgmdopt import LoomingObjective
from lgmdopt.optimize import run_campaign

obj = LoomingObjective.composite(seed=0)
print(len(obj.names), "parameters:", ", ".join(obj.names))

# %%
# A real campaign uses a couple of thousand evaluations; 150 is enough to
# see the population move.

res = run_campaign("SADE", obj, obj.bounds, seed=0, budget=150, NP=10, LP=3)
print(res.n_evals, "evaluations, best F_acc", res.best_fitness)

# %%
# Inspect the winner. The clipped ParamVector can be saved with
# ``network_config`` and reloaded by the CLI.

rep = obj.report(res.best_params)
print(f"Acc {rep.Acc:.2f}  Sen {rep.Sen:.2f}  Pre {rep.Pre:.2f}  Spe {rep.Spe:.2f}")
print(obj.params(res.best_params))
