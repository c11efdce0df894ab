"""
Optimisers on a sphere
======================

Every optimiser maximises, so the sphere is negated. Campaigns stop on
budget or after ten population-sizes of evaluations without improvement.
"""

# %%

import numpy as np

from lgmdopt.optimize import DeConfig, run_campaign


def neg_sphere(x):
    return -float(np.sum(np.square(x)))


box = np.array([[-5.0, 5.0]] * 3)

# %%
# Evolutionary methods and the uniform baseline get 2000 evaluations.

for method, kw in [("DE", dict(NP=10, de_config=DeConfig(NP=10))), ("SADE", dict(LP=3)), ("RNG", {})]:
    res = run_campaign(method, neg_sphere, box, seed=0, budget=2000, **kw)
    print(f"{method:5s} {res.n_evals:5d} evals ({res.stop_reason})  best {res.best_fitness:.3e}")

# %%
# BO spends far fewer evaluations; each one costs a GP fit.

res = run_campaign("BO_EI", neg_sphere, box[:2], seed=0, budget=60)
print(f"BO_EI {res.n_evals:5d} evals ({res.stop_reason})  best {res.best_fitness:.3e}")

# %%
# The trace gives best-so-far against evaluation count, ready to plot.

n, best = res.trace()
for k in (0, 10, 20, len(n) - 1):
    print(n[k], best[k])
