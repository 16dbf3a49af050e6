# %% [markdown]
# # Does the product form match the physical system?
#
# The analytic answer rests on an approximation of the blocking behaviour, so
# simulate the real thing: lost customers at empty stations, bikes that keep
# riding until they find a free dock.
#
# Pass a smaller event budget on the command line for a quick look, e.g.
# `python demos/simulation_check.py 200000`.

# %%
import sys

import numpy as np

from bikeshare_cqn import SimConfig, simulate, solve_fixed_point
from bikeshare_cqn.config import load_config
from bikeshare_cqn.model import validate_model

events = int(sys.argv[1]) if len(sys.argv) > 1 else 1_250_000
model = validate_model(load_config("fixtures/example_four_lambda5.json").model)

analytic = solve_fixed_point(model).pi
rep = simulate(model, SimConfig(events=events, replications=10, seed=2024))

# %%
hw = rep.half_width["full_prob"]
for i in range(model.N):
    print(f"station {i + 1}: analytic {analytic[i]:.4f}  simulated {rep.full_prob[i]:.4f} ± {hw[i]:.4f}")
print("arrival rate:", rep.arrival_rate.round(4), "expected:", rep.map_rate.round(4))
print("blocked returns per docking:", round(rep.counters["blocked_returns"] / rep.counters["docked"], 4))
print("largest gap:", round(float(np.abs(rep.full_prob - analytic).max()), 4))
