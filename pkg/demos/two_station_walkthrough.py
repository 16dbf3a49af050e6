# %% [markdown]
# # Two stations, one fleet
#
# A walk through the whole pipeline on the smallest interesting system: two
# stations joined by a road in each direction, four bikes, three docks each.

# %%
import numpy as np

from bikeshare_cqn import (
    FixedPointConfig,
    build_routing_matrix,
    performance_report,
    solve_fixed_point,
    solve_relative_rates,
    state_count,
    validate_model,
)

model = validate_model({
    "N": 2, "C": 2, "K": 3,
    "stations": [{"lambda": [5.0, 7.0]}, {"lambda": [5.0, 5.0]}],
    "roads": [
        {"from": 1, "to": 2, "mu": 2.0, "xi": 4.0},
        {"from": 2, "to": 1, "mu": 3.0, "xi": 5.0},
    ],
    "p": {"1->2": 1.0, "2->1": 1.0},
    "alpha": {"1->2": 1.0, "2->1": 1.0},
})
print("states:", state_count(model))

# %% [markdown]
# The routing matrix depends on the probability that each station is full.
# Guess 10% everywhere and look at the visit ratios it implies.

# %%
P = build_routing_matrix(model, [0.1, 0.1])
np.set_printoptions(precision=3, suppress=True)
print(P.labels())
print(P.entries)
rates = solve_relative_rates(P)
print("visit ratios:", {lab: round(float(x), 4) for lab, x in zip(P.labels(), rates.vector)})

# %% [markdown]
# Solving for the self-consistent full-station probabilities closes the loop.

# %%
res = solve_fixed_point(model)
print(f"pi = {res.pi.round(5).tolist()} after {res.iterations} iterations (residual {res.residual:.1e})")

rep = performance_report(res.context, res.pi)
print("empty:", rep.empty_prob.round(4), "full:", rep.full_prob.round(4))
print("bikes parked:", rep.mean_station.round(3))
print("bikes riding:", {k: round(v, 3) for k, v in rep.mean_road.items()})
print("expected problematic stations:", round(rep.problematic, 4))

# %% [markdown]
# The road factor has two readings. The infinite-server one gives noticeably
# lower full-station probabilities on this system.

# %%
alt = solve_fixed_point(model, FixedPointConfig(convention="bcmp"))
print("bcmp pi =", alt.pi.round(5).tolist())
