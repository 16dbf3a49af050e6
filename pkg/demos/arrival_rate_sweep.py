# %% [markdown]
# # Busier station 1, fuller station 2
#
# Raise the first phase rate at station 1 from 5 to 9 and watch where the bikes
# pile up. More rentals at station 1 push bikes towards station 2.

# %%
import time

import numpy as np

from bikeshare_cqn import FixedPointConfig, solve_fixed_point, validate_model


def system(rate):
    return validate_model({
        "N": 2, "C": 2, "K": 3,
        "stations": [{"lambda": [rate, 7.0]}, {"lambda": [5.0, 5.0]}],
        "roads": [
            {"from": 1, "to": 2, "mu": 2.0, "xi": 4.0},
            {"from": 2, "to": 1, "mu": 3.0, "xi": 5.0},
        ],
        "p": {"1->2": 1.0, "2->1": 1.0},
        "alpha": {"1->2": 1.0, "2->1": 1.0},
    })


# %%
print(f"{'rate':>5} | {'paper pi1':>9} {'paper pi2':>9} | {'bcmp pi1':>9} {'bcmp pi2':>9} | secs")
rows = []
for rate in range(5, 10):
    model = system(rate)
    t0 = time.perf_counter()
    a = solve_fixed_point(model).pi
    b = solve_fixed_point(model, FixedPointConfig(convention="bcmp")).pi
    rows.append(np.concatenate([a, b]))
    print(f"{rate:>5} | {a[0]:9.5f} {a[1]:9.5f} | {b[0]:9.5f} {b[1]:9.5f} | {time.perf_counter() - t0:.3f}")

rows = np.array(rows)
print("station 1 falls:", bool((np.diff(rows[:, 0]) < 0).all()),
      "| station 2 rises:", bool((np.diff(rows[:, 1]) > 0).all()))
