"""Discrete-event simulation of the physical bike-sharing system.

This simulates the system itself, not the product-form network: users arrive
at each station according to its MAP, are lost when the station is empty,
otherwise ride to a neighbour; a rider who finds the destination full keeps
re-riding with the retrial probabilities and rates until a dock is free.

Random streams are split per station and per purpose. Replication ``r`` of
seed ``s`` uses ``SeedSequence(s).spawn(R)[r]``, which is spawned again into
three children per station: MAP transitions, road choice, ride durations
(for rides leaving that station).
"""

from __future__ import annotations

import heapq
import logging
import math
import random
from bisect import bisect_right
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import accumulate
from typing import Iterator, Optional

import numpy as np
from scipy import stats

from .errors import BikeShareError
from .model import MapDescriptor, map_stationary_vector
from .pathgraph import build_path_graph, is_irreducible

log = logging.getLogger(__name__)

REALIZATIONS = ("exponential", "cyclic", "poisson")


class FleetViolation(BikeShareError):
    pass


@dataclass(frozen=True)
class SimConfig:
    """``events`` is the per-replication event budget, warmup included."""

    events: int = 1_250_000
    warmup: float = 0.2
    seed: int = 0
    replications: int = 10
    lambda_realization: str = "exponential"
    workers: int = 1

    def __post_init__(self):
        if not 0 <= self.warmup <= 0.9:
            raise ValueError("warmup must lie in [0, 0.9]")
        if self.replications < 1:
            raise ValueError("need at least one replication")
        if self.events < 1:
            raise ValueError("events must be positive")
        if self.lambda_realization not in REALIZATIONS:
            raise ValueError(f"lambda_realization must be one of {REALIZATIONS}")

    @property
    def measured_events(self) -> int:
        return self.events - int(self.events * self.warmup)


def map_for_rates(lambda_vec, realization="exponential") -> MapDescriptor:
    """A MAP standing in for a station whose phase rates were given directly.

    ``exponential``: Poisson arrivals at ``1 / sum(1 / lambda_v)``, the single
    exponential server that the product-form station factor aggregates to once
    summed over phases. ``cyclic``: phases are visited in order, phase ``v`` lasts Exp(lambda_v)
    and a user arrives when the cycle closes, so the mean time between users
    is ``sum(1 / lambda_v)``. ``poisson``: Poisson arrivals at
    ``sum(lambda_v)`` with the next phase drawn proportionally to the rates,
    so that ``theta D`` equals ``lambda_vec`` exactly.
    """
    lam = np.asarray(lambda_vec, dtype=float)
    m = len(lam)
    if realization == "exponential":
        rate = 1.0 / np.sum(1.0 / lam)
        return MapDescriptor([[-rate]], [[rate]])
    if realization == "cyclic":
        C = -np.diag(lam)
        D = np.zeros((m, m))
        for v in range(m - 1):
            C[v, v + 1] = lam[v]
        D[m - 1, 0] = lam[m - 1]
        return MapDescriptor(C, D)
    if realization == "poisson":
        total = lam.sum()
        return MapDescriptor(-total * np.eye(m), np.tile(lam, (m, 1)))
    raise ValueError(f"unknown realization {realization!r}")


def station_maps(model, realization="exponential") -> list:
    return [st.map if st.map is not None else map_for_rates(st.lambda_vec, realization)
            for st in model.stations]


def map_arrival_rate(map_: MapDescriptor) -> float:
    return float(map_stationary_vector(map_) @ map_.D.sum(axis=1))


class _MapClock:
    """Phase process of one MAP driven by its own random stream."""

    def __init__(self, map_: MapDescriptor, rng: random.Random, phase: int = 0):
        C, D = map_.C, map_.D
        m = map_.m
        self.rng = rng
        self.phase = phase
        self.out_rate = [-C[v, v] for v in range(m)]
        self.targets = []
        self.cum = []
        for v in range(m):
            moves = [(w, False, C[v, w]) for w in range(m) if w != v and C[v, w] > 0]
            moves += [(w, True, D[v, w]) for w in range(m) if D[v, w] > 0]
            self.targets.append([(w, arr) for w, arr, _ in moves])
            self.cum.append(list(accumulate(r for _, _, r in moves)))

    def step(self):
        """Advance one transition; return ``(sojourn, source phase, is_arrival)``."""
        v = self.phase
        dt = self.rng.expovariate(self.out_rate[v])
        cum = self.cum[v]
        k = min(bisect_right(cum, self.rng.random() * cum[-1]), len(cum) - 1)
        self.phase, arrival = self.targets[v][k]
        return dt, v, arrival


def map_event_stream(map_: MapDescriptor, seed) -> Iterator[tuple]:
    """Endless stream of ``(arrival time, phase)`` with the phase the arrival left from."""
    rng = random.Random(_seed_int(np.random.SeedSequence(seed)))
    theta = map_stationary_vector(map_)
    clock = _MapClock(map_, rng, phase=_draw(rng, theta))
    t = 0.0
    while True:
        dt, v, arrival = clock.step()
        t += dt
        if arrival:
            yield t, v


def _draw(rng, probs) -> int:
    cum = list(accumulate(float(x) for x in probs))
    return min(bisect_right(cum, rng.random() * cum[-1]), len(cum) - 1)


def _seed_int(ss: np.random.SeedSequence) -> int:
    a, b = ss.generate_state(2, dtype=np.uint32)
    return (int(a) << 32) | int(b)


@dataclass(frozen=True, eq=False)
class SimReport:
    full_prob: np.ndarray
    empty_prob: np.ndarray
    mean_station: np.ndarray
    mean_road: dict
    mean_road_by_class: dict
    lost_rate: np.ndarray
    arrival_rate: np.ndarray
    map_rate: np.ndarray  # theoretical MAP rate per station
    half_width: dict  # statistic name -> 95% CI half-widths (None for one replication)
    std_error: dict
    counters: dict
    replications: int
    measured_events: int
    per_replication: dict = field(repr=False, default_factory=dict)

    def to_dict(self) -> dict:
        def arr(x):
            return [float(v) for v in x]

        def hw(x):
            return None if x is None else arr(x)

        return {
            "full_prob": arr(self.full_prob),
            "empty_prob": arr(self.empty_prob),
            "mean_station": arr(self.mean_station),
            "mean_road": {f"{i}->{j}": float(v) for (i, j), v in sorted(self.mean_road.items())},
            "mean_road_by_class": {
                f"{i}->{j}": [float(a), float(b)] for (i, j), (a, b) in sorted(self.mean_road_by_class.items())
            },
            "lost_rate": arr(self.lost_rate),
            "arrival_rate": arr(self.arrival_rate),
            "map_rate": arr(self.map_rate),
            "ci95_half_width": {k: hw(v) for k, v in self.half_width.items()},
            "counters": dict(self.counters),
            "replications": self.replications,
            "measured_events_per_replication": self.measured_events,
        }


def _replicate(model, cfg: SimConfig, ss: np.random.SeedSequence) -> dict:
    N, K = model.N, model.K
    maps = station_maps(model, cfg.lambda_realization)
    streams = ss.spawn(N)
    clocks, route_rng, ride_rng = [], [], []
    for i in range(N):
        s_map, s_route, s_ride = streams[i].spawn(3)
        rng = random.Random(_seed_int(s_map))
        clocks.append(_MapClock(maps[i], rng, phase=_draw(rng, map_stationary_vector(maps[i]))))
        route_rng.append(random.Random(_seed_int(s_route)))
        ride_rng.append(random.Random(_seed_int(s_ride)))

    road_index = {r.key: k for k, r in enumerate(model.roads)}
    out_roads, cum_p, cum_a, mu, xi, dest = [], [], [], [], [], []
    for i in range(1, N + 1):
        ks = [road_index[(i, j)] for j in model.theta_out(i)]
        out_roads.append(ks)
        cum_p.append(list(accumulate(model.p[model.roads[k].key] for k in ks)))
        cum_a.append(list(accumulate(model.alpha[model.roads[k].key] for k in ks)))
    for r in model.roads:
        mu.append(r.mu)
        xi.append(r.xi)
        dest.append(r.dst - 1)

    def choose(i, cum):
        u = route_rng[i].random() * cum[-1]
        return out_roads[i][min(bisect_right(cum, u), len(cum) - 1)]

    fleet = model.fleet
    parked = [model.C] * N
    riding = [0] * (2 * len(model.roads))  # index 2k + class - 1
    heap = []
    seq = 0
    for i in range(N):
        dt, v, arr = clocks[i].step()
        heapq.heappush(heap, (dt, seq, 0, i, v, arr))
        seq += 1

    # time-weighted accumulators, updated lazily when a coordinate changes
    st_last = [0.0] * N
    area_n = [0.0] * N
    t_empty = [0.0] * N
    t_full = [0.0] * N
    rd_last = [0.0] * len(riding)
    area_r = [0.0] * len(riding)
    arrivals = [0] * N
    lost = [0] * N
    counters = {"first_rides": 0, "retrial_rides": 0, "blocked_returns": 0, "docked": 0}

    def touch_station(i, t):
        dt = t - st_last[i]
        n = parked[i]
        area_n[i] += n * dt
        if n == 0:
            t_empty[i] += dt
        elif n == K:
            t_full[i] += dt
        st_last[i] = t

    def touch_road(idx, t):
        area_r[idx] += riding[idx] * (t - rd_last[idx])
        rd_last[idx] = t

    warm = int(cfg.events * cfg.warmup)
    t0 = 0.0
    t = 0.0
    for count in range(cfg.events):
        if count == warm:
            st_last = [t] * N
            rd_last = [t] * len(riding)
            t0 = t
            area_n = [0.0] * N
            t_empty = [0.0] * N
            t_full = [0.0] * N
            area_r = [0.0] * len(riding)
            arrivals = [0] * N
            lost = [0] * N
            counters = dict.fromkeys(counters, 0)
        t, _, kind, a, b, c = heapq.heappop(heap)
        if kind == 0:
            i = a
            if c:
                arrivals[i] += 1
                if parked[i] == 0:
                    lost[i] += 1
                else:
                    touch_station(i, t)
                    parked[i] -= 1
                    k = choose(i, cum_p[i])
                    idx = 2 * k
                    touch_road(idx, t)
                    riding[idx] += 1
                    counters["first_rides"] += 1
                    heapq.heappush(heap, (t + ride_rng[i].expovariate(mu[k]), seq, 1, k, 1, 0))
                    seq += 1
            dt, v, arr = clocks[i].step()
            heapq.heappush(heap, (t + dt, seq, 0, i, v, arr))
            seq += 1
        else:
            k, cls = a, b
            idx = 2 * k + cls - 1
            touch_road(idx, t)
            riding[idx] -= 1
            j = dest[k]
            if parked[j] < K:
                touch_station(j, t)
                parked[j] += 1
                counters["docked"] += 1
            else:
                counters["blocked_returns"] += 1
                k2 = choose(j, cum_a[j])
                idx2 = 2 * k2 + 1
                touch_road(idx2, t)
                riding[idx2] += 1
                counters["retrial_rides"] += 1
                heapq.heappush(heap, (t + ride_rng[j].expovariate(xi[k2]), seq, 1, k2, 2, 0))
                seq += 1
        if sum(parked) + sum(riding) != fleet or not all(0 <= n <= K for n in parked):
            raise FleetViolation(
                f"fleet broken at t={t}: parked={parked}, riding={riding}, expected total {fleet}"
            )

    for i in range(N):
        touch_station(i, t)
    for idx in range(len(riding)):
        touch_road(idx, t)
    span = t - t0
    if span <= 0:
        raise BikeShareError("measurement window has zero length; raise events or lower warmup")
    return {
        "full_prob": np.array(t_full) / span,
        "empty_prob": np.array(t_empty) / span,
        "mean_station": np.array(area_n) / span,
        "mean_road_c1": np.array(area_r[0::2]) / span,
        "mean_road_c2": np.array(area_r[1::2]) / span,
        "lost_rate": np.array(lost) / span,
        "arrival_rate": np.array(arrivals) / span,
        "counters": counters,
    }


def _run_one(args):
    model, cfg, ss = args
    return _replicate(model, cfg, ss)


def simulate(model, cfg: SimConfig = SimConfig()) -> SimReport:
    """Run ``cfg.replications`` independent replications and pool them.

    Deterministic for a fixed ``cfg.seed``. Reducible path graphs are
    simulated with a warning.
    """
    if not is_irreducible(build_path_graph(model)):
        log.warning("path graph is not strongly connected; simulating anyway")
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.replications)
    jobs = [(model, cfg, ss) for ss in seeds]
    if cfg.workers > 1 and cfg.replications > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            runs = list(pool.map(_run_one, jobs))
    else:
        runs = [_run_one(job) for job in jobs]

    R = len(runs)
    keys = ["full_prob", "empty_prob", "mean_station", "mean_road_c1", "mean_road_c2", "lost_rate", "arrival_rate"]
    stacked = {k: np.vstack([r[k] for r in runs]) for k in keys}
    means = {k: v.mean(axis=0) for k, v in stacked.items()}
    if R > 1:
        se = {k: v.std(axis=0, ddof=1) / math.sqrt(R) for k, v in stacked.items()}
        q = stats.t.ppf(0.975, R - 1)
        hw = {k: q * s for k, s in se.items()}
    else:
        se = {k: None for k in keys}
        hw = {k: None for k in keys}
    counters = {k: sum(r["counters"][k] for r in runs) for k in runs[0]["counters"]}
    keys_road = [r.key for r in model.roads]
    by_class = {key: (means["mean_road_c1"][n], means["mean_road_c2"][n]) for n, key in enumerate(keys_road)}
    maps = station_maps(model, cfg.lambda_realization)
    return SimReport(
        full_prob=means["full_prob"],
        empty_prob=means["empty_prob"],
        mean_station=means["mean_station"],
        mean_road={key: a + b for key, (a, b) in by_class.items()},
        mean_road_by_class=by_class,
        lost_rate=means["lost_rate"],
        arrival_rate=means["arrival_rate"],
        map_rate=np.array([map_arrival_rate(m) for m in maps]),
        half_width=hw,
        std_error=se,
        counters=counters,
        replications=R,
        measured_events=cfg.measured_events,
        per_replication=stacked,
    )
