"""Enumeration and counting of joint bike configurations.

A state lists, station by station, the number of parked bikes in each MAP
phase followed by the class-1 and class-2 riding counts on each outgoing
road. Every state holds the whole fleet ``N*C`` and no station holds more
than ``K`` bikes.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from math import comb
from typing import Iterator

import numpy as np

from .errors import StateSpaceTooLarge

DEFAULT_MAX_STATES = 10_000_000


def default_max_states() -> int:
    env = os.environ.get("CQN_MAX_STATES")
    return int(env) if env else DEFAULT_MAX_STATES


@dataclass(frozen=True)
class StateLayout:
    """Column positions of every coordinate in a state vector."""

    station_cols: tuple  # station_cols[i-1] -> tuple of phase columns
    road_cols: dict  # (i, j) -> (class-1 column, class-2 column)
    width: int
    fleet: int
    K: int

    @classmethod
    def of(cls, model) -> "StateLayout":
        station_cols = []
        road_cols = {}
        c = 0
        for i in range(1, model.N + 1):
            m = model.stations[i - 1].m
            station_cols.append(tuple(range(c, c + m)))
            c += m
            for j in model.theta_out(i):
                road_cols[(i, j)] = (c, c + 1)
                c += 2
        return cls(tuple(station_cols), road_cols, c, model.fleet, model.K)

    def kinds(self) -> list:
        """Per column, the owning station id for phase columns or ``None`` for roads."""
        out = [None] * self.width
        for i, cols in enumerate(self.station_cols, start=1):
            for col in cols:
                out[col] = i
        return out


@dataclass(frozen=True)
class NetworkState:
    """One joint configuration.

    ``n[i-1]`` holds per-phase parked counts of station ``i``; ``m`` maps a
    road ``(i, j)`` to its ``(class 1, class 2)`` riding counts.
    """

    n: tuple
    m: tuple  # sorted ((i, j), (m1, m2)) pairs

    @classmethod
    def from_vector(cls, layout: StateLayout, vec) -> "NetworkState":
        vec = [int(x) for x in vec]
        n = tuple(tuple(vec[c] for c in cols) for cols in layout.station_cols)
        m = tuple(sorted((key, (vec[a], vec[b])) for key, (a, b) in layout.road_cols.items()))
        return cls(n, m)

    def to_vector(self, layout: StateLayout) -> np.ndarray:
        vec = np.zeros(layout.width, dtype=np.int64)
        for cols, counts in zip(layout.station_cols, self.n):
            vec[list(cols)] = counts
        for key, (m1, m2) in self.m:
            a, b = layout.road_cols[key]
            vec[a], vec[b] = m1, m2
        return vec

    @property
    def riding(self) -> dict:
        return dict(self.m)

    def station_total(self, i: int) -> int:
        return sum(self.n[i - 1])

    def total(self) -> int:
        return sum(map(sum, self.n)) + sum(a + b for _, (a, b) in self.m)


def state_count(model) -> int:
    """Exact size of the state space by truncated polynomial convolution."""
    fleet, K = model.fleet, model.K
    poly = [1] + [0] * fleet
    for i in range(1, model.N + 1):
        m = model.stations[i - 1].m
        factor = [comb(t + m - 1, m - 1) if t <= K else 0 for t in range(fleet + 1)]
        poly = _convolve(poly, factor, fleet)
        # two unbounded road coordinates: compositions of t into 2 parts
        for _ in model.theta_out(i):
            poly = _convolve(poly, [t + 1 for t in range(fleet + 1)], fleet)
    return poly[fleet]


def _convolve(a, b, top):
    out = [0] * (top + 1)
    for s, x in enumerate(a):
        if x:
            for t in range(top + 1 - s):
                out[s + t] += x * b[t]
    return out


def _check_cap(model, max_states):
    cap = default_max_states() if max_states is None else int(max_states)
    count = state_count(model)
    if count > cap:
        raise StateSpaceTooLarge(count, cap)
    return count


def state_array(model, max_states=None) -> np.ndarray:
    """All states as rows of an integer array, in lexicographic order.

    Raises :class:`StateSpaceTooLarge` before allocating anything when the
    exact count exceeds ``max_states`` (default from ``CQN_MAX_STATES`` or
    10**7).
    """
    _check_cap(model, max_states)
    layout = StateLayout.of(model)
    fleet, K = layout.fleet, layout.K
    owner = layout.kinds()
    dtype = np.int16 if fleet < 2**15 else np.int64

    rows = np.zeros((1, 0), dtype=dtype)
    used = np.zeros(1, dtype=np.int64)
    at_station = np.zeros(1, dtype=np.int64)
    for col in range(layout.width):
        if col > 0 and owner[col] is not None and owner[col] != owner[col - 1]:
            at_station[:] = 0
        if col == layout.width - 1:
            value = fleet - used
            keep = value >= 0
            if owner[col] is not None:
                keep &= at_station + value <= K
            rows = np.column_stack([rows[keep], value[keep].astype(dtype)])
            break
        room = fleet - used
        if owner[col] is not None:
            room = np.minimum(room, K - at_station)
        reps = room + 1
        parent = np.repeat(np.arange(len(rows)), reps)
        starts = np.cumsum(reps) - reps
        value = np.arange(len(parent)) - np.repeat(starts, reps)
        rows = np.column_stack([rows[parent], value.astype(dtype)])
        used = used[parent] + value
        at_station = at_station[parent] + (value if owner[col] is not None else 0)
    return rows


def enumerate_states(model, max_states=None) -> Iterator[NetworkState]:
    layout = StateLayout.of(model)
    for row in state_array(model, max_states):
        yield NetworkState.from_vector(layout, row)
