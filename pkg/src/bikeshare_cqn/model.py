"""Domain types for a bike-sharing system and MAP arrival analysis.

Stations are numbered ``1..N`` everywhere in the public API; roads are
directed pairs ``(i, j)`` of station ids.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    CapacityError,
    DegenerateStation,
    DisconnectedStation,
    ModelError,
    RateError,
    RoutingError,
    SingularGenerator,
    ZeroPhaseRate,
)

ROW_SUM_TOL = 1e-12
GENERATOR_TOL = 1e-9


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MapDescriptor:
    """Markovian arrival process given by hidden (``C``) and arrival (``D``) rates."""

    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        C = _frozen(self.C)
        D = _frozen(self.D)
        if C.ndim != 2 or C.shape[0] != C.shape[1] or C.shape != D.shape:
            raise RateError(f"MAP matrices must be square and equal-sized, got {C.shape} and {D.shape}")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)

    @property
    def m(self) -> int:
        return self.C.shape[0]

    @property
    def generator(self) -> np.ndarray:
        return self.C + self.D

    def check(self) -> list[str]:
        """Return a list of invariant violations (empty when valid)."""
        problems = []
        off = self.C - np.diag(np.diag(self.C))
        if (off < 0).any():
            problems.append("MAP: off-diagonal entries of C must be >= 0")
        if (self.D < 0).any():
            problems.append("MAP: entries of D must be >= 0")
        rows = np.abs(self.generator.sum(axis=1))
        scale = max(1.0, float(np.abs(self.C).max()))
        if rows.max() > GENERATOR_TOL * scale:
            problems.append(f"MAP: rows of C + D must sum to 0 (max |row sum| = {rows.max():.3e})")
        if not _pattern_irreducible(self.generator):
            problems.append("MAP: C + D is reducible")
        return problems

    def __eq__(self, other):
        if not isinstance(other, MapDescriptor):
            return NotImplemented
        return np.array_equal(self.C, other.C) and np.array_equal(self.D, other.D)

    def __hash__(self):
        return hash((self.C.tobytes(), self.D.tobytes()))

    def to_dict(self) -> dict:
        return {"C": self.C.tolist(), "D": self.D.tolist()}


@dataclass(frozen=True, eq=False)
class PhaseRates:
    """Stationary phase vector and per-phase arrival rates of a station.

    ``theta`` is ``None`` when the rates were supplied directly.
    """

    lambda_vec: np.ndarray
    theta: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "lambda_vec", _frozen(self.lambda_vec))
        if self.theta is not None:
            object.__setattr__(self, "theta", _frozen(self.theta))

    @property
    def lambda_total(self) -> float:
        return float(self.lambda_vec.sum())

    @property
    def m(self) -> int:
        return len(self.lambda_vec)

    def __eq__(self, other):
        if not isinstance(other, PhaseRates):
            return NotImplemented
        if (self.theta is None) != (other.theta is None):
            return False
        same_theta = self.theta is None or np.array_equal(self.theta, other.theta)
        return same_theta and np.array_equal(self.lambda_vec, other.lambda_vec)


def _pattern_irreducible(A: np.ndarray) -> bool:
    from .pathgraph import strongly_connected

    n = A.shape[0]
    succ = [np.flatnonzero((A[v] != 0) & (np.arange(n) != v)).tolist() for v in range(n)]
    return strongly_connected(n, succ)


def map_stationary_vector(map_: MapDescriptor) -> np.ndarray:
    """Stationary distribution ``theta`` of the phase generator ``C + D``.

    Solved directly: one balance equation is replaced by ``sum(theta) = 1``.
    """
    Q = map_.generator
    m = map_.m
    if m == 1:
        return np.ones(1)
    if not _pattern_irreducible(Q):
        raise SingularGenerator("C + D is reducible; stationary vector is not unique")
    A = Q.T.copy()
    A[-1, :] = 1.0
    b = np.zeros(m)
    b[-1] = 1.0
    try:
        theta = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SingularGenerator(f"phase generator is numerically singular: {exc}") from exc
    if not np.all(np.isfinite(theta)) or np.linalg.cond(A) > 1e12:
        raise SingularGenerator("phase generator is numerically rank-deficient")
    theta = np.clip(theta, 0.0, None)
    return theta / theta.sum()


def phase_arrival_rates(map_: MapDescriptor) -> PhaseRates:
    theta = map_stationary_vector(map_)
    lam = theta @ map_.D
    if (lam <= 0).any():
        bad = [v + 1 for v in np.flatnonzero(lam <= 0)]
        raise ZeroPhaseRate(f"phase arrival rate is zero for phase(s) {bad}")
    return PhaseRates(lambda_vec=lam, theta=theta)


@dataclass(frozen=True, eq=False)
class StationArrivals:
    """Arrival description for one station: a MAP or a direct rate vector."""

    map: Optional[MapDescriptor] = None
    lambda_vec: Optional[np.ndarray] = None

    def __post_init__(self):
        if (self.map is None) == (self.lambda_vec is None):
            raise ModelError("a station needs exactly one of 'map' or 'lambda'")
        if self.lambda_vec is not None:
            object.__setattr__(self, "lambda_vec", _frozen(self.lambda_vec))

    @property
    def m(self) -> int:
        return self.map.m if self.map is not None else len(self.lambda_vec)

    def rates(self) -> PhaseRates:
        if self.map is not None:
            return phase_arrival_rates(self.map)
        if (self.lambda_vec <= 0).any():
            raise ZeroPhaseRate("direct phase rates must be strictly positive")
        return PhaseRates(lambda_vec=self.lambda_vec)

    def __eq__(self, other):
        if not isinstance(other, StationArrivals):
            return NotImplemented
        if self.map is not None:
            return self.map == other.map
        return other.lambda_vec is not None and np.array_equal(self.lambda_vec, other.lambda_vec)

    def to_dict(self) -> dict:
        if self.map is not None:
            return {"map": self.map.to_dict()}
        return {"lambda": self.lambda_vec.tolist()}


@dataclass(frozen=True)
class RoadSpec:
    """Directed road ``src -> dst`` with first-ride rate ``mu`` and retrial rate ``xi``."""

    src: int
    dst: int
    mu: float
    xi: float

    @property
    def key(self) -> tuple[int, int]:
        return (self.src, self.dst)


@dataclass(frozen=True)
class BikeShareModel:
    """A validated bike-sharing system. Build it with :func:`validate_model`."""

    N: int
    C: int
    K: int
    stations: tuple
    roads: tuple
    p: Mapping = field(hash=False)
    alpha: Mapping = field(hash=False)
    phase_rates: tuple = field(default=(), compare=False, hash=False, repr=False)

    @property
    def fleet(self) -> int:
        return self.N * self.C

    def theta_out(self, i: int) -> list[int]:
        """Destinations reachable by one road from station ``i``, ascending."""
        return sorted(r.dst for r in self.roads if r.src == i)

    def delta_in(self, j: int) -> list[int]:
        return sorted(r.src for r in self.roads if r.dst == j)

    def road(self, i: int, j: int) -> RoadSpec:
        for r in self.roads:
            if r.src == i and r.dst == j:
                return r
        from .errors import UnknownRoad

        raise UnknownRoad(f"no road {i}->{j}")

    def to_dict(self) -> dict:
        """Raw description accepted back by :func:`validate_model`."""
        return {
            "N": self.N,
            "C": self.C,
            "K": self.K,
            "stations": [s.to_dict() for s in self.stations],
            "roads": [{"from": r.src, "to": r.dst, "mu": r.mu, "xi": r.xi} for r in self.roads],
            "p": {f"{i}->{j}": v for (i, j), v in sorted(self.p.items())},
            "alpha": {f"{i}->{j}": v for (i, j), v in sorted(self.alpha.items())},
        }


def _parse_key(key) -> tuple[int, int]:
    if isinstance(key, tuple):
        return int(key[0]), int(key[1])
    a, b = str(key).split("->")
    return int(a), int(b)


def _parse_station(entry) -> StationArrivals:
    if isinstance(entry, StationArrivals):
        return entry
    if isinstance(entry, MapDescriptor):
        return StationArrivals(map=entry)
    if "map" in entry:
        mp = entry["map"]
        if not isinstance(mp, MapDescriptor):
            mp = MapDescriptor(C=mp["C"], D=mp["D"])
        return StationArrivals(map=mp)
    return StationArrivals(lambda_vec=entry["lambda"])


def validate_model(raw) -> BikeShareModel:
    """Check a raw model description and return an immutable :class:`BikeShareModel`.

    ``raw`` is either a model already built by this function or a mapping with
    keys ``N``, ``C``, ``K``, ``stations``, ``roads``, ``p`` and ``alpha``.
    All violations are collected; the raised exception class is that of the
    first violation category found, in the order capacity, rates, degenerate
    stations, routing.
    """
    if isinstance(raw, BikeShareModel):
        raw = raw.to_dict()

    N, C, K = int(raw["N"]), int(raw["C"]), int(raw["K"])
    found: dict[type, list[str]] = {}

    def flag(kind, msg):
        found.setdefault(kind, []).append(msg)

    if N < 2:
        flag(DegenerateStation, f"need at least 2 stations, got N={N}")
    if not (1 <= C < K):
        flag(CapacityError, f"require 1 <= C < K, got C={C}, K={K}")
    if N * C < K:
        flag(CapacityError, f"require N*C >= K, got N*C={N * C}, K={K}")

    stations = []
    phase_rates = []
    raw_stations = list(raw["stations"])
    if len(raw_stations) != N:
        flag(DegenerateStation, f"expected {N} station entries, got {len(raw_stations)}")
    for idx, entry in enumerate(raw_stations, start=1):
        try:
            st = _parse_station(entry)
        except ModelError as exc:
            flag(RateError, f"station {idx}: {exc}")
            continue
        stations.append(st)
        if st.map is not None:
            for msg in st.map.check():
                flag(RateError, f"station {idx}: {msg}")
            if found.get(RateError):
                continue
        try:
            phase_rates.append(st.rates())
        except ZeroPhaseRate as exc:
            flag(ZeroPhaseRate, f"station {idx}: {exc}")
        except SingularGenerator as exc:
            flag(RateError, f"station {idx}: {exc}")

    roads = []
    seen = set()
    for r in raw["roads"]:
        if isinstance(r, RoadSpec):
            road = r
        else:
            road = RoadSpec(int(r["from"]), int(r["to"]), float(r["mu"]), float(r["xi"]))
        if road.src == road.dst:
            flag(RateError, f"road {road.src}->{road.dst} is a self-loop")
        if not (1 <= road.src <= N and 1 <= road.dst <= N):
            flag(DegenerateStation, f"road {road.src}->{road.dst} refers to an unknown station")
        if road.key in seen:
            flag(RoutingError, f"road {road.src}->{road.dst} listed twice")
        seen.add(road.key)
        if not (road.mu > 0 and math.isfinite(road.mu)):
            flag(RateError, f"road {road.src}->{road.dst}: mu must be > 0, got {road.mu}")
        if not (road.xi > 0 and math.isfinite(road.xi)):
            flag(RateError, f"road {road.src}->{road.dst}: xi must be > 0, got {road.xi}")
        roads.append(road)
    roads.sort(key=lambda r: r.key)

    for i in range(1, N + 1):
        if not any(r.src == i for r in roads):
            flag(DisconnectedStation, f"station {i} has no outgoing road")
        if not any(r.dst == i for r in roads):
            flag(DisconnectedStation, f"station {i} has no incoming road")

    probs = {}
    for name in ("p", "alpha"):
        table = {_parse_key(k): float(v) for k, v in dict(raw[name]).items()}
        for (i, j), v in sorted(table.items()):
            if v < 0:
                flag(RoutingError, f"{name}[{i}->{j}] = {v} is negative")
            if v > 0 and (i, j) not in seen:
                flag(RoutingError, f"{name}[{i}->{j}] puts mass on a nonexistent road")
        for i in range(1, N + 1):
            total = sum(v for (a, _), v in table.items() if a == i)
            if any(r.src == i for r in roads) and abs(total - 1.0) > ROW_SUM_TOL:
                flag(RoutingError, f"{name} row {i} sums to {total!r}, not 1")
        # explicit zeros for every road keep lookups total
        probs[name] = {key: table.get(key, 0.0) for key in sorted(seen)}

    if found:
        order = [CapacityError, RateError, ZeroPhaseRate, DegenerateStation, RoutingError,
                 DisconnectedStation]
        kind = next(k for k in order if k in found)
        messages = [m for k in order for m in found.get(k, [])]
        raise kind(messages)

    return BikeShareModel(
        N=N,
        C=C,
        K=K,
        stations=tuple(stations),
        roads=tuple(roads),
        p=probs["p"],
        alpha=probs["alpha"],
        phase_rates=tuple(phase_rates),
    )
