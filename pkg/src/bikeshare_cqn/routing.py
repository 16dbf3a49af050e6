"""Two-class routing matrix over virtual nodes and the traffic equations.

Virtual nodes are ordered station by station: ``Station i`` followed by
``(i, j, 1)`` and ``(i, j, 2)`` for each outgoing road ``i -> j`` with ``j``
ascending. Class 1 carries first rides, class 2 carries retrial rides.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ReducibleMatrix
from .pathgraph import strongly_connected


@dataclass(frozen=True)
class VirtualNode:
    station: int
    dst: int = 0
    cls: int = 0  # 0 for a station node, 1 or 2 for a road class

    @property
    def is_station(self) -> bool:
        return self.cls == 0

    @property
    def label(self) -> str:
        if self.is_station:
            return f"S{self.station}"
        return f"R{self.station}->{self.dst}c{self.cls}"


def virtual_nodes(model) -> list[VirtualNode]:
    nodes = []
    for i in range(1, model.N + 1):
        nodes.append(VirtualNode(i))
        for j in model.theta_out(i):
            nodes.append(VirtualNode(i, j, 1))
            nodes.append(VirtualNode(i, j, 2))
    return nodes


@dataclass(frozen=True, eq=False)
class RoutingMatrix:
    entries: np.ndarray
    nodes: tuple
    node_index: dict = field(repr=False)

    @property
    def order(self) -> int:
        return self.entries.shape[0]

    def station_row(self, i: int) -> int:
        return self.node_index[VirtualNode(i)]

    def road_row(self, i: int, j: int, cls: int) -> int:
        return self.node_index[VirtualNode(i, j, cls)]

    def labels(self) -> list[str]:
        return [v.label for v in self.nodes]

    def to_csv(self) -> str:
        labels = self.labels()
        lines = ["," + ",".join(labels)]
        for lab, row in zip(labels, self.entries):
            lines.append(lab + "," + ",".join(repr(float(x)) for x in row))
        return "\n".join(lines) + "\n"


def build_routing_matrix(model, pi) -> RoutingMatrix:
    """Routing matrix at full-station probabilities ``pi`` (one entry per station).

    Rows: a station sends riders onto class 1 of its roads with the first-ride
    probabilities; a road node of either class delivers to its destination
    ``j`` with probability ``1 - pi[j]`` and otherwise re-routes onto class 2
    of ``j``'s roads with the retrial probabilities.
    """
    pi = np.asarray(pi, dtype=float)
    if pi.shape != (model.N,):
        raise DimensionError(f"pi must have length {model.N}, got shape {pi.shape}")
    nodes = virtual_nodes(model)
    index = {v: k for k, v in enumerate(nodes)}
    P = np.zeros((len(nodes), len(nodes)))
    for i in range(1, model.N + 1):
        s = index[VirtualNode(i)]
        for j in model.theta_out(i):
            P[s, index[VirtualNode(i, j, 1)]] = model.p[(i, j)]
    for road in model.roads:
        j = road.dst
        full = pi[j - 1]
        for cls in (1, 2):
            row = index[VirtualNode(road.src, j, cls)]
            P[row, index[VirtualNode(j)]] = 1.0 - full
            for l in model.theta_out(j):
                P[row, index[VirtualNode(j, l, 2)]] = model.alpha[(j, l)] * full
    return RoutingMatrix(P, tuple(nodes), index)


@dataclass(frozen=True, eq=False)
class RelativeArrivalRates:
    """Visit ratios normalised so that station 1 has rate 1."""

    vector: np.ndarray
    nodes: tuple
    node_index: dict = field(repr=False)
    residual: float = 0.0

    def station(self, i: int) -> float:
        return float(self.vector[self.node_index[VirtualNode(i)]])

    def road(self, i: int, j: int, cls: int) -> float:
        return float(self.vector[self.node_index[VirtualNode(i, j, cls)]])

    @property
    def e_station(self) -> np.ndarray:
        return np.array([self.vector[k] for k, v in enumerate(self.nodes) if v.is_station])

    def scaled(self, c: float) -> "RelativeArrivalRates":
        return RelativeArrivalRates(self.vector * c, self.nodes, self.node_index, self.residual)


def nonzero_irreducible(P: np.ndarray) -> bool:
    n = P.shape[0]
    succ = [np.flatnonzero(P[v] > 0).tolist() for v in range(n)]
    return strongly_connected(n, succ)


def solve_relative_rates(P: RoutingMatrix) -> RelativeArrivalRates:
    """Solve ``e = e P`` with ``e[Station 1] = 1``.

    Dense direct solve of ``(P^T - I) e = 0`` with the first equation
    replaced by the normalisation.
    """
    A = P.entries
    n = A.shape[0]
    if not nonzero_irreducible(A):
        raise ReducibleMatrix(
            "routing matrix is reducible; keep every pi component strictly inside (0, 1) "
            "and make sure the path graph is strongly connected"
        )
    M = A.T - np.eye(n)
    M[0, :] = 0.0
    M[0, 0] = 1.0
    b = np.zeros(n)
    b[0] = 1.0
    e = np.linalg.solve(M, b)
    residual = float(np.abs(e @ A - e).max())
    if (e <= 0).any():
        raise ReducibleMatrix("traffic equations gave a non-positive visit ratio")
    return RelativeArrivalRates(e, P.nodes, P.node_index, residual)
