"""Station/road accessibility graph and its irreducibility test."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

StationNode = int
RoadNode = tuple  # (i, j)
Node = Union[StationNode, RoadNode]


@dataclass(frozen=True)
class PathGraph:
    """Directed graph whose nodes are station ids and road pairs ``(i, j)``."""

    nodes: tuple
    edges: tuple

    def successors(self) -> dict:
        out = {v: [] for v in self.nodes}
        for a, b in self.edges:
            out[a].append(b)
        return out

    def without_road(self, i: int, j: int) -> "PathGraph":
        road = (i, j)
        nodes = tuple(v for v in self.nodes if v != road)
        edges = tuple(e for e in self.edges if road not in e)
        return PathGraph(nodes, edges)


def build_path_graph(model) -> PathGraph:
    """Station ``i`` -> road ``(i, j)`` -> station ``j`` for every road."""
    nodes = []
    edges = []
    for i in range(1, model.N + 1):
        nodes.append(i)
        for j in model.theta_out(i):
            nodes.append((i, j))
    for road in model.roads:
        edges.append((road.src, road.key))
        edges.append((road.key, road.dst))
    return PathGraph(tuple(nodes), tuple(edges))


def _reach(n: int, succ: Sequence[Sequence[int]], start: int = 0) -> list:
    seen = [False] * n
    seen[start] = True
    stack = [start]
    while stack:
        v = stack.pop()
        for w in succ[v]:
            if not seen[w]:
                seen[w] = True
                stack.append(w)
    return seen


def strongly_connected(n: int, succ: Sequence[Sequence[int]]) -> bool:
    """True iff every vertex reaches vertex 0 and vertex 0 reaches every vertex."""
    if n <= 1:
        return True
    if not all(_reach(n, succ)):
        return False
    pred = [[] for _ in range(n)]
    for v, ws in enumerate(succ):
        for w in ws:
            pred[w].append(v)
    return all(_reach(n, pred))


def is_irreducible(graph: PathGraph) -> bool:
    index = {v: k for k, v in enumerate(graph.nodes)}
    succ = [[] for _ in graph.nodes]
    for a, b in graph.edges:
        succ[index[a]].append(index[b])
    return strongly_connected(len(graph.nodes), succ)
