"""Weighted digraphs for the follower interconnection and their reachability analysis.

Nodes are numbered ``1..n``. An arc ``(i, j, w)`` means agent ``i`` listens to
agent ``j`` with weight ``w > 0``, so ``j`` is a neighbor of ``i``. The leader
is never a graph node; it enters only through :class:`LeaderTopology`'s
per-agent ``leader_weights``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GraphError",
    "WeightedDigraph",
    "LeaderTopology",
    "adjacency_matrix",
    "laplacian",
    "neighbors",
    "cluster_neighbors",
    "strong_components",
    "is_strongly_connected",
    "is_balanced",
    "leader_globally_reachable",
    "globally_reachable_nodes",
    "condensation_has_single_sink",
    "has_globally_reachable_node",
    "check_common_order",
]

BALANCE_TOL = 1e-12


class GraphError(ValueError):
    """Invalid graph construction or node reference."""


@dataclass(frozen=True)
class WeightedDigraph:
    n: int
    arcs: tuple[tuple[int, int, float], ...] = ()
    _succ: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise GraphError(f"node count must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        seen = set()
        clean = []
        for arc in self.arcs:
            if len(arc) != 3:
                raise GraphError(f"arc must be (i, j, w), got {arc!r}")
            i, j, w = arc
            if int(i) != i or int(j) != j:
                raise GraphError(f"arc endpoints must be integers, got {arc!r}")
            i, j, w = int(i), int(j), float(w)
            for node in (i, j):
                if not 1 <= node <= self.n:
                    raise GraphError(f"arc {arc!r} references node {node} outside 1..{self.n}")
            if i == j:
                raise GraphError(f"self-loop at node {i} is not allowed")
            if not np.isfinite(w) or w <= 0.0:
                raise GraphError(f"arc ({i}, {j}) needs a positive finite weight, got {w!r}")
            if (i, j) in seen:
                raise GraphError(f"duplicate arc ({i}, {j})")
            seen.add((i, j))
            clean.append((i, j, w))
        clean.sort()
        object.__setattr__(self, "arcs", tuple(clean))
        succ: list[list[int]] = [[] for _ in range(self.n + 1)]
        for i, j, _ in clean:
            succ[i].append(j)
        object.__setattr__(self, "_succ", tuple(tuple(s) for s in succ))

    @classmethod
    def from_adjacency(cls, a) -> "WeightedDigraph":
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise GraphError("adjacency matrix must be square")
        arcs = [
            (i + 1, j + 1, a[i, j])
            for i in range(a.shape[0])
            for j in range(a.shape[1])
            if a[i, j] != 0.0
        ]
        return cls(a.shape[0], tuple(arcs))

    def successors(self, i: int) -> tuple[int, ...]:
        _check_node(self, i)
        return self._succ[i]

    def scaled(self, c: float) -> "WeightedDigraph":
        return WeightedDigraph(self.n, tuple((i, j, c * w) for i, j, w in self.arcs))


@dataclass(frozen=True)
class LeaderTopology:
    """A follower graph plus the leader weights ``b_i`` (``b_i > 0`` iff agent i senses the leader)."""

    graph: WeightedDigraph
    leader_weights: tuple[float, ...]

    def __post_init__(self):
        b = tuple(float(x) for x in self.leader_weights)
        if len(b) != self.graph.n:
            raise GraphError(
                f"leader_weights has length {len(b)}, graph has {self.graph.n} nodes"
            )
        for idx, x in enumerate(b, start=1):
            if not np.isfinite(x) or x < 0.0:
                raise GraphError(f"leader weight b_{idx} must be nonnegative and finite, got {x!r}")
        object.__setattr__(self, "leader_weights", b)

    @property
    def n(self) -> int:
        return self.graph.n

    def scaled(self, c: float) -> "LeaderTopology":
        return LeaderTopology(self.graph.scaled(c), tuple(c * b for b in self.leader_weights))


def _check_node(g: WeightedDigraph, i) -> None:
    if isinstance(i, bool) or int(i) != i or not 1 <= i <= g.n:
        raise GraphError(f"node {i!r} outside 1..{g.n}")


def adjacency_matrix(g: WeightedDigraph) -> np.ndarray:
    a = np.zeros((g.n, g.n))
    for i, j, w in g.arcs:
        a[i - 1, j - 1] = w
    return a


def laplacian(g: WeightedDigraph) -> np.ndarray:
    """``D - A`` with ``D`` the weighted out-degree diagonal; rows sum to zero."""
    a = adjacency_matrix(g)
    return np.diag(a.sum(axis=1)) - a


def neighbors(g: WeightedDigraph, i: int) -> frozenset[int]:
    return frozenset(g.successors(i))


def cluster_neighbors(g: WeightedDigraph, cluster: Iterable[int]) -> frozenset[int]:
    """Union of the neighbor sets of the nodes in ``cluster``.

    Nodes of the cluster itself are kept when some member points at them;
    subtract the cluster to get the external neighbors.
    """
    out: set[int] = set()
    for i in cluster:
        out.update(g.successors(i))
    return frozenset(out)


def strong_components(g: WeightedDigraph) -> list[frozenset[int]]:
    """Strongly connected components, ordered by smallest member (iterative Tarjan)."""
    index = [0] * (g.n + 1)
    low = [0] * (g.n + 1)
    on_stack = [False] * (g.n + 1)
    visited = [False] * (g.n + 1)
    stack: list[int] = []
    comps: list[frozenset[int]] = []
    counter = 1

    for root in range(1, g.n + 1):
        if visited[root]:
            continue
        work = [(root, 0)]
        while work:
            v, pos = work.pop()
            if pos == 0:
                visited[v] = True
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            succ = g._succ[v]
            descended = False
            while pos < len(succ):
                w = succ[pos]
                pos += 1
                if not visited[w]:
                    work.append((v, pos))
                    work.append((w, 0))
                    descended = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if descended:
                continue
            if low[v] == index[v]:
                comp = set()
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.add(w)
                    if w == v:
                        break
                comps.append(frozenset(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    comps.sort(key=min)
    return comps


def is_strongly_connected(g: WeightedDigraph) -> bool:
    return len(strong_components(g)) == 1


def is_balanced(g: WeightedDigraph, tol: float = BALANCE_TOL) -> bool:
    a = adjacency_matrix(g)
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    return bool(np.all(np.abs(a.sum(axis=1) - a.sum(axis=0)) <= tol * scale))


def _reaches(g: WeightedDigraph, target: int) -> set[int]:
    """Nodes that have a directed path to ``target`` (including itself)."""
    pred: list[list[int]] = [[] for _ in range(g.n + 1)]
    for i, j, _ in g.arcs:
        pred[j].append(i)
    seen = {target}
    queue = deque([target])
    while queue:
        v = queue.popleft()
        for u in pred[v]:
            if u not in seen:
                seen.add(u)
                queue.append(u)
    return seen


def leader_globally_reachable(t: LeaderTopology) -> bool:
    """True iff every follower has a directed path ending at the leader."""
    g = t.graph
    pred: list[list[int]] = [[] for _ in range(g.n + 1)]
    for i, j, _ in g.arcs:
        pred[j].append(i)
    queue = deque(i for i, b in enumerate(t.leader_weights, start=1) if b > 0.0)
    seen = set(queue)
    while queue:
        v = queue.popleft()
        for u in pred[v]:
            if u not in seen:
                seen.add(u)
                queue.append(u)
    return len(seen) == g.n


def globally_reachable_nodes(g: WeightedDigraph) -> frozenset[int]:
    """Nodes reachable from every other node, by reverse traversal from each candidate."""
    return frozenset(v for v in range(1, g.n + 1) if len(_reaches(g, v)) == g.n)


def condensation_has_single_sink(g: WeightedDigraph) -> bool:
    """Exactly one strong component has no neighbors outside itself."""
    sinks = 0
    for comp in strong_components(g):
        if not (cluster_neighbors(g, comp) - comp):
            sinks += 1
    return sinks == 1


def has_globally_reachable_node(g: WeightedDigraph) -> bool:
    by_traversal = bool(globally_reachable_nodes(g))
    by_condensation = condensation_has_single_sink(g)
    if by_traversal != by_condensation:
        raise RuntimeError(
            "reachability traversal and condensation criterion disagree; this is a bug"
        )
    return by_traversal


def check_common_order(topologies: Sequence[LeaderTopology]) -> int:
    """Return the shared node count of a switched family, or raise."""
    if not topologies:
        raise GraphError("topology family is empty")
    sizes = {t.n for t in topologies}
    if len(sizes) != 1:
        raise GraphError(f"all topologies in a switched family must share n, got {sorted(sizes)}")
    return sizes.pop()
