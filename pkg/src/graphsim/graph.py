"""Labeled undirected graphs, canonical BFS ordering and GCN inputs."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DuplicateEdge,
    EmptyGraph,
    GraphValidationError,
    OutOfRangeEndpoint,
    SelfLoop,
    UnknownLabel,
)

UNLABELED = ""


@dataclass(frozen=True)
class Graph:
    """Undirected, unweighted graph with one string label per node.

    Edges are stored once as ``(u, v)`` with ``u < v``, sorted. Build instances
    through :func:`validate_graph` (or :meth:`Graph.build`) so the invariants
    hold.
    """

    id: str
    labels: tuple[str, ...]
    edges: tuple[tuple[int, int], ...] = field(default=())

    @classmethod
    def build(cls, id, labels, edges=()) -> "Graph":
        return validate_graph({"id": id, "labels": list(labels), "edges": [list(e) for e in edges]})

    @classmethod
    def unlabeled(cls, id, n, edges=()) -> "Graph":
        return cls.build(id, [UNLABELED] * n, edges)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def neighbors(self) -> tuple[frozenset[int], ...]:
        adj = [set() for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return tuple(frozenset(a) for a in adj)

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.neighbors)

    @cached_property
    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=bool)
        for u, v in self.edges:
            a[u, v] = a[v, u] = True
        a.setflags(write=False)
        return a

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.neighbors[u]

    def permuted(self, order: Sequence[int], id: str | None = None) -> "Graph":
        """Graph whose node ``i`` is node ``order[i]`` of this graph."""
        position = {old: new for new, old in enumerate(order)}
        edges = [(position[u], position[v]) for u, v in self.edges]
        labels = [self.labels[old] for old in order]
        return Graph.build(self.id if id is None else id, labels, [tuple(sorted(e)) for e in edges])

    def to_record(self) -> dict:
        return {"id": self.id, "labels": list(self.labels), "edges": [list(e) for e in self.edges]}


def validate_graph(raw: Mapping) -> Graph:
    """Check a raw ``{"id", "labels", "edges"}`` record and canonicalize it."""
    try:
        gid = raw["id"]
        labels = raw["labels"]
        edges = raw.get("edges", [])
    except (KeyError, TypeError, AttributeError) as exc:
        raise GraphValidationError(f"malformed graph record: {exc!r}") from None
    if not isinstance(gid, str):
        raise GraphValidationError("graph id must be a string")
    if not isinstance(labels, (list, tuple)) or not all(isinstance(x, str) for x in labels):
        raise GraphValidationError(f"{gid}: labels must be a list of strings")
    n = len(labels)
    if n == 0:
        raise EmptyGraph(f"{gid}: graph has no nodes")

    seen: set[tuple[int, int]] = set()
    for e in edges:
        if not isinstance(e, (list, tuple)) or len(e) != 2 or not all(
            isinstance(x, int) and not isinstance(x, bool) for x in e
        ):
            raise GraphValidationError(f"{gid}: edge {e!r} is not a pair of integers")
        u, v = e
        if not (0 <= u < n and 0 <= v < n):
            raise OutOfRangeEndpoint(f"{gid}: edge {e!r} outside [0, {n})")
        if u == v:
            raise SelfLoop(f"{gid}: self-loop on node {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise DuplicateEdge(f"{gid}: duplicate edge {key}")
        seen.add(key)
    return Graph(gid, tuple(labels), tuple(sorted(seen)))


def _rank_key(g: Graph, i: int):
    # highest degree first, then smallest label, then smallest index
    return (-g.degrees[i], g.labels[i], i)


def bfs_order(g: Graph) -> list[int]:
    """Deterministic breadth-first node ordering.

    Each component is entered at its best-ranked unvisited node (highest
    degree, then smallest label, then smallest index) and neighbors are queued
    by the same ranking.
    """
    ranked = sorted(range(g.n), key=lambda i: _rank_key(g, i))
    visited = [False] * g.n
    order: list[int] = []
    for start in ranked:
        if visited[start]:
            continue
        visited[start] = True
        queue = deque([start])
        while queue:
            u = queue.popleft()
            order.append(u)
            for v in sorted(g.neighbors[u], key=lambda i: _rank_key(g, i)):
                if not visited[v]:
                    visited[v] = True
                    queue.append(v)
    return order


def initial_features(g: Graph, vocab: Sequence[str] | None) -> np.ndarray:
    """One-hot label rows against ``vocab``; ``vocab=None`` gives the constant
    width-1 feature used for unlabeled graphs."""
    if vocab is None:
        return np.ones((g.n, 1))
    index = {label: k for k, label in enumerate(vocab)}
    h = np.zeros((g.n, len(index)))
    for i, label in enumerate(g.labels):
        try:
            h[i, index[label]] = 1.0
        except KeyError:
            raise UnknownLabel(f"{g.id}: label {label!r} not in vocabulary") from None
    return h


def normalized_adjacency(g: Graph) -> np.ndarray:
    """``A + I`` scaled by ``1/sqrt(d_i d_j)`` where ``d`` counts the node itself."""
    a = g.adjacency.astype(float) + np.eye(g.n)
    d = a.sum(axis=1)
    scale = 1.0 / np.sqrt(d)
    return a * scale[:, None] * scale[None, :]
