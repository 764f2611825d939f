"""Graph edit distance: exhaustive oracle, A* search, beam search and the
GED <-> similarity transforms.

All edit operations cost 1: node insertion/deletion, node relabeling (0 when
the labels agree) and edge insertion/deletion. Edges carry no labels, so edge
substitution never arises.
"""
from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import BudgetExceeded, TooLarge
from .graph import Graph, bfs_order

BRUTE_FORCE_MAX_NODES = 7
DEFAULT_MAX_EXPANSIONS = 2_000_000


@dataclass(frozen=True)
class EditCostModel:
    node_insert: int = 1
    node_delete: int = 1
    node_relabel: int = 1
    edge_insert: int = 1
    edge_delete: int = 1


UNIFORM_COSTS = EditCostModel()


def edit_path_cost(g1: Graph, g2: Graph, mapping: Sequence[Optional[int]]) -> int:
    """Cost of the complete edit path induced by a node mapping.

    ``mapping[u]`` is the node of ``g2`` that node ``u`` of ``g1`` is
    substituted with, or ``None`` if ``u`` is deleted. Nodes of ``g2`` outside
    the image are inserted. Edge costs follow from the node mapping.
    """
    if len(mapping) != g1.n:
        raise ValueError("mapping must cover every node of g1")
    image = [m for m in mapping if m is not None]
    if len(set(image)) != len(image):
        raise ValueError("mapping is not injective")
    inverse = {v: u for u, v in enumerate(mapping) if v is not None}

    cost = 0
    for u, v in enumerate(mapping):
        if v is None:
            cost += 1
        elif g1.labels[u] != g2.labels[v]:
            cost += 1
    cost += g2.n - len(image)

    for u, w in g1.edges:
        mu, mw = mapping[u], mapping[w]
        if mu is None or mw is None or not g2.has_edge(mu, mw):
            cost += 1
    for x, y in g2.edges:
        if x in inverse and y in inverse and g1.has_edge(inverse[x], inverse[y]):
            continue
        cost += 1
    return cost


def brute_force_ged(g1: Graph, g2: Graph) -> int:
    """Exact GED by enumerating every injective partial node mapping."""
    if g1.n > BRUTE_FORCE_MAX_NODES or g2.n > BRUTE_FORCE_MAX_NODES:
        raise TooLarge(f"brute force limited to {BRUTE_FORCE_MAX_NODES} nodes per graph")
    n1, n2 = g1.n, g2.n
    mapping: list[Optional[int]] = [None] * n1
    used = [False] * n2
    best = math.inf

    def extend(i):
        nonlocal best
        if i == n1:
            best = min(best, edit_path_cost(g1, g2, mapping))
            return
        for v in range(n2):
            if not used[v]:
                used[v] = True
                mapping[i] = v
                extend(i + 1)
                used[v] = False
        mapping[i] = None
        extend(i + 1)

    extend(0)
    return int(best)


class _Problem:
    """Integer-coded view of a graph pair for the tree search.

    Source nodes are processed in BFS order of ``g1``; candidate targets are
    tried in BFS order of ``g2``. Adjacency is held both as bitmasks (child
    generation) and as arrays (bipartite bound).
    """

    def __init__(self, g1: Graph, g2: Graph):
        codes: dict[str, int] = {}
        self.order1 = bfs_order(g1)
        self.order2 = bfs_order(g2)
        self.n1, self.n2 = g1.n, g2.n
        self.e1, self.e2 = g1.num_edges, g2.num_edges
        pos1 = {u: k for k, u in enumerate(self.order1)}
        # g1 in processing order: node k is order1[k]
        self.label1 = [codes.setdefault(g1.labels[u], len(codes)) for u in self.order1]
        self.adj1 = [sum(1 << pos1[w] for w in g1.neighbors[u]) for u in self.order1]
        self.label2 = [codes.setdefault(label, len(codes)) for label in g2.labels]
        self.adj2 = [sum(1 << w for w in g2.neighbors[v]) for v in range(g2.n)]
        n_codes = len(codes)
        # label counts of the still-unprocessed suffix of the source order
        self.suffix_counts = []
        for k in range(self.n1 + 1):
            c = [0] * n_codes
            for lab in self.label1[k:]:
                c[lab] += 1
            self.suffix_counts.append(c)
        self.total2 = [0] * n_codes
        for lab in self.label2:
            self.total2[lab] += 1

        self.A1 = g1.adjacency[np.ix_(self.order1, self.order1)].astype(np.int64)
        self.A2 = g2.adjacency.astype(np.int64)
        self.L1 = np.array(self.label1)
        self.L2 = np.array(self.label2)

    def heuristic(self, k: int, used: int, e1_in: int, e2_in: int) -> int:
        """Label-multiset gap plus open-edge-count gap.

        Both terms are admissible and bound disjoint sets of operations.
        """
        rem1 = self.suffix_counts[k]
        rem2 = list(self.total2)
        b = self.n2
        m = used
        while m:
            low = m & -m
            v = low.bit_length() - 1
            rem2[self.label2[v]] -= 1
            b -= 1
            m ^= low
        common = 0
        for c1, c2 in zip(rem1, rem2):
            common += c1 if c1 < c2 else c2
        a = self.n1 - k
        node_lb = (a if a > b else b) - common
        edge_lb = abs((self.e1 - e1_in) - (self.e2 - e2_in))
        return node_lb + edge_lb

    def bipartite_bound(self, k: int, mapping: tuple, used: int) -> int:
        """Assignment lower bound on the cost of completing ``mapping``.

        Cells carry the exact cost of edges to already-processed nodes plus
        half the gap in edges among still-free nodes, so any completion costs
        at least the optimal assignment value.
        """
        unused = [v for v in range(self.n2) if not (used >> v) & 1]
        a, b = self.n1 - k, len(unused)
        if a == 0:
            return b + int(self.A2[np.ix_(unused, unused)].sum()) // 2 + int(
                self.A2[unused][:, [x for x in mapping if x >= 0]].sum()
            )
        mapped = [j for j, x in enumerate(mapping) if x >= 0]
        images = [mapping[j] for j in mapped]
        deleted = [j for j, x in enumerate(mapping) if x < 0]

        R1 = self.A1[k:]
        R2 = self.A2[unused]
        M1 = R1[:, mapped]
        M2 = R2[:, images]
        anchored = (
            M1.sum(1)[:, None] + M2.sum(1)[None, :] - 2 * (M1 @ M2.T) + R1[:, deleted].sum(1)[:, None]
        )
        free1 = R1[:, k:].sum(1)
        free2 = R2[:, unused].sum(1)

        size = a + b
        c = np.full((size, size), np.inf)
        c[:a, :b] = (
            (self.L1[k:][:, None] != self.L2[unused][None, :])
            + anchored
            + np.abs(free1[:, None] - free2[None, :]) / 2.0
        )
        c[np.arange(a), b + np.arange(a)] = 1 + R1[:, :k].sum(1) + free1 / 2.0
        c[a + np.arange(b), np.arange(b)] = 1 + M2.sum(1) + free2 / 2.0
        c[a:, b:] = 0.0
        rows, cols = linear_sum_assignment(c)
        return math.ceil(c[rows, cols].sum() - 1e-9)

    def children(self, k, mapping, used, g, e1_in, e2_in):
        """Yield ``(target, g, used, e1_in, e2_in)`` for the k-th source node;
        ``target == -1`` is deletion."""
        prev = self.adj1[k] & ((1 << k) - 1)
        n_prev = bin(prev).count("1")
        relabel_from = self.label1[k]
        for v in self.order2:
            bit = 1 << v
            if used & bit:
                continue
            cost = 0 if self.label2[v] == relabel_from else 1
            av = self.adj2[v]
            for j in range(k):
                x = mapping[j]
                b1 = (prev >> j) & 1
                if x < 0:
                    cost += b1
                else:
                    cost += b1 ^ ((av >> x) & 1)
            yield v, g + cost, used | bit, e1_in + n_prev, e2_in + bin(av & used).count("1")
        yield -1, g + 1 + n_prev, used, e1_in + n_prev, e2_in

    def closure_cost(self, used: int, e2_in: int) -> int:
        return (self.n2 - bin(used).count("1")) + (self.e2 - e2_in)


def _canonical_pair(g1: Graph, g2: Graph) -> tuple[Graph, Graph]:
    # orientation-independent argument order, so approximate methods are symmetric
    def key(g):
        return (g.n, g.num_edges, sorted(g.labels), g.labels, g.edges)

    return (g2, g1) if key(g2) < key(g1) else (g1, g2)


_UNSCORED, _SCORED, _DONE = 0, 1, 2


def astar_ged(g1: Graph, g2: Graph, max_expansions: int = DEFAULT_MAX_EXPANSIONS) -> int:
    """Exact GED by best-first search over partial node mappings.

    Children enter the queue keyed by the cheap label/edge-count bound; the
    tighter bipartite bound is computed only when a state reaches the front.
    Ties on ``f`` go to the deeper state (larger ``g``). Raises
    :class:`BudgetExceeded` once ``max_expansions`` states have been expanded
    without reaching a complete mapping.
    """
    p = _Problem(g1, g2)
    counter = itertools.count()
    # entries: (f, -g, tiebreak, status, k, mapping, used, e1_in, e2_in)
    heap = [(p.heuristic(0, 0, 0, 0), 0, next(counter), _UNSCORED, 0, (), 0, 0, 0)]
    expanded = 0
    while heap:
        f, neg_g, _, status, k, mapping, used, e1_in, e2_in = heapq.heappop(heap)
        g = -neg_g
        if status == _DONE:
            return g
        if k == p.n1:
            total = g + p.closure_cost(used, e2_in)
            heapq.heappush(heap, (total, -total, next(counter), _DONE, k, mapping, used, e1_in, e2_in))
            continue
        if status == _UNSCORED:
            f_tight = g + p.bipartite_bound(k, mapping, used)
            if f_tight > f:
                heapq.heappush(heap, (f_tight, -g, next(counter), _SCORED, k, mapping, used, e1_in, e2_in))
                continue
        expanded += 1
        if expanded > max_expansions:
            raise BudgetExceeded(f"A* expanded more than {max_expansions} states")
        for v, g_child, used_child, e1c, e2c in p.children(k, mapping, used, g, e1_in, e2_in):
            h = p.heuristic(k + 1, used_child, e1c, e2c)
            heapq.heappush(
                heap,
                (g_child + h, -g_child, next(counter), _UNSCORED, k + 1, mapping + (v,), used_child, e1c, e2c),
            )
    raise AssertionError("search space exhausted without a complete mapping")


def beam_ged(g1: Graph, g2: Graph, width: Optional[int]) -> int:
    """Upper bound on GED from a depth-synchronized beam search.

    At every depth only the ``width`` best partial mappings by ``g + h``
    survive (ties: lower ``g``, then generation order), with ``h`` the
    bipartite bound. ``width=None`` (or ``math.inf``) keeps the whole level,
    dropping only states whose bound cannot beat the best complete mapping
    seen so far, which makes the result exact.
    """
    unbounded = width is None or width == math.inf
    if not unbounded:
        width = int(width)
        if width < 1:
            raise ValueError("beam width must be at least 1")
    g1, g2 = _canonical_pair(g1, g2)
    p = _Problem(g1, g2)
    counter = itertools.count()
    # incumbent: a greedy completion gives a finite bound to prune against
    best = _beam_search(p, 1, math.inf, counter) if unbounded else math.inf
    return int(_beam_search(p, None if unbounded else width, best, counter))


def _beam_search(p: "_Problem", width: Optional[int], incumbent: float, counter) -> float:
    beam = [(0, 0, next(counter), (), 0, 0, 0)]
    best = incumbent
    for k in range(p.n1):
        candidates = []
        for _, g, _, mapping, used, e1_in, e2_in in beam:
            for v, g_child, used_child, e1c, e2c in p.children(k, mapping, used, g, e1_in, e2_in):
                if g_child >= best:
                    continue
                child = mapping + (v,)
                f = g_child + p.bipartite_bound(k + 1, child, used_child)
                if f >= best:
                    continue
                if k + 1 == p.n1:
                    best = min(best, g_child + p.closure_cost(used_child, e2c))
                candidates.append((f, g_child, next(counter), child, used_child, e1c, e2c))
        if not candidates:
            return best
        beam = candidates if width is None else heapq.nsmallest(width, candidates)
    return min([best] + [g + p.closure_cost(used, e2_in) for _, g, _, _, used, _, e2_in in beam])


def normalized_ged(ged: float, n1: int, n2: int) -> float:
    return ged / ((n1 + n2) / 2.0)


def ged_to_similarity(ged: float, n1: int, n2: int) -> float:
    """``exp(-nGED)``, a bijection of GED onto (0, 1] for fixed graph sizes."""
    if ged < 0:
        raise ValueError("ged must be nonnegative")
    if n1 < 1 or n2 < 1:
        raise ValueError("graph sizes must be positive")
    return math.exp(-normalized_ged(ged, n1, n2))


def similarity_to_ged(sim: float, n1: int, n2: int) -> float:
    if not 0.0 < sim <= 1.0:
        raise ValueError("similarity must lie in (0, 1]")
    return -math.log(sim) * (n1 + n2) / 2.0

