"""Assignment-based GED upper bounds.

A node-level cost matrix with substitution, deletion and insertion blocks is
solved as a linear sum assignment problem; the resulting node mapping is then
priced as a complete edit path. Two solvers are provided: the Kuhn-Munkres
(Hungarian) method and the Jonker-Volgenant shortest augmenting path method.
"""
from __future__ import annotations

from typing import Literal

import numpy as np

from .errors import Infeasible
from .ged import _canonical_pair, edit_path_cost
from .graph import Graph

Algorithm = Literal["hungarian", "jonker_volgenant"]
CostVariant = Literal["degree", "plain"]

ALGORITHMS = ("hungarian", "jonker_volgenant")


def build_cost_matrix(g1: Graph, g2: Graph, variant: CostVariant = "degree") -> np.ndarray:
    """Square integer cost matrix of side ``n1 + n2``.

    Upper left: substitutions. Upper right: deletions on the diagonal.
    Lower left: insertions on the diagonal. Lower right: zeros. Forbidden cells
    hold a sentinel larger than any finite assignment total.

    ``variant="degree"`` adds the incident-edge context: ``|deg(i) - deg(j)|``
    for substitutions and the node degree for deletions and insertions.
    ``variant="plain"`` uses node costs only.
    """
    if variant not in ("degree", "plain"):
        raise ValueError(f"unknown cost variant {variant!r}")
    n1, n2 = g1.n, g2.n
    size = n1 + n2
    d1 = np.array(g1.degrees, dtype=np.int64)
    d2 = np.array(g2.degrees, dtype=np.int64)
    l1 = np.array(g1.labels, dtype=object)
    l2 = np.array(g2.labels, dtype=object)

    sub = (l1[:, None] != l2[None, :]).astype(np.int64)
    dele = np.ones(n1, dtype=np.int64)
    ins = np.ones(n2, dtype=np.int64)
    if variant == "degree":
        sub = sub + np.abs(d1[:, None] - d2[None, :])
        dele = dele + d1
        ins = ins + d2

    finite_max = max(int(sub.max(initial=0)), int(dele.max()), int(ins.max()))
    inf = size * finite_max + 1
    c = np.full((size, size), inf, dtype=np.int64)
    c[:n1, :n2] = sub
    c[np.arange(n1), n2 + np.arange(n1)] = dele
    c[n1 + np.arange(n2), np.arange(n2)] = ins
    c[n1:, n2:] = 0
    return c


def forbidden_mask(n1: int, n2: int) -> np.ndarray:
    """Cells of the deletion/insertion blocks that lie off the diagonal."""
    size = n1 + n2
    mask = np.zeros((size, size), dtype=bool)
    mask[:n1, n2:] = ~np.eye(n1, dtype=bool)
    mask[n1:, :n2] = ~np.eye(n2, dtype=bool)
    return mask


def _with_sentinel(cost) -> tuple[np.ndarray, float]:
    c = np.array(cost, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError("cost matrix must be square")
    finite = np.isfinite(c)
    if not finite.any():
        raise Infeasible("no finite cost cell")
    span = float(np.abs(c[finite]).max())
    sentinel = c.shape[0] * (span + 1.0) * 2 + 1.0
    c[~finite] = sentinel
    return c, sentinel


def hungarian(cost) -> np.ndarray:
    """Kuhn-Munkres with starred/primed zeros and line covers.

    Returns ``assignment`` with ``assignment[row] = column``.
    """
    c = np.array(cost, dtype=float)
    n = c.shape[0]
    c -= c.min(axis=1, keepdims=True)
    c -= c.min(axis=0, keepdims=True)

    starred = np.zeros((n, n), dtype=bool)
    primed = np.zeros((n, n), dtype=bool)
    row_cover = np.zeros(n, dtype=bool)
    col_cover = np.zeros(n, dtype=bool)

    for i in range(n):
        for j in range(n):
            if c[i, j] == 0 and not row_cover[i] and not col_cover[j]:
                starred[i, j] = True
                row_cover[i] = col_cover[j] = True
    row_cover[:] = False
    col_cover[:] = False

    while True:
        col_cover[:] = starred.any(axis=0)
        if col_cover.all():
            break
        while True:
            # find an uncovered zero
            uncovered = (c == 0) & ~row_cover[:, None] & ~col_cover[None, :]
            hits = np.argwhere(uncovered)
            if len(hits) == 0:
                # no uncovered zero: shift the uncovered minimum
                mask = ~row_cover[:, None] & ~col_cover[None, :]
                delta = c[mask].min()
                c[row_cover, :] += delta
                c[:, ~col_cover] -= delta
                continue
            i, j = hits[0]
            primed[i, j] = True
            star_cols = np.flatnonzero(starred[i])
            if len(star_cols):
                row_cover[i] = True
                col_cover[star_cols[0]] = False
                continue
            # augmenting path of alternating primes and stars starting at (i, j)
            path = [(i, j)]
            while True:
                star_rows = np.flatnonzero(starred[:, path[-1][1]])
                if len(star_rows) == 0:
                    break
                r = star_rows[0]
                path.append((r, path[-1][1]))
                path.append((r, int(np.flatnonzero(primed[r])[0])))
            for r, s in path:
                starred[r, s] = not starred[r, s]
            primed[:] = False
            row_cover[:] = False
            col_cover[:] = False
            break

    return np.argmax(starred, axis=1)


def jonker_volgenant(cost) -> np.ndarray:
    """Jonker-Volgenant: column reduction, reduction transfer, two rounds of
    augmenting row reduction, then shortest augmenting paths for the rows
    still free.

    Returns ``assignment`` with ``assignment[row] = column``.
    """
    c = np.array(cost, dtype=float)
    n = c.shape[0]
    rowsol = np.full(n, -1, dtype=np.int64)
    colsol = np.full(n, -1, dtype=np.int64)
    v = np.zeros(n)
    matches = np.zeros(n, dtype=np.int64)

    # column reduction
    for j in range(n - 1, -1, -1):
        imin = int(np.argmin(c[:, j]))
        v[j] = c[imin, j]
        matches[imin] += 1
        if matches[imin] == 1:
            rowsol[imin] = j
            colsol[j] = imin
        elif v[j] < v[rowsol[imin]]:
            j1 = rowsol[imin]
            rowsol[imin] = j
            colsol[j] = imin
            colsol[j1] = -1
        else:
            colsol[j] = -1

    # reduction transfer
    free = []
    for i in range(n):
        if matches[i] == 0:
            free.append(i)
        elif matches[i] == 1:
            j1 = rowsol[i]
            reduced = c[i] - v
            reduced[j1] = np.inf
            if n > 1:
                v[j1] -= reduced.min()

    # augmenting row reduction
    for _ in range(2):
        k = 0
        pending = free
        free = []
        while k < len(pending):
            i = pending[k]
            k += 1
            reduced = c[i] - v
            j1 = int(np.argmin(reduced))
            umin = reduced[j1]
            reduced[j1] = np.inf
            j2 = int(np.argmin(reduced)) if n > 1 else j1
            usubmin = reduced[j2] if n > 1 else np.inf
            i0 = colsol[j1]
            if umin < usubmin:
                v[j1] -= usubmin - umin
            elif i0 > -1:
                j1 = j2
                i0 = colsol[j2]
            if rowsol[i] > -1 and colsol[rowsol[i]] == i:
                colsol[rowsol[i]] = -1
            rowsol[i] = j1
            colsol[j1] = i
            if i0 > -1:
                rowsol[i0] = -1
                if umin < usubmin:
                    k -= 1
                    pending[k] = i0
                else:
                    free.append(i0)

    # shortest augmenting paths
    for freerow in free:
        d = c[freerow] - v
        pred = np.full(n, freerow, dtype=np.int64)
        collist = list(range(n))
        low = up = 0
        last = 0
        endofpath = -1
        minval = 0.0
        while endofpath < 0:
            if up == low:
                last = low - 1
                minval = d[collist[up]]
                up += 1
                for k in range(up, n):
                    j = collist[k]
                    h = d[j]
                    if h <= minval:
                        if h < minval:
                            up = low
                            minval = h
                        collist[k] = collist[up]
                        collist[up] = j
                        up += 1
                for k in range(low, up):
                    if colsol[collist[k]] < 0:
                        endofpath = collist[k]
                        break
            if endofpath < 0:
                j1 = collist[low]
                low += 1
                i = colsol[j1]
                h = c[i, j1] - v[j1] - minval
                k = up
                while k < n:
                    j = collist[k]
                    v2 = c[i, j] - v[j] - h
                    if v2 < d[j]:
                        pred[j] = i
                        if v2 == minval:
                            if colsol[j] < 0:
                                endofpath = j
                                break
                            collist[k] = collist[up]
                            collist[up] = j
                            up += 1
                        d[j] = v2
                    k += 1
        for k in range(last + 1):
            j1 = collist[k]
            v[j1] += d[j1] - minval
        while True:
            i = pred[endofpath]
            colsol[endofpath] = i
            j1 = endofpath
            endofpath = rowsol[i]
            rowsol[i] = j1
            if i == freerow:
                break

    return rowsol


def solve_lsap(cost, algorithm: Algorithm = "hungarian") -> np.ndarray:
    """Minimum-cost perfect assignment of a square matrix.

    Infinite cells are forbidden; :class:`Infeasible` is raised if every
    perfect assignment needs one.
    """
    c, sentinel = _with_sentinel(cost)
    if algorithm == "hungarian":
        assignment = hungarian(c)
    elif algorithm == "jonker_volgenant":
        assignment = jonker_volgenant(c)
    else:
        raise ValueError(f"unknown LSAP algorithm {algorithm!r}")
    assignment = np.asarray(assignment, dtype=np.int64)
    if sorted(assignment.tolist()) != list(range(c.shape[0])):
        raise Infeasible("solver returned a non-permutation")
    if (c[np.arange(len(assignment)), assignment] >= sentinel).any():
        raise Infeasible("no finite perfect assignment exists")
    return assignment


def assignment_cost(cost, assignment) -> float:
    c = np.asarray(cost)
    return c[np.arange(len(assignment)), assignment].sum().item()


def _prefer_identity(cost: np.ndarray, n1: int, n2: int) -> np.ndarray:
    # Among equally cheap assignments, pick the one keeping the most
    # substitutions i -> i. Scaling by more than the number of rows keeps every
    # optimum of the scaled problem optimal for the original one.
    scaled = cost * (cost.shape[0] + 1)
    sub = scaled[:n1, :n2]
    sub += 1
    k = min(n1, n2)
    sub[np.arange(k), np.arange(k)] -= 1
    return scaled


def assignment_ged(
    g1: Graph, g2: Graph, algorithm: Algorithm = "hungarian", variant: CostVariant = "degree"
) -> int:
    """GED upper bound: price the edit path induced by the optimal node assignment."""
    g1, g2 = _canonical_pair(g1, g2)
    n1, n2 = g1.n, g2.n
    c = build_cost_matrix(g1, g2, variant)
    assignment = solve_lsap(_prefer_identity(c, n1, n2), algorithm)
    if forbidden_mask(n1, n2)[np.arange(n1 + n2), assignment].any():
        raise Infeasible("assignment selected a forbidden cell")
    mapping = [int(j) if j < n2 else None for j in assignment[:n1]]
    return edit_path_cost(g1, g2, mapping)
