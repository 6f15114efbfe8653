"""Minimum-cost bipartite assignment with infeasible entries.

``solve_assignment`` returns, among all matchings that use the largest
possible number of feasible (finite) entries, one of minimum total cost.
Infeasible entries are ``INFEASIBLE`` (``inf``); rectangular matrices are
padded to square with a finite penalty that exceeds any feasible total, so
the padded optimum never trades a feasible pair for a cheaper one.
"""

from __future__ import annotations

import math
from typing import List, Sequence, Tuple

import numpy as np

INFEASIBLE = math.inf


def _hungarian(a: List[List[float]]) -> List[int]:
    """Shortest-augmenting-path Hungarian method on a square matrix.

    Returns ``col_of_row``. O(n^3).
    """
    n = len(a)
    inf = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    p = [0] * (n + 1)  # p[j]: row matched to column j (1-based, 0 = free)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            row = a[i0 - 1]
            ui0 = u[i0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = row[j - 1] - ui0 - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    col_of_row = [0] * n
    for j in range(1, n + 1):
        if p[j]:
            col_of_row[p[j] - 1] = j - 1
    return col_of_row


def solve_assignment(cost) -> List[Tuple[int, int]]:
    """Match rows to columns; pairs through infeasible entries are never returned.

    Returns ``(row, col)`` pairs sorted by row.
    """
    c = np.asarray(cost, dtype=float)
    if c.ndim != 2:
        raise ValueError("cost matrix must be 2-D")
    n_rows, n_cols = c.shape
    if n_rows == 0 or n_cols == 0:
        return []
    feasible = np.isfinite(c)
    if not feasible.any():
        return []
    if (feasible.sum(axis=0) <= 1).all() and (feasible.sum(axis=1) <= 1).all():
        # feasible entries already form a matching, the only one of maximum size
        rows, cols = np.nonzero(feasible)
        return [(int(i), int(j)) for i, j in zip(rows, cols)]
    n = max(n_rows, n_cols)
    span = float(np.abs(c[feasible]).max())
    # any swap of finite entries changes the total by < 2*n*span
    penalty = 2.0 * n * span + 1.0
    square = np.full((n, n), penalty)
    square[:n_rows, :n_cols] = np.where(feasible, c, penalty)
    col_of_row = _hungarian(square.tolist())
    return [
        (i, j)
        for i, j in enumerate(col_of_row)
        if i < n_rows and j < n_cols and feasible[i, j]
    ]


def matching_cost(cost, pairs: Sequence[Tuple[int, int]]) -> float:
    c = np.asarray(cost, dtype=float)
    return float(sum(c[i, j] for i, j in pairs))
