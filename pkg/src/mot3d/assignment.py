"""Optimal bipartite assignment with deterministic tie-breaking.

This is the shared matching kernel for detection-to-track association and for
evaluation-time prediction-to-ground-truth matching. It always returns a
minimum-total-cost maximal matching, and among equal-cost optima it returns
the lexicographically smallest row-sorted pair list (lowest row index, then
lowest column index), so identical inputs always yield identical pairings.

Gating (discarding matched pairs whose affinity is too low) belongs to the
callers; costs must be finite, with infeasibility expressed by a large finite
sentinel if a caller needs one.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

# Relative slack when deciding whether fixing a pair preserves optimality.
# Summation order differs between the full solve and the forced completions,
# so exact equality would spuriously reject true optima.
_REL_EPS = 1e-12


def _optimal_total(cost: np.ndarray) -> float:
    if cost.shape[0] == 0 or cost.shape[1] == 0:
        return 0.0
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum())


def solve_min_cost(cost) -> list[tuple[int, int]]:
    """Minimum-cost assignment of min(rows, cols) pairs.

    Args:
        cost: 2D array-like of finite reals; lower is better. Either
            dimension may be zero.

    Returns:
        Pairs (row, col) sorted by row, forming an optimal maximal matching.
        Among equal-cost optima, the lexicographically smallest pair list.

    Raises:
        ValueError: if the matrix is not 2D or contains non-finite entries.
    """
    c = np.asarray(cost, dtype=np.float64)
    if c.ndim != 2:
        raise ValueError(f"cost matrix must be 2D, got shape {c.shape}")
    n_rows, n_cols = c.shape
    if n_rows == 0 or n_cols == 0:
        return []
    if not np.isfinite(c).all():
        raise ValueError("cost matrix entries must be finite")

    best_total = _optimal_total(c)
    slack = _REL_EPS * max(1.0, abs(best_total), float(np.abs(c).max()))

    k = min(n_rows, n_cols)
    pairs: list[tuple[int, int]] = []
    fixed_cost = 0.0
    row_pool = list(range(n_rows))
    col_pool = list(range(n_cols))

    for position in range(k):
        remaining = k - position - 1
        committed = False
        for ri, r in enumerate(row_pool):
            # Rows skipped here stay unassigned; enough rows must remain
            # below r to complete the matching.
            if len(row_pool) - ri - 1 < remaining:
                break
            for ci, col in enumerate(col_pool):
                sub = c[np.ix_(row_pool[ri + 1:], col_pool[:ci] + col_pool[ci + 1:])]
                candidate = fixed_cost + c[r, col] + _optimal_total(sub)
                if candidate <= best_total + slack:
                    pairs.append((r, col))
                    fixed_cost += c[r, col]
                    row_pool = row_pool[ri + 1:]
                    col_pool = col_pool[:ci] + col_pool[ci + 1:]
                    committed = True
                    break
            if committed:
                break
        if not committed:  # pragma: no cover - optimality guarantees a pair
            raise RuntimeError("failed to extend an optimal assignment")
    return pairs


def total_cost(cost, pairs: list[tuple[int, int]]) -> float:
    """Sum of matrix entries over an assignment, in pair order."""
    c = np.asarray(cost, dtype=np.float64)
    acc = 0.0
    for r, col in pairs:
        acc += float(c[r, col])
    return acc
