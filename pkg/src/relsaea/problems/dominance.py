"""Pareto dominance, nondominated sorting and crowding distance (minimization)."""

from __future__ import annotations

from typing import List

import numpy as np

from ..exceptions import DomainError


def pareto_dominates(a, b) -> bool:
    """True iff ``a`` is no worse than ``b`` everywhere and better somewhere."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise DomainError(f"objective vectors must be 1-D and equal length, got {a.shape} and {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def dominance_matrix(F) -> np.ndarray:
    """``out[i, j]`` is True iff row ``i`` dominates row ``j``."""
    F = np.asarray(F, dtype=float)
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    return le & lt


def nondominated_sort(F) -> List[List[int]]:
    """Fast nondominated sort; returns fronts as ascending index lists."""
    F = np.asarray(F, dtype=float)
    if F.size == 0:
        return []
    if F.ndim == 1:
        F = F[:, None]
    dom = dominance_matrix(F)
    counts = dom.sum(axis=0)
    fronts = []
    current = np.flatnonzero(counts == 0)
    while current.size:
        fronts.append(current.tolist())
        counts = counts - dom[current].sum(axis=0)
        counts[current] = -1
        current = np.flatnonzero(counts == 0)
    return fronts


def front_ranks(F) -> np.ndarray:
    ranks = np.empty(len(F), dtype=int)
    for r, front in enumerate(nondominated_sort(F)):
        ranks[front] = r
    return ranks


def nondominated_mask(F) -> np.ndarray:
    F = np.asarray(F, dtype=float)
    if len(F) == 0:
        return np.zeros(0, dtype=bool)
    return ~dominance_matrix(F).any(axis=0)


def crowding_distance(F) -> np.ndarray:
    """NSGA-II crowding distance of each row; boundary points get ``inf``."""
    F = np.asarray(F, dtype=float)
    n, m = F.shape
    if n <= 2:
        return np.full(n, np.inf)
    dist = np.zeros(n)
    for j in range(m):
        order = np.argsort(F[:, j], kind="stable")
        lo, hi = F[order[0], j], F[order[-1], j]
        dist[order[0]] = dist[order[-1]] = np.inf
        if hi == lo:
            continue
        dist[order[1:-1]] += (F[order[2:], j] - F[order[:-2], j]) / (hi - lo)
    return dist
