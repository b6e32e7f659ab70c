"""Aggregate an anchor-by-candidate relation matrix into candidate scores.

Each row of ``L`` holds one anchor's verdicts on all candidates: +1 means
the anchor beats the candidate, -1 means the candidate beats the anchor,
0 (c2 only) means both sit in the same category. Higher scores are better.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DomainError


def _check_matrix(L) -> np.ndarray:
    L = np.asarray(L)
    if L.ndim != 2 or L.size == 0:
        raise DomainError(f"relation matrix must be a non-empty 2-D array, got shape {L.shape}")
    Li = L.astype(int)
    if (np.abs(Li) > 1).any() or (Li != L).any():
        raise DomainError("relation labels must lie in {-1, 0, +1}")
    return Li


def score_c1(L) -> np.ndarray:
    """Negative column sums: integer scores in ``[-n, n]``."""
    L = _check_matrix(L)
    if (L == 0).any():
        raise DomainError("c1 relation matrices cannot contain 0 labels")
    return -L.sum(axis=0)


def score_c2(L, anchor_good) -> np.ndarray:
    """Normalized c2 votes in ``[-1, 1]``.

    A Good anchor's 0 or -1 and a Bad anchor's -1 count in favor of the
    candidate; a +1 from either group, or a Bad anchor's 0, counts against.
    """
    L = _check_matrix(L)
    if anchor_good is None:
        raise DomainError("c2 scoring needs the anchors' Good/Bad tags")
    good = np.asarray(anchor_good, dtype=bool).reshape(-1)
    if len(good) != L.shape[0]:
        raise DomainError(f"need {L.shape[0]} anchor tags, got {len(good)}")
    # every anchor casts exactly one +1/-1 vote, so favor - against is a row sum
    ballots = np.where(good[:, None], np.where(L == 1, -1, 1), np.where(L == -1, 1, -1))
    return ballots.sum(axis=0) / L.shape[0]


def vote(L, criterion: str, anchor_good=None) -> np.ndarray:
    if criterion == "c1":
        return score_c1(L)
    if criterion == "c2":
        return score_c2(L, anchor_good)
    raise DomainError(f"unknown criterion {criterion!r}")


def rank_order(scores) -> np.ndarray:
    """Candidate indices from best to worst score; ties go to the lower index."""
    scores = np.asarray(scores, dtype=float)
    return np.lexsort((np.arange(len(scores)), -scores))


def select_top(scores, n_prime: int) -> np.ndarray:
    """Indices of the ``n_prime`` highest scores, returned in ascending index order."""
    scores = np.asarray(scores, dtype=float).reshape(-1)
    if not 1 <= n_prime <= len(scores):
        raise DomainError(f"n_prime must lie in [1, {len(scores)}], got {n_prime}")
    return np.sort(rank_order(scores)[:n_prime])
