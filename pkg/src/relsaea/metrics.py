"""Relation-accuracy and ranking metrics, plus the IGD indicator.

Ranking metrics compare predicted scores (higher is better) with a true
loss (lower is better). Both sides break ties by candidate index wherever
an explicit ordering is needed.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import rankdata

from .exceptions import DomainError


def element_acc(L_pred, L_true) -> float:
    L_pred = np.asarray(L_pred)
    L_true = np.asarray(L_true)
    if L_pred.shape != L_true.shape:
        raise DomainError(f"shape mismatch: {L_pred.shape} vs {L_true.shape}")
    if L_pred.size == 0:
        raise DomainError("empty relation matrices")
    return float(np.mean(L_pred == L_true))


def _pred_order(scores):
    scores = np.asarray(scores, dtype=float)
    return np.lexsort((np.arange(len(scores)), -scores))


def _true_order(f_true):
    f_true = np.asarray(f_true, dtype=float)
    return np.lexsort((np.arange(len(f_true)), f_true))


def _check_pair(scores, f_true):
    scores = np.asarray(scores, dtype=float).reshape(-1)
    f_true = np.asarray(f_true, dtype=float).reshape(-1)
    if len(scores) != len(f_true):
        raise DomainError("scores and true values must have the same length")
    if len(scores) == 0:
        raise DomainError("no candidates")
    return scores, f_true


def binary_acc(scores_pred, f_true) -> float:
    """Overlap between the predicted and the true better half (``ceil(q/2)`` each)."""
    scores_pred, f_true = _check_pair(scores_pred, f_true)
    half = math.ceil(len(scores_pred) / 2)
    pred = set(_pred_order(scores_pred)[:half].tolist())
    true = set(_true_order(f_true)[:half].tolist())
    return len(pred & true) / half


def rank_acc(scores_pred, f_true) -> float:
    """Share of candidates whose predicted rank position equals their true one."""
    scores_pred, f_true = _check_pair(scores_pred, f_true)
    q = len(scores_pred)
    pos_pred = np.empty(q, dtype=int)
    pos_true = np.empty(q, dtype=int)
    pos_pred[_pred_order(scores_pred)] = np.arange(q)
    pos_true[_true_order(f_true)] = np.arange(q)
    return float(np.mean(pos_pred == pos_true))


class SpearmanResult(NamedTuple):
    rho: float
    degenerate: bool


def spearman_rho(scores_pred, f_true) -> SpearmanResult:
    """Spearman correlation (average ranks for ties) of scores with true quality.

    +1 means the score ordering matches the true ordering. When either side
    has no rank variance the result is 0 with ``degenerate=True``.
    """
    scores_pred, f_true = _check_pair(scores_pred, f_true)
    if len(scores_pred) < 2:
        raise DomainError("spearman_rho needs at least 2 candidates")
    a = rankdata(scores_pred)
    b = rankdata(-f_true)
    a = a - a.mean()
    b = b - b.mean()
    denom = math.sqrt(float(a @ a) * float(b @ b))
    if denom == 0.0:
        return SpearmanResult(0.0, True)
    return SpearmanResult(float(a @ b) / denom, False)


def igd(approx, reference) -> float:
    """Mean distance from each reference point to its nearest approximation point."""
    approx = np.atleast_2d(np.asarray(approx, dtype=float))
    reference = np.atleast_2d(np.asarray(reference, dtype=float))
    if approx.size == 0 or reference.size == 0:
        raise DomainError("igd needs non-empty sets")
    if approx.shape[1] != reference.shape[1]:
        raise DomainError("approximation and reference sets differ in dimension")
    return float(cdist(reference, approx).min(axis=1).mean())
