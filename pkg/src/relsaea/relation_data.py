"""Turn evaluated solutions into labeled relation pairs.

Two labeling criteria are supported:

* ``c1`` compares fitness directly: +1 when the first solution is better
  (lower), -1 when it is worse. Ties go to the first solution (+1).
* ``c2`` first splits the set into Good and Bad halves, then labels a
  (Good, Bad) pair +1, (Bad, Good) -1 and any same-class pair 0.

Decision vectors are min-max scaled per dimension before they are shown to
a relation model; a constant dimension maps to 0.5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Hashable, List, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import BalanceError, DomainError
from .problems.dominance import crowding_distance, dominance_matrix, nondominated_sort

BETTER, SIMILAR, WORSE = 1, 0, -1
C1_LABELS = (BETTER, WORSE)
C2_LABELS = (BETTER, SIMILAR, WORSE)
CRITERIA = ("c1", "c2")


class Category(str, Enum):
    GOOD = "good"
    BAD = "bad"


def check_criterion(criterion: str) -> str:
    c = str(criterion).lower()
    if c not in CRITERIA:
        raise DomainError(f"criterion must be one of {CRITERIA}, got {criterion!r}")
    return c


def label_alphabet(criterion: str):
    return C1_LABELS if check_criterion(criterion) == "c1" else C2_LABELS


# --------------------------------------------------------------------------
# normalization


class MinMaxNormalizer(TransformerMixin, BaseEstimator):
    """Per-dimension min-max scaling with a fixed value for constant dimensions.

    Unlike :class:`sklearn.preprocessing.MinMaxScaler`, a dimension whose
    minimum equals its maximum maps to ``degenerate_value`` (0.5 by
    default), and values outside the fitted range are never clipped.
    """

    def __init__(self, degenerate_value=0.5):
        self.degenerate_value = degenerate_value

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        self.data_min_ = X.min(axis=0)
        self.data_max_ = X.max(axis=0)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "data_min_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise DomainError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        span = self.data_max_ - self.data_min_
        flat = span == 0
        out = (X - self.data_min_) / np.where(flat, 1.0, span)
        out[:, flat] = self.degenerate_value
        return out


def normalize_local(ctx, query):
    """Scale ``ctx`` and ``query`` jointly, using only the vectors in this prompt."""
    ctx = check_array(ctx, dtype=float, ensure_min_samples=0)
    query = check_array(query, dtype=float, ensure_min_samples=0)
    both = np.vstack([ctx, query])
    if len(both) == 0:
        raise DomainError("normalize_local needs at least one vector")
    scaler = MinMaxNormalizer().fit(both)
    return scaler.transform(ctx) if len(ctx) else ctx.copy(), scaler.transform(query) if len(query) else query.copy()


def normalize_global(corpus) -> MinMaxNormalizer:
    """Fit corpus-wide statistics; the returned scaler's ``transform`` applies them."""
    corpus = check_array(corpus, dtype=float)
    return MinMaxNormalizer().fit(corpus)


def round_vector(v, beta: int = 5) -> List[str]:
    """Fixed-width decimal strings with ``beta`` places, ties to even."""
    if beta < 1:
        raise DomainError("beta must be >= 1")
    return [f"{float(x):.{beta}f}" for x in np.ravel(v)]


def format_vector(v, beta: int = 5) -> str:
    return "[" + ", ".join(round_vector(v, beta)) + "]"


# --------------------------------------------------------------------------
# labels


def label_c1(f_i: float, f_j: float) -> int:
    f_i, f_j = float(f_i), float(f_j)
    if math.isnan(f_i) or math.isnan(f_j):
        raise DomainError("fitness values must not be NaN")
    return BETTER if f_i <= f_j else WORSE


def labels_c1(f_anchor: float, f_others) -> np.ndarray:
    """Vectorized :func:`label_c1` of one anchor against many solutions."""
    f_others = np.asarray(f_others, dtype=float)
    if math.isnan(float(f_anchor)) or np.isnan(f_others).any():
        raise DomainError("fitness values must not be NaN")
    return np.where(float(f_anchor) <= f_others, BETTER, WORSE)


def _is_good(tag) -> bool:
    if isinstance(tag, Category):
        return tag is Category.GOOD
    if isinstance(tag, (bool, np.bool_)):
        return bool(tag)
    if isinstance(tag, str):
        return Category(tag.lower()) is Category.GOOD
    raise DomainError(f"not a category tag: {tag!r}")


def label_c2(tag_i, tag_j) -> int:
    gi, gj = _is_good(tag_i), _is_good(tag_j)
    if gi == gj:
        return SIMILAR
    return BETTER if gi else WORSE


def labels_c2(good_anchor: bool, good_others) -> np.ndarray:
    good_others = np.asarray(good_others, dtype=bool)
    if good_anchor:
        return np.where(good_others, SIMILAR, BETTER)
    return np.where(good_others, WORSE, SIMILAR)


def _as_objectives(F) -> np.ndarray:
    F = np.asarray(F, dtype=float)
    if F.ndim == 1:
        F = F[:, None]
    if F.ndim != 2:
        raise DomainError("objective values must be 1-D (fitness) or 2-D (n, M)")
    return F


def partition_c2(F, mode: str | None = None) -> np.ndarray:
    """Boolean Good mask over ``F``: the better ``ceil(k/2)`` solutions.

    SOP uses a median split on fitness (ties by position). MOP fills the
    Good set front by front; a front that does not fit entirely is cut by
    descending crowding distance.
    """
    F = _as_objectives(F)
    k = len(F)
    if k < 2:
        raise DomainError("partition_c2 needs at least 2 solutions")
    if mode is None:
        mode = "sop" if F.shape[1] == 1 else "mop"
    half = math.ceil(k / 2)
    good = np.zeros(k, dtype=bool)
    if mode == "sop":
        if F.shape[1] != 1:
            raise DomainError("SOP partition needs scalar fitness")
        good[np.argsort(F[:, 0], kind="stable")[:half]] = True
        return good
    if mode != "mop":
        raise DomainError(f"mode must be 'sop' or 'mop', got {mode!r}")
    filled = 0
    for front in nondominated_sort(F):
        if filled + len(front) <= half:
            good[front] = True
            filled += len(front)
        else:
            cd = crowding_distance(F[front])
            order = np.lexsort((np.asarray(front), -cd))
            good[np.asarray(front)[order[: half - filled]]] = True
            filled = half
        if filled == half:
            break
    return good


def candidate_categories(ctx_F, ctx_good, cand_F) -> np.ndarray:
    """Ground-truth Good mask for candidates judged against a partitioned context.

    SOP: a candidate is Good iff its fitness is no worse than the worst Good
    context member. MOP: a candidate is Good iff the front it would occupy in
    the context is no deeper than the deepest front holding a Good member.
    """
    ctx_F = _as_objectives(ctx_F)
    cand_F = _as_objectives(cand_F)
    ctx_good = np.asarray(ctx_good, dtype=bool)
    if ctx_F.shape[1] == 1:
        return cand_F[:, 0] <= ctx_F[ctx_good, 0].max()
    ranks = np.empty(len(ctx_F), dtype=int)
    for r, front in enumerate(nondominated_sort(ctx_F)):
        ranks[front] = r
    last_good = ranks[ctx_good].max()
    le = np.all(ctx_F[:, None, :] <= cand_F[None, :, :], axis=2)
    lt = np.any(ctx_F[:, None, :] < cand_F[None, :, :], axis=2)
    dominated_by = le & lt
    cand_rank = np.where(
        dominated_by.any(axis=0),
        1 + np.max(np.where(dominated_by, ranks[:, None], -1), axis=0),
        0,
    )
    return cand_rank <= last_good


# --------------------------------------------------------------------------
# pair datasets


@dataclass(frozen=True)
class RelationPair:
    first: Hashable
    second: Hashable
    label: int

    def __post_init__(self):
        if self.first == self.second:
            raise DomainError("a relation pair needs two distinct solutions")
        if self.label not in C2_LABELS:
            raise DomainError(f"invalid relation label {self.label!r}")


def build_relation_pairs(F, criterion: str, ids: Sequence[Any] | None = None) -> List[RelationPair]:
    """All ordered pairs ``(i, j), i != j`` labeled under ``criterion``."""
    criterion = check_criterion(criterion)
    F = _as_objectives(F)
    ids = list(range(len(F))) if ids is None else list(ids)
    if criterion == "c1":
        if F.shape[1] != 1:
            raise DomainError("c1 labels need scalar fitness")
        f = F[:, 0]
        return [
            RelationPair(ids[i], ids[j], label_c1(f[i], f[j]))
            for i in range(len(f))
            for j in range(len(f))
            if i != j
        ]
    good = partition_c2(F)
    return [
        RelationPair(ids[i], ids[j], label_c2(good[i], good[j]))
        for i in range(len(F))
        for j in range(len(F))
        if i != j
    ]


def balance_labels(pairs: Sequence[RelationPair], seed=None) -> List[RelationPair]:
    """Random under-sampling so +1 and -1 counts match and, when 0-labels
    exist, the intra-class (0) count equals the combined inter-class count.

    With ``k = min(#(+1), #(-1), #(0) // 2)`` the result keeps ``k`` of each
    inter-class label and ``2k`` zeros. Input without any 0 labels is treated
    as binary data and only the +1/-1 counts are equalized. Original order
    is preserved among kept pairs.
    """
    pairs = list(pairs)
    by_label = {lab: [i for i, p in enumerate(pairs) if p.label == lab] for lab in C2_LABELS}
    binary = not by_label[SIMILAR]
    for lab in (BETTER, WORSE) if binary else (BETTER, WORSE, SIMILAR):
        if not by_label[lab]:
            raise BalanceError(lab)
    if binary:
        k = min(len(by_label[BETTER]), len(by_label[WORSE]))
        quota = {BETTER: k, WORSE: k, SIMILAR: 0}
    else:
        k = min(len(by_label[BETTER]), len(by_label[WORSE]), len(by_label[SIMILAR]) // 2)
        if k == 0:
            raise BalanceError(SIMILAR)
        quota = {BETTER: k, WORSE: k, SIMILAR: 2 * k}
    rng = np.random.default_rng(seed)
    keep = []
    for lab in C2_LABELS:
        idx = by_label[lab]
        if len(idx) > quota[lab]:
            idx = sorted(rng.choice(idx, size=quota[lab], replace=False).tolist())
        keep.extend(idx)
    return [pairs[i] for i in sorted(keep)]
