from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .backends import OracleBackend, RelationTruth, infer_all
from .exceptions import DomainError
from .prompting import DEFAULT_TEMPLATE, build_anchor_prompts
from .relation_data import candidate_categories, check_criterion, normalize_local, partition_c2
from .voting import select_top, vote


class RelationSurrogate(BaseEstimator):
    """Zero-shot pairwise-relation surrogate.

    ``fit`` stores the evaluated context (no training happens: the backend
    reads the labeled examples in-context). ``predict_relations`` builds one
    prompt per context solution, asks the backend for the anchor-versus-
    candidate labels and returns the ``n x q`` relation matrix;
    ``decision_function`` turns that matrix into voting scores, higher
    meaning a more promising candidate.

    Parameters
    ----------
    backend : object with ``infer``, default=None
        Relation backend; ``None`` uses the ground-truth oracle.
    criterion : {"c1", "c2"}, default="c1"
        Binary fitness comparison or ternary Good/Bad categories.
    beta : int, default=5
        Decimal places used when vectors are written into prompts.
    template_version : str, default="v1"
        Prompt template asset version.

    Attributes
    ----------
    X_ctx_ : ndarray of shape (n, D)
    y_ctx_ : ndarray of shape (n, M)
    good_ : ndarray of shape (n,) or None
        Good mask of the context (c2 only).
    records_ : list of InferenceRecord
        Records of the latest ``predict_relations`` call.
    """

    def __init__(self, backend=None, criterion="c1", beta=5, template_version=DEFAULT_TEMPLATE):
        self.backend = backend
        self.criterion = criterion
        self.beta = beta
        self.template_version = template_version

    def fit(self, X, y):
        criterion = check_criterion(self.criterion)
        X = check_array(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        if len(y) != len(X):
            raise DomainError("X and y must have the same number of rows")
        if len(X) < 2:
            raise DomainError("the context needs at least 2 evaluated solutions")
        if criterion == "c1" and y.shape[1] != 1:
            raise DomainError("c1 needs scalar fitness; use c2 for multi-objective data")
        self.X_ctx_ = X
        self.y_ctx_ = y
        self.good_ = partition_c2(y) if criterion == "c2" else None
        self.n_features_in_ = X.shape[1]
        return self

    def _backend(self):
        return OracleBackend() if self.backend is None else self.backend

    def build_prompts(self, X_query):
        check_is_fitted(self, "X_ctx_")
        X_query = check_array(X_query, dtype=float)
        if X_query.shape[1] != self.n_features_in_:
            raise DomainError(f"expected {self.n_features_in_} features, got {X_query.shape[1]}")
        ctx_n, query_n = normalize_local(self.X_ctx_, X_query)
        return build_anchor_prompts(
            ctx_n,
            query_n,
            self.criterion,
            fitness=self.y_ctx_[:, 0] if self.good_ is None else None,
            good=self.good_,
            beta=self.beta,
            template_version=self.template_version,
        )

    def truth_for(self, y_query) -> RelationTruth:
        """Ground truth for candidates whose true objective values are ``y_query``."""
        check_is_fitted(self, "X_ctx_")
        y_query = np.asarray(y_query, dtype=float)
        if y_query.ndim == 1:
            y_query = y_query[:, None]
        if self.good_ is None:
            return RelationTruth.from_fitness(self.y_ctx_[:, 0], y_query[:, 0])
        return RelationTruth.from_categories(self.good_, candidate_categories(self.y_ctx_, self.good_, y_query))

    def predict_relations(self, X_query, y_query=None, tag=None):
        """Relation matrix ``L`` (anchors x candidates).

        ``y_query`` (true candidate objectives) is only consulted by
        backends that read ground truth.
        """
        backend = self._backend()
        instances = self.build_prompts(X_query)
        truth = None
        if getattr(backend, "requires_truth", False):
            if y_query is None:
                raise DomainError(f"the {backend.kind} backend needs true candidate values (y_query)")
            truth = self.truth_for(y_query)
        L, self.records_ = infer_all(backend, instances, truth, tag=tag)
        return L

    def scores_from_relations(self, L):
        return vote(L, self.criterion, self.good_)

    def decision_function(self, X_query, y_query=None, tag=None):
        return self.scores_from_relations(self.predict_relations(X_query, y_query, tag=tag))

    def select(self, X_query, n_select, y_query=None):
        """Indices (ascending) of the ``n_select`` best-scored candidates."""
        return select_top(self.decision_function(X_query, y_query), n_select)
