"""Relation-surrogate-assisted evolutionary loop.

Each generation produces ``N`` offspring, asks the relation surrogate to
score them against a context drawn from the current population, truly
evaluates only the ``N'`` best-scored offspring and merges them back by
environmental selection. Single-objective runs use the c1 criterion and
keep the ``N`` best; multi-objective runs use c2 and NSGA-II style
selection (front order, then crowding distance).
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import numpy as np
from sklearn.base import BaseEstimator

from .backends import BackendConfig, TranscriptWriter, make_backend
from .exceptions import BackendError, BudgetExceeded, ConfigError, DomainError
from .metrics import igd
from .operators import OperatorParams, gen_offspring, latin_hypercube
from .problems import EvaluationBudget, Problem, evaluate, get_problem
from .problems.dominance import crowding_distance, dominance_matrix, nondominated_sort
from .prompting import DEFAULT_TEMPLATE
from .relation_data import check_criterion, partition_c2
from .surrogate import RelationSurrogate
from .voting import select_top

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Solution:
    x: np.ndarray
    f: np.ndarray
    eval_id: int

    def __post_init__(self):
        for name in ("x", "f"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


class Archive:
    """Append-only record of every truly evaluated solution."""

    def __init__(self):
        self._items: List[Solution] = []

    def append(self, sol: Solution):
        if self._items and sol.eval_id <= self._items[-1].eval_id:
            raise DomainError("archive eval ids must increase")
        self._items.append(sol)

    def __len__(self):
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def __getitem__(self, i):
        return self._items[i]

    @property
    def X(self) -> np.ndarray:
        return np.array([s.x for s in self._items])

    @property
    def F(self) -> np.ndarray:
        return np.array([s.f for s in self._items])


@dataclass
class RunConfig:
    problem: str = "lzg/ellipsoid"
    D: int = 5
    M: Optional[int] = None
    max_fes: int = 300
    pop_size: int = 30
    n_eval: int = 3
    context_size: int = 30
    criterion: Optional[str] = None
    beta: int = 5
    template_version: str = DEFAULT_TEMPLATE
    backend: BackendConfig = field(default_factory=BackendConfig)
    operators: OperatorParams = field(default_factory=OperatorParams)
    seed: int = 0
    reference_points: int = 500

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        backend = data.pop("backend", None) or {}
        operators = data.pop("operators", None) or {}
        try:
            return cls(
                backend=backend if isinstance(backend, BackendConfig) else BackendConfig(**backend),
                operators=operators if isinstance(operators, OperatorParams) else OperatorParams(**operators),
                **data,
            )
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        return asdict(self)

    def resolved_criterion(self, M: int) -> str:
        if self.criterion is None:
            return "c1" if M == 1 else "c2"
        return check_criterion(self.criterion)

    def validate(self, problem: Problem | None = None) -> "RunConfig":
        if self.pop_size < 2:
            raise ConfigError("pop_size must be >= 2")
        if not 1 <= self.n_eval <= self.pop_size:
            raise ConfigError("n_eval must lie in [1, pop_size]")
        if self.context_size < 2:
            raise ConfigError("context_size must be >= 2")
        if self.max_fes < self.pop_size:
            raise ConfigError(f"max_fes ({self.max_fes}) must cover the initial population ({self.pop_size})")
        if self.beta < 1:
            raise ConfigError("beta must be >= 1")
        self.backend.validate()
        self.operators.validate()
        if problem is not None and self.resolved_criterion(problem.M) == "c1" and problem.M > 1:
            raise ConfigError("criterion c1 needs a single-objective problem")
        return self


@dataclass
class RunResult:
    problem: str
    indicator: str  # "best_f" or "igd"
    trajectory: np.ndarray  # indicator after each true evaluation
    archive: Archive
    best_x: Optional[np.ndarray] = None
    best_f: Optional[float] = None
    front_X: Optional[np.ndarray] = None
    front_F: Optional[np.ndarray] = None
    generations: List[Dict] = field(default_factory=list)
    completed: bool = True

    @property
    def used_fes(self) -> int:
        return len(self.archive)


class RunAborted(Exception):
    def __init__(self, message, result: RunResult):
        super().__init__(message)
        self.result = result


# --------------------------------------------------------------------------
# selection helpers


def _mop_order(F) -> np.ndarray:
    """All indices ordered by front, then descending crowding distance, then index."""
    order = []
    for front in nondominated_sort(F):
        front = np.asarray(front)
        cd = crowding_distance(F[front])
        order.extend(front[np.lexsort((front, -cd))].tolist())
    return np.asarray(order, dtype=int)


def environmental_select(F, N: int, mode: str | None = None) -> np.ndarray:
    """Indices of the ``N`` survivors among rows of ``F``.

    SOP keeps the ``N`` lowest fitness values (ties by position); MOP admits
    whole fronts and truncates the last admitted one by crowding distance.
    """
    F = np.asarray(F, dtype=float)
    if F.ndim == 1:
        F = F[:, None]
    if mode is None:
        mode = "sop" if F.shape[1] == 1 else "mop"
    if N >= len(F):
        return np.arange(len(F))
    if mode == "sop":
        return np.sort(np.argsort(F[:, 0], kind="stable")[:N])
    keep = []
    for front in nondominated_sort(F):
        if len(keep) + len(front) <= N:
            keep.extend(front)
        else:
            front = np.asarray(front)
            cd = crowding_distance(F[front])
            keep.extend(front[np.lexsort((front, -cd))][: N - len(keep)].tolist())
        if len(keep) == N:
            break
    return np.sort(np.asarray(keep, dtype=int))


def tournament_key(F) -> np.ndarray:
    """Scalar key (lower is better) used by binary tournament."""
    F = np.asarray(F, dtype=float)
    if F.ndim == 1 or F.shape[1] == 1:
        return F.reshape(-1)
    key = np.empty(len(F))
    key[_mop_order(F)] = np.arange(len(F))
    return key


def sample_context(pop_X, pop_F, tau: int, criterion: str):
    """Context for the surrogate: the population truncated to its ``tau`` best.

    Returns ``(X, F, good)`` where ``good`` is the c2 Good mask (None for c1).
    """
    criterion = check_criterion(criterion)
    pop_X = np.asarray(pop_X, dtype=float)
    pop_F = np.asarray(pop_F, dtype=float)
    if pop_F.ndim == 1:
        pop_F = pop_F[:, None]
    if len(pop_X) < 2:
        raise DomainError("a context needs at least 2 evaluated solutions")
    if pop_F.shape[1] == 1:
        order = np.argsort(pop_F[:, 0], kind="stable")
    else:
        order = _mop_order(pop_F)
    idx = order[:tau] if len(order) > tau else np.arange(len(pop_X))
    X, F = pop_X[idx], pop_F[idx]
    good = partition_c2(F) if criterion == "c2" else None
    return X, F, good


def initialize(problem: Problem, N: int, rng, budget: EvaluationBudget, archive: Archive):
    if budget.remaining < N:
        raise BudgetExceeded(f"budget of {budget.max_fes} cannot cover {N} initial evaluations")
    X = latin_hypercube(N, problem.lower, problem.upper, rng)
    F = []
    for x in X:
        eid = budget.used_fes
        f = evaluate(problem, x, budget)
        archive.append(Solution(x, f, eid))
        F.append(f)
    return X, np.array(F)


class _Tracker:
    """Indicator trajectory: best-so-far fitness (SOP) or IGD of the archive's nondominated set (MOP)."""

    def __init__(self, problem: Problem, n_reference: int):
        self.mop = problem.multi_objective
        self.values: List[float] = []
        self.best = np.inf
        self.front = np.empty((0, problem.M))
        self.reference = None
        if self.mop and problem.reference_front is not None:
            self.reference = problem.reference_front(n_reference)
        self._igd = np.nan

    @property
    def indicator(self):
        return "igd" if self.mop else "best_f"

    def add(self, f):
        if not self.mop:
            self.best = min(self.best, float(f[0]))
            self.values.append(self.best)
            return
        F = self.front
        le = np.all(F <= f, axis=1) & np.any(F < f, axis=1) if len(F) else np.zeros(0, bool)
        if not le.any():
            dominated = np.all(f <= F, axis=1) & np.any(f < F, axis=1) if len(F) else np.zeros(0, bool)
            self.front = np.vstack([F[~dominated], f])
            if self.reference is not None:
                self._igd = igd(self.front, self.reference)
        self.values.append(self._igd)


class RelationSAEA(BaseEstimator):
    """Surrogate-assisted EA whose surrogate is a pairwise relation model.

    Parameters mirror :class:`RunConfig`. ``fit(problem)`` runs the loop
    until the evaluation budget is spent.

    Attributes
    ----------
    result_ : RunResult
    best_x_, best_f_ : best solution found (single-objective)
    front_X_, front_F_ : nondominated set of the archive (multi-objective)
    """

    def __init__(
        self,
        pop_size=30,
        n_eval=3,
        context_size=30,
        max_fes=300,
        criterion=None,
        backend=None,
        operators=None,
        beta=5,
        template_version=DEFAULT_TEMPLATE,
        reference_points=500,
        transcript_path=None,
        random_state=None,
    ):
        self.pop_size = pop_size
        self.n_eval = n_eval
        self.context_size = context_size
        self.max_fes = max_fes
        self.criterion = criterion
        self.backend = backend
        self.operators = operators
        self.beta = beta
        self.template_version = template_version
        self.reference_points = reference_points
        self.transcript_path = transcript_path
        self.random_state = random_state

    def _make_backend(self, seed):
        backend = self.backend
        if backend is None:
            backend = BackendConfig(kind="oracle")
        if isinstance(backend, BackendConfig):
            cfg = BackendConfig(**backend.to_dict())
            if cfg.kind == "random" and cfg.seed is None:
                cfg.seed = int(np.random.SeedSequence([seed, 1]).generate_state(1)[0])
            transcript = TranscriptWriter(self.transcript_path) if self.transcript_path and cfg.kind == "llm" else None
            return make_backend(cfg, transcript=transcript)
        return backend

    def fit(self, problem: Problem, y=None):
        criterion = self.criterion or ("c1" if problem.M == 1 else "c2")
        criterion = check_criterion(criterion)
        if criterion == "c1" and problem.M > 1:
            raise ConfigError("criterion c1 needs a single-objective problem")
        if not 1 <= self.n_eval <= self.pop_size:
            raise ConfigError("n_eval must lie in [1, pop_size]")
        ops = (self.operators or OperatorParams()).validate()
        seed = int(self.random_state) if isinstance(self.random_state, (int, np.integer)) else 0
        rng = np.random.default_rng(self.random_state)
        backend = self._make_backend(seed)
        surrogate = RelationSurrogate(backend=backend, criterion=criterion, beta=self.beta,
                                      template_version=self.template_version)

        budget = EvaluationBudget(self.max_fes)
        archive = Archive()
        tracker = _Tracker(problem, self.reference_points)
        generations: List[Dict] = []
        P_X, P_F = initialize(problem, self.pop_size, rng, budget, archive)
        for s in archive:
            tracker.add(s.f)

        completed = True
        gen = 0
        try:
            while not budget.exhausted:
                gen += 1
                Q = gen_offspring(P_X, tournament_key(P_F), self.pop_size, problem.lower, problem.upper, ops, rng)
                ctx_X, ctx_F, _ = sample_context(P_X, P_F, self.context_size, criterion)
                surrogate.fit(ctx_X, ctx_F)
                y_query = problem.evaluate_many(Q) if getattr(backend, "requires_truth", False) else None
                scores = surrogate.decision_function(Q, y_query, tag={"generation": gen})
                n_take = min(self.n_eval, budget.remaining)
                chosen = select_top(scores, n_take)
                new_F = []
                for k in chosen:
                    eid = budget.used_fes
                    f = evaluate(problem, Q[k], budget)
                    archive.append(Solution(Q[k], f, eid))
                    tracker.add(f)
                    new_F.append(f)
                all_X = np.vstack([P_X, Q[chosen]])
                all_F = np.vstack([P_F, np.array(new_F)])
                keep = environmental_select(all_F, self.pop_size)
                P_X, P_F = all_X[keep], all_F[keep]
                generations.append({
                    "generation": gen,
                    "fes": budget.used_fes,
                    "selected": [int(k) for k in chosen],
                    "scores": [float(s) for s in scores],
                    "fallback_rows": sum(r.fallback for r in surrogate.records_),
                    tracker.indicator: tracker.values[-1],
                })
        except BackendError as exc:
            completed = False
            logger.error("run aborted in generation %d: %s", gen, exc)
            self.result_ = self._result(problem, tracker, archive, generations, completed)
            raise RunAborted(str(exc), self.result_) from exc
        finally:
            if hasattr(backend, "close"):
                backend.close()

        self.result_ = self._result(problem, tracker, archive, generations, completed)
        return self

    def _result(self, problem, tracker, archive, generations, completed):
        res = RunResult(
            problem=problem.name,
            indicator=tracker.indicator,
            trajectory=np.array(tracker.values, dtype=float),
            archive=archive,
            generations=generations,
            completed=completed,
        )
        F = archive.F
        X = archive.X
        if problem.multi_objective:
            mask = ~dominance_matrix(F).any(axis=0)
            res.front_X, res.front_F = X[mask], F[mask]
            self.front_X_, self.front_F_ = res.front_X, res.front_F
        else:
            i = int(np.argmin(F[:, 0]))
            res.best_x, res.best_f = X[i], float(F[i, 0])
            self.best_x_, self.best_f_ = res.best_x, res.best_f
        return res


def run(config: RunConfig, transcript_path=None) -> RunResult:
    """Build the problem named in ``config`` and run the loop on it."""
    problem = get_problem(config.problem, config.D, config.M)
    config.validate(problem)
    est = RelationSAEA(
        pop_size=config.pop_size,
        n_eval=config.n_eval,
        context_size=config.context_size,
        max_fes=config.max_fes,
        criterion=config.resolved_criterion(problem.M),
        backend=config.backend,
        operators=config.operators,
        beta=config.beta,
        template_version=config.template_version,
        reference_points=config.reference_points,
        transcript_path=transcript_path,
        random_state=config.seed,
    )
    return est.fit(problem).result_


# --------------------------------------------------------------------------
# plain GA used to harvest population snapshots


@dataclass
class Snapshot:
    generation: int
    parents_X: np.ndarray
    parents_F: np.ndarray
    offspring_X: np.ndarray
    offspring_F: np.ndarray


def run_ga(problem: Problem, pop_size=100, generations=100, snapshot_gens=(10, 50, 90),
           operators: OperatorParams | None = None, seed=0) -> Dict[int, Snapshot]:
    """(mu + lambda) GA with every offspring evaluated (no surrogate screening).

    Generation ``g`` (1-based) breeds offspring from the population it
    inherits; the snapshot for ``g`` holds both that population and its
    offspring. Evaluations here are not budgeted.
    """
    ops = (operators or OperatorParams()).validate()
    rng = np.random.default_rng(seed)
    P_X = latin_hypercube(pop_size, problem.lower, problem.upper, rng)
    P_F = problem.evaluate_many(P_X)
    wanted = set(snapshot_gens)
    out = {}
    for g in range(1, generations + 1):
        Q_X = gen_offspring(P_X, tournament_key(P_F), pop_size, problem.lower, problem.upper, ops, rng)
        Q_F = problem.evaluate_many(Q_X)
        if g in wanted:
            out[g] = Snapshot(g, P_X.copy(), P_F.copy(), Q_X, Q_F)
        all_X = np.vstack([P_X, Q_X])
        all_F = np.vstack([P_F, Q_F])
        keep = environmental_select(all_F, pop_size)
        P_X, P_F = all_X[keep], all_F[keep]
    return out
