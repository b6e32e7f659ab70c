"""Offline relation-accuracy protocol on static GA populations.

A GA (population 100, D=5, 100 generations by default) runs on each
problem; at each stage generation 30 parents are drawn as the context and
30 offspring as the candidates. A backend then predicts the relation
matrix for every instance and is scored against ground truth.

Rank-based metrics compare the predicted vote scores with the votes that
the true relation matrix would cast (``reference="vote"``), so a perfect
backend scores exactly 1 even when several candidates fall between the
same two anchors. ``reference="fitness"`` compares with true fitness
instead; ``spearman_fitness`` is always reported alongside.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence

import numpy as np

from .exceptions import BackendError, ConfigError, DomainError
from .metrics import binary_acc, element_acc, rank_acc, spearman_rho
from .operators import OperatorParams
from .problems import get_problem
from .relation_data import check_criterion
from .saea import run_ga
from .surrogate import RelationSurrogate

SUITE_SCHEMA_VERSION = 1
DEFAULT_STAGES = (10, 50, 90)
METRICS = ("element_acc", "binary_acc", "rank_acc", "spearman_rho", "spearman_fitness")


@dataclass
class OfflineInstance:
    id: str
    problem: str
    D: int
    stage: int
    criterion: str
    seed: int
    ctx_X: np.ndarray
    ctx_F: np.ndarray
    query_X: np.ndarray
    query_F: np.ndarray

    def to_json(self) -> str:
        return json.dumps({
            "schema_version": SUITE_SCHEMA_VERSION,
            "id": self.id,
            "problem": self.problem,
            "D": self.D,
            "stage": self.stage,
            "criterion": self.criterion,
            "seed": self.seed,
            "context": {"X": self.ctx_X.tolist(), "F": self.ctx_F.tolist()},
            "query": {"X": self.query_X.tolist(), "F": self.query_F.tolist()},
        })

    @classmethod
    def from_json(cls, line: str) -> "OfflineInstance":
        d = json.loads(line)
        if d.get("schema_version") != SUITE_SCHEMA_VERSION:
            raise ConfigError(f"suite schema_version {d.get('schema_version')!r} is not {SUITE_SCHEMA_VERSION}")
        return cls(
            id=d["id"], problem=d["problem"], D=int(d["D"]), stage=int(d["stage"]),
            criterion=d["criterion"], seed=int(d["seed"]),
            ctx_X=np.array(d["context"]["X"], float), ctx_F=np.array(d["context"]["F"], float),
            query_X=np.array(d["query"]["X"], float), query_F=np.array(d["query"]["F"], float),
        )


def _unique_rows(X) -> np.ndarray:
    """Indices of the first occurrence of each distinct row, in original order."""
    _, first = np.unique(X, axis=0, return_index=True)
    return np.sort(first)


def _draw(pool_idx, n, rng, what):
    if len(pool_idx) < n:
        raise DomainError(f"only {len(pool_idx)} distinct {what} available, need {n}")
    return np.sort(rng.choice(pool_idx, size=n, replace=False))


def build_offline_suite(
    problems: Sequence[str] = ("lzg/ellipsoid", "lzg/rosenbrock", "lzg/ackley", "lzg/griewank"),
    D: int = 5,
    pop_size: int = 100,
    generations: int = 100,
    stages: Sequence[int] = DEFAULT_STAGES,
    n_ctx: int = 30,
    n_query: int = 30,
    criterion: str = "c1",
    seed: int = 0,
    operators: OperatorParams | None = None,
) -> List[OfflineInstance]:
    criterion = check_criterion(criterion)
    suite = []
    for p_index, pid in enumerate(problems):
        problem = get_problem(pid, D)
        if problem.multi_objective and criterion == "c1":
            raise DomainError(f"{pid}: c1 needs a single-objective problem")
        ga_seed = int(np.random.SeedSequence([seed, p_index]).generate_state(1)[0])
        snaps = run_ga(problem, pop_size, generations, stages, operators, seed=ga_seed)
        for stage in stages:
            snap = snaps[stage]
            rng = np.random.default_rng([seed, p_index, stage])
            ctx_pool = _unique_rows(snap.parents_X)
            ci = _draw(ctx_pool, n_ctx, rng, "parents")
            # offspring identical to a parent carry no new information
            parent_rows = {row.tobytes() for row in snap.parents_X}
            q_pool = [i for i in _unique_rows(snap.offspring_X) if snap.offspring_X[i].tobytes() not in parent_rows]
            qi = _draw(np.array(q_pool, dtype=int), n_query, rng, "offspring")
            suite.append(OfflineInstance(
                id=f"{pid.replace('/', '-')}-g{stage:03d}-{criterion}",
                problem=pid, D=D, stage=stage, criterion=criterion, seed=seed,
                ctx_X=snap.parents_X[ci], ctx_F=snap.parents_F[ci],
                query_X=snap.offspring_X[qi], query_F=snap.offspring_F[qi],
            ))
    return suite


def write_suite(suite: Iterable[OfflineInstance], path):
    with open(path, "w", encoding="utf-8") as fh:
        for inst in suite:
            fh.write(inst.to_json() + "\n")


def read_suite(path) -> List[OfflineInstance]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(OfflineInstance.from_json(line))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise OSError(f"{path}:{lineno}: malformed suite line ({exc})") from exc
    return out


@dataclass
class MetricReport:
    rows: List[Dict] = field(default_factory=list)
    failed: List[str] = field(default_factory=list)
    reference: str = "vote"

    def aggregate(self) -> List[Dict]:
        """Mean and population std per (problem, stage, metric), plus 'all' roll-ups."""
        groups: Dict[tuple, List[Dict]] = {}
        for r in self.rows:
            for key in ((r["problem"], str(r["stage"])), (r["problem"], "all"), ("all", "all")):
                groups.setdefault(key, []).append(r)
        out = []
        for (problem, stage), rows in sorted(groups.items(), key=lambda kv: (kv[0][0] == "all", kv[0][0], kv[0][1] == "all", kv[0][1].zfill(6))):
            for metric in METRICS:
                vals = np.array([r[metric] for r in rows if r[metric] is not None], dtype=float)
                out.append({
                    "problem": problem,
                    "stage": stage,
                    "metric": metric,
                    "mean": float(vals.mean()) if len(vals) else math.nan,
                    "std": float(vals.std()) if len(vals) else math.nan,
                    "n": len(vals),
                    "degenerate": sum(bool(r["spearman_degenerate"]) for r in rows),
                    "fallback_rows": sum(r["fallback_rows"] for r in rows),
                })
        return out

    def summary(self, metric: str) -> float:
        vals = [r[metric] for r in self.rows if r[metric] is not None]
        return float(np.mean(vals)) if vals else math.nan

    def write_csv(self, path):
        fields = ["problem", "stage", "metric", "mean", "std", "n", "degenerate", "fallback_rows"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=fields)
            w.writeheader()
            for row in self.aggregate():
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})

    def write_instances_csv(self, path):
        fields = ["id", "problem", "stage", "criterion", *METRICS, "spearman_degenerate", "fallback_rows"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=fields)
            w.writeheader()
            for row in self.rows:
                w.writerow({k: (repr(row[k]) if isinstance(row[k], float) else row[k]) for k in fields})


def evaluate_instance(inst: OfflineInstance, backend, reference: str = "vote") -> Dict:
    if reference not in ("vote", "fitness"):
        raise ConfigError(f"reference must be 'vote' or 'fitness', got {reference!r}")
    sur = RelationSurrogate(backend=backend, criterion=inst.criterion).fit(inst.ctx_X, inst.ctx_F)
    truth = sur.truth_for(inst.query_F)
    L_true = truth.matrix()
    L_pred = sur.predict_relations(inst.query_X, inst.query_F, tag={"instance": inst.id})
    scores = sur.scores_from_relations(L_pred)
    fitness = inst.query_F[:, 0] if inst.query_F.ndim == 2 else inst.query_F
    loss = -sur.scores_from_relations(L_true) if reference == "vote" else fitness
    rho = spearman_rho(scores, loss)
    return {
        "id": inst.id,
        "problem": inst.problem,
        "stage": inst.stage,
        "criterion": inst.criterion,
        "element_acc": element_acc(L_pred, L_true),
        "binary_acc": binary_acc(scores, loss),
        "rank_acc": rank_acc(scores, loss),
        "spearman_rho": rho.rho,
        "spearman_fitness": spearman_rho(scores, fitness).rho,
        "spearman_degenerate": rho.degenerate,
        "fallback_rows": sum(r.fallback for r in sur.records_),
    }


def evaluate_backend(suite: Sequence[OfflineInstance], backend, reference: str = "vote") -> MetricReport:
    """Score ``backend`` on every instance; hard backend failures are skipped and counted."""
    report = MetricReport(reference=reference)
    for inst in sorted(suite, key=lambda i: i.id):
        try:
            report.rows.append(evaluate_instance(inst, backend, reference))
        except BackendError:
            report.failed.append(inst.id)
    return report
