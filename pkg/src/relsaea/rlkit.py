"""RL data and reward utilities for relation-prediction fine-tuning.

Builds prompt/ground-truth datasets from GA trajectories, scores model
responses with the rule-based reward, and computes group-normalized
advantages. Policy optimization itself is left to an external trainer.

Reward for a response ``y`` against ground truth ``y*`` over ``q`` queries::

    R = -0.2                          if y is not a valid q-label JSON object
    R = lam * n_correct / q           otherwise
    lam = 0.8 if some label's share of y is strictly above 0.9, else 1.0
"""

from __future__ import annotations

import json
import statistics
from fractions import Fraction
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .exceptions import ConfigError, DomainError
from .operators import OperatorParams
from .problems import get_problem
from .prompting import DEFAULT_TEMPLATE, parse_response, render_prompt
from .relation_data import candidate_categories, check_criterion, labels_c1, labels_c2
from .saea import run_ga
from .surrogate import RelationSurrogate

DATASET_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RewardParams:
    format_penalty: float = -0.2
    diversity_discount: float = 0.8
    dominance_threshold: float = 0.9
    group_size: int = 8
    delta: float = 1e-8

    def __post_init__(self):
        if self.delta <= 0:
            raise DomainError("delta must be positive")
        if self.group_size < 2:
            raise DomainError("group_size must be >= 2")


def reward(response_text, truth: Sequence[int], q: Optional[int] = None, criterion: str = "c1",
           params: RewardParams = RewardParams()) -> float:
    truth = [int(t) for t in truth]
    q = len(truth) if q is None else q
    if len(truth) != q:
        raise DomainError(f"ground truth has {len(truth)} labels, expected {q}")
    parsed = parse_response(response_text, q, criterion)
    if not parsed.ok:
        return params.format_penalty
    labels = parsed.labels
    n_correct = sum(p == t for p, t in zip(labels, truth))
    top_share = Fraction(max(labels.count(lab) for lab in set(labels)), q)
    lam = params.diversity_discount if top_share > Fraction(str(params.dominance_threshold)) else 1.0
    # exact rational, rounded once: 0.8 * 12/12 is exactly 0.8
    return float(Fraction(str(lam)) * Fraction(n_correct, q))


def group_advantage(rewards, delta: float = 1e-8) -> np.ndarray:
    """``(r - mean(r)) / (std(r) + delta)`` with the population standard deviation."""
    r = np.asarray(rewards, dtype=float)
    if r.ndim != 1 or len(r) < 2:
        raise DomainError("group_advantage needs a 1-D group of at least 2 rewards")
    return (r - r.mean()) / (r.std() + delta)


# --------------------------------------------------------------------------
# dataset


@dataclass
class RLInstance:
    id: str
    criterion: str
    prompt: str
    q: int
    truth: List[int]
    provenance: Dict = field(default_factory=dict)
    template_version: str = DEFAULT_TEMPLATE

    def to_json(self) -> str:
        d = {"schema_version": DATASET_SCHEMA_VERSION, **asdict(self)}
        return json.dumps(d)

    @classmethod
    def from_dict(cls, d: dict) -> "RLInstance":
        if d.get("schema_version") != DATASET_SCHEMA_VERSION:
            raise ConfigError(
                f"dataset schema_version {d.get('schema_version')!r} is not supported (expected {DATASET_SCHEMA_VERSION})"
            )
        return cls(
            id=d["id"], criterion=d["criterion"], prompt=d["prompt"], q=int(d["q"]),
            truth=[int(t) for t in d["truth"]], provenance=d.get("provenance", {}),
            template_version=d.get("template_version", DEFAULT_TEMPLATE),
        )


def gen_rl_dataset(
    problems: Sequence[str],
    D: int = 5,
    pop_size: int = 100,
    generations: int = 100,
    snapshot_every: int = 10,
    subsample: int = 30,
    criteria: Sequence[str] = ("c1",),
    seed: int = 0,
    beta: int = 5,
    template_version: str = DEFAULT_TEMPLATE,
    operators: OperatorParams | None = None,
) -> List[RLInstance]:
    """One instance per anchor, per snapshot, per problem and criterion.

    Each snapshot's parents and offspring are subsampled uniformly without
    replacement to ``subsample`` each (context and queries), scaled jointly
    and turned into anchor prompts.
    """
    criteria = [check_criterion(c) for c in criteria]
    snap_gens = list(range(snapshot_every, generations + 1, snapshot_every))
    out: List[RLInstance] = []
    for p_index, pid in enumerate(problems):
        problem = get_problem(pid, D)
        if problem.multi_objective:
            raise DomainError(f"{pid}: trajectory datasets use single-objective problems")
        ga_seed = int(np.random.SeedSequence([seed, p_index]).generate_state(1)[0])
        snaps = run_ga(problem, pop_size, generations, snap_gens, operators, seed=ga_seed)
        for g in snap_gens:
            snap = snaps[g]
            rng = np.random.default_rng([seed, p_index, g])
            ci = np.sort(rng.choice(len(snap.parents_X), size=subsample, replace=False))
            qi = np.sort(rng.choice(len(snap.offspring_X), size=subsample, replace=False))
            ctx_X, ctx_F = snap.parents_X[ci], snap.parents_F[ci]
            q_X, q_F = snap.offspring_X[qi], snap.offspring_F[qi]
            for criterion in criteria:
                sur = RelationSurrogate(criterion=criterion, beta=beta, template_version=template_version)
                sur.fit(ctx_X, ctx_F)
                instances = sur.build_prompts(q_X)
                if criterion == "c2":
                    cand_good = candidate_categories(ctx_F, sur.good_, q_F)
                for inst in instances:
                    i = inst.anchor_index
                    if criterion == "c1":
                        truth = labels_c1(ctx_F[i, 0], q_F[:, 0])
                    else:
                        truth = labels_c2(sur.good_[i], cand_good)
                    out.append(RLInstance(
                        id=f"{pid.replace('/', '-')}-g{g:03d}-a{i:02d}-{criterion}",
                        criterion=criterion,
                        prompt=render_prompt(inst),
                        q=inst.q,
                        truth=[int(t) for t in truth],
                        provenance={"problem": pid, "generation": g, "anchor": i, "seed": seed},
                        template_version=template_version,
                    ))
    return out


def write_dataset(instances: Sequence[RLInstance], path):
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(inst.to_json() + "\n")


def _read_jsonl(path) -> List[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise OSError(f"{path}: line {lineno} is not valid JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise OSError(f"{path}: line {lineno} is not a JSON object")
            rows.append(obj)
    return rows


def read_dataset(path) -> List[RLInstance]:
    return [RLInstance.from_dict(d) for d in _read_jsonl(path)]


@dataclass
class ScoreSummary:
    rewards: Dict[str, float]
    unmatched_dataset_ids: List[str]
    unmatched_response_ids: List[str]

    @property
    def n(self) -> int:
        return len(self.rewards)

    @property
    def mean(self) -> float:
        return statistics.fmean(self.rewards.values()) if self.rewards else float("nan")

    @property
    def std(self) -> float:
        return statistics.pstdev(self.rewards.values()) if self.rewards else float("nan")

    def violation_rate(self, params: RewardParams = RewardParams()) -> float:
        if not self.rewards:
            return float("nan")
        return sum(r == params.format_penalty for r in self.rewards.values()) / len(self.rewards)

    def to_dict(self) -> dict:
        return {
            "n_scored": self.n,
            "mean_reward": self.mean,
            "std_reward": self.std,
            "format_violation_rate": self.violation_rate(),
            "unmatched_dataset_ids": len(self.unmatched_dataset_ids),
            "unmatched_response_ids": len(self.unmatched_response_ids),
        }


def score_response_file(dataset_path, responses_path, params: RewardParams = RewardParams()) -> ScoreSummary:
    """Reward every response (JSONL ``{id, text}``) against the dataset's ground truth."""
    dataset = {inst.id: inst for inst in read_dataset(dataset_path)}
    responses = _read_jsonl(responses_path)
    rewards: Dict[str, float] = {}
    extra = []
    for lineno, row in enumerate(responses, 1):
        if "schema_version" in row and row["schema_version"] != DATASET_SCHEMA_VERSION:
            raise ConfigError(f"{responses_path}: response schema_version {row['schema_version']!r} not supported")
        if "id" not in row or "text" not in row:
            raise OSError(f"{responses_path}: response {lineno} lacks 'id' or 'text'")
        inst = dataset.get(row["id"])
        if inst is None:
            extra.append(row["id"])
            continue
        rewards[inst.id] = reward(row["text"], inst.truth, inst.q, inst.criterion, params)
    missing = [i for i in dataset if i not in rewards]
    return ScoreSummary(rewards, missing, extra)
