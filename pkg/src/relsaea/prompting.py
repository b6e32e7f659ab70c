"""Anchor-based relation prompts: construction, rendering and response parsing.

For a context of ``n`` evaluated solutions and ``q`` candidates, one prompt
is built per context solution (the anchor). Prompt ``i`` pairs the anchor
with the other ``n - 1`` context solutions as labeled examples and with
every candidate as an unlabeled query, so each prompt holds ``(n-1) + q``
pairs and the full set yields ``n * q`` anchor-candidate predictions.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from string import Template
from typing import Optional, Sequence, Tuple

import numpy as np

from .exceptions import ConfigError, DomainError
from .relation_data import check_criterion, format_vector, label_alphabet, labels_c1, labels_c2

DEFAULT_TEMPLATE = "v1"

NOT_JSON = "not-json"
WRONG_COUNT = "wrong-count"
BAD_LABEL = "bad-label"
BAD_KEY = "bad-key"


@dataclass(frozen=True)
class PromptInstance:
    anchor_index: int
    anchor: str
    examples: Tuple[Tuple[Tuple[str, str], int], ...]
    queries: Tuple[Tuple[str, str], ...]
    criterion: str
    template_version: str = DEFAULT_TEMPLATE

    @property
    def q(self) -> int:
        return len(self.queries)

    @property
    def n_pairs(self) -> int:
        return len(self.examples) + len(self.queries)


@dataclass(frozen=True)
class FormatViolation:
    reason: str
    detail: str = ""


@dataclass(frozen=True)
class ParsedResponse:
    labels: Optional[Tuple[int, ...]] = None
    violation: Optional[FormatViolation] = None

    @property
    def ok(self) -> bool:
        return self.violation is None


def build_anchor_prompts(
    ctx_X,
    query_X,
    criterion: str,
    *,
    fitness=None,
    good=None,
    beta: int = 5,
    template_version: str = DEFAULT_TEMPLATE,
):
    """One :class:`PromptInstance` per context solution.

    ``ctx_X`` and ``query_X`` are normalized decision vectors. Example labels
    come from ``fitness`` under c1 or from the Good mask ``good`` under c2.
    """
    criterion = check_criterion(criterion)
    ctx_X = np.atleast_2d(np.asarray(ctx_X, dtype=float))
    query_X = np.atleast_2d(np.asarray(query_X, dtype=float))
    n, q = len(ctx_X), len(query_X)
    if n < 2:
        raise DomainError("at least 2 context solutions are needed for in-context examples")
    if q < 1:
        raise DomainError("at least 1 query candidate is needed")
    if criterion == "c1":
        if fitness is None:
            raise DomainError("c1 prompts need context fitness")
        fitness = np.asarray(fitness, dtype=float).reshape(-1)
        if len(fitness) != n:
            raise DomainError("fitness length must match the context")
    else:
        if good is None:
            raise DomainError("c2 prompts need context categories")
        good = np.asarray(good, dtype=bool).reshape(-1)
        if len(good) != n:
            raise DomainError("category mask length must match the context")

    ctx_s = [format_vector(x, beta) for x in ctx_X]
    query_s = [format_vector(u, beta) for u in query_X]
    instances = []
    for i in range(n):
        if criterion == "c1":
            labels = labels_c1(fitness[i], fitness)
        else:
            labels = labels_c2(good[i], good)
        anchor = ctx_s[i]
        examples = tuple(((anchor, ctx_s[j]), int(labels[j])) for j in range(n) if j != i)
        queries = tuple((anchor, u) for u in query_s)
        instances.append(PromptInstance(i, anchor, examples, queries, criterion, template_version))
    return instances


# --------------------------------------------------------------------------
# templates


@lru_cache(maxsize=None)
def _load_template(version: str, name: str) -> str:
    try:
        ref = resources.files("relsaea") / "templates" / version / f"{name}.txt"
        return ref.read_text(encoding="utf-8")
    except (FileNotFoundError, NotADirectoryError):
        raise ConfigError(f"unknown prompt template version {version!r}") from None


def template_hash(version: str = DEFAULT_TEMPLATE) -> str:
    h = hashlib.sha256()
    for name in ("c1", "c2", "retry"):
        h.update(name.encode())
        h.update(_load_template(version, name).encode("utf-8"))
    return h.hexdigest()


def format_label(label: int) -> str:
    return f"{label:+d}" if label else "0"


def _example_json(criterion: str, q: int) -> str:
    sample = [1, -1] if criterion == "c1" else [1, 0]
    parts = [f'"{k + 1}": {sample[k]}' for k in range(min(q, 2))]
    if q > 2:
        parts.append("...")
    return ", ".join(parts)


def render_prompt(instance: PromptInstance) -> str:
    text = _load_template(instance.template_version, instance.criterion)
    examples = "\n".join(
        f"{k}. {a} vs {b} -> {format_label(lab)}" for k, ((a, b), lab) in enumerate(instance.examples, 1)
    )
    queries = "\n".join(f"{k}. {a} vs {b}" for k, (a, b) in enumerate(instance.queries, 1))
    return Template(text).substitute(
        examples=examples,
        queries=queries,
        q=instance.q,
        example_json=_example_json(instance.criterion, instance.q),
    )


def render_retry_suffix(instance: PromptInstance, violation: FormatViolation) -> str:
    alphabet = "{1, -1}" if instance.criterion == "c1" else "{1, 0, -1}"
    return Template(_load_template(instance.template_version, "retry")).substitute(
        reason=violation.reason, q=instance.q, alphabet=alphabet
    )


def prompt_sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# --------------------------------------------------------------------------
# responses


def serialize_labels(labels: Sequence[int]) -> str:
    return json.dumps({str(k): int(lab) for k, lab in enumerate(labels, 1)})


def _first_json_object(text: str):
    decoder = json.JSONDecoder()
    start = text.find("{")
    while start != -1:
        try:
            obj, _ = decoder.raw_decode(text, start)
        except json.JSONDecodeError:
            pass
        else:
            if isinstance(obj, dict):
                return obj
        start = text.find("{", start + 1)
    return None


def _coerce_label(value, alphabet):
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        label = int(value) if float(value).is_integer() else None
    elif isinstance(value, str):
        try:
            label = int(value.strip())
        except ValueError:
            return None
    else:
        return None
    return label if label in alphabet else None


def parse_response(text, q: int, criterion: str) -> ParsedResponse:
    """Extract exactly ``q`` labels keyed "1".."q" from the first JSON object in ``text``."""
    alphabet = label_alphabet(criterion)
    obj = _first_json_object(text) if isinstance(text, str) else None
    if obj is None:
        return ParsedResponse(violation=FormatViolation(NOT_JSON))
    if len(obj) != q:
        return ParsedResponse(violation=FormatViolation(WRONG_COUNT, f"expected {q}, got {len(obj)}"))
    keys = [str(k) for k in range(1, q + 1)]
    if set(obj) != set(keys):
        extra = sorted(set(obj) - set(keys))
        return ParsedResponse(violation=FormatViolation(BAD_KEY, f"unexpected keys {extra[:5]}"))
    labels = []
    for key in keys:
        label = _coerce_label(obj[key], alphabet)
        if label is None:
            return ParsedResponse(violation=FormatViolation(BAD_LABEL, f"key {key}: {obj[key]!r}"))
        labels.append(label)
    return ParsedResponse(labels=tuple(labels))
