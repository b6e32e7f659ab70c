"""Relation-inference backends.

Every backend answers one :class:`~relsaea.prompting.PromptInstance` with
``q`` labels plus an :class:`InferenceRecord`:

* ``oracle`` reads ground truth (true fitness or true categories) and never
  fails; it needs a :class:`RelationTruth`.
* ``random`` draws labels uniformly from the criterion's alphabet.
* ``llm`` renders the prompt, posts it to an OpenAI-compatible
  chat-completions endpoint and parses the reply. Malformed replies are
  retried with a corrective suffix; when retries run out every label
  falls back to +1 (anchor better) and the record is flagged.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import httpx
import numpy as np

from .exceptions import BackendError, ConfigError, DomainError
from .prompting import (
    PromptInstance,
    parse_response,
    prompt_sha256,
    render_prompt,
    render_retry_suffix,
)
from .relation_data import BETTER, check_criterion, label_alphabet, labels_c1, labels_c2

logger = logging.getLogger(__name__)

BACKEND_KINDS = ("oracle", "random", "llm")


@dataclass
class BackendConfig:
    kind: str = "oracle"
    endpoint_url: Optional[str] = None
    model_name: str = ""
    temperature: float = 0.0
    max_retries: int = 3
    timeout: float = 60.0
    concurrency_limit: int = 4
    seed: Optional[int] = None
    api_key_env: str = "OPENAI_API_KEY"

    def validate(self) -> "BackendConfig":
        if self.kind not in BACKEND_KINDS:
            raise ConfigError(f"backend kind must be one of {BACKEND_KINDS}, got {self.kind!r}")
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.concurrency_limit < 1:
            raise ConfigError("concurrency_limit must be >= 1")
        if self.kind == "llm":
            if not self.endpoint_url:
                raise ConfigError("the llm backend needs an endpoint URL (backend.endpoint_url / --endpoint-url)")
            if not self.model_name:
                raise ConfigError("the llm backend needs a model name (backend.model_name / --model)")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class InferenceRecord:
    anchor_index: int
    prompt_hash: Optional[str] = None
    raw_response: Optional[str] = None
    labels: Optional[list] = None
    violation: Optional[str] = None
    latency: float = 0.0
    retries: int = 0
    fallback: bool = False


@dataclass(frozen=True)
class RelationTruth:
    """Ground truth the oracle backend (and the evaluation harness) consults."""

    criterion: str
    anchor_values: Optional[np.ndarray] = None
    candidate_values: Optional[np.ndarray] = None
    anchor_good: Optional[np.ndarray] = None
    candidate_good: Optional[np.ndarray] = None

    @classmethod
    def from_fitness(cls, anchor_f, candidate_f):
        return cls("c1", anchor_values=np.asarray(anchor_f, float).reshape(-1),
                   candidate_values=np.asarray(candidate_f, float).reshape(-1))

    @classmethod
    def from_categories(cls, anchor_good, candidate_good):
        return cls("c2", anchor_good=np.asarray(anchor_good, bool).reshape(-1),
                   candidate_good=np.asarray(candidate_good, bool).reshape(-1))

    def row(self, anchor_index: int) -> np.ndarray:
        if self.criterion == "c1":
            return labels_c1(self.anchor_values[anchor_index], self.candidate_values)
        return labels_c2(self.anchor_good[anchor_index], self.candidate_good)

    def matrix(self) -> np.ndarray:
        n = len(self.anchor_values if self.criterion == "c1" else self.anchor_good)
        return np.vstack([self.row(i) for i in range(n)])


class TranscriptWriter:
    """Append-only JSONL sink shared by concurrent inference calls."""

    def __init__(self, path):
        self.path = path
        self._lock = threading.Lock()
        self.n_entries = 0

    def write(self, entry: dict):
        line = json.dumps(entry, sort_keys=True)
        with self._lock, open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            self.n_entries += 1


class OracleBackend:
    kind = "oracle"
    requires_truth = True

    def __init__(self, config: BackendConfig | None = None):
        self.config = config or BackendConfig(kind="oracle")

    def infer(self, instance: PromptInstance, truth: RelationTruth | None = None):
        if truth is None:
            raise ConfigError("the oracle backend needs ground-truth access")
        if truth.criterion != instance.criterion:
            raise ConfigError("truth and prompt criteria differ")
        labels = truth.row(instance.anchor_index)
        if len(labels) != instance.q:
            raise DomainError("truth does not cover the prompt's candidates")
        return labels, InferenceRecord(instance.anchor_index, labels=labels.tolist())


class RandomBackend:
    """Uniform i.i.d. labels; consecutive calls continue one seeded stream."""

    kind = "random"
    requires_truth = False

    def __init__(self, config: BackendConfig | None = None):
        self.config = config or BackendConfig(kind="random")
        self.rng = np.random.default_rng(self.config.seed)

    def infer(self, instance: PromptInstance, truth=None):
        alphabet = np.array(label_alphabet(instance.criterion))
        labels = alphabet[self.rng.integers(len(alphabet), size=instance.q)]
        return labels, InferenceRecord(instance.anchor_index, labels=labels.tolist())


class LLMBackend:
    kind = "llm"
    requires_truth = False

    def __init__(self, config: BackendConfig, transport=None, transcript: TranscriptWriter | None = None,
                 retry_backoff: float = 1.0):
        self.config = config.validate()
        self.transcript = transcript
        self.retry_backoff = retry_backoff
        self.client = httpx.Client(timeout=config.timeout, transport=transport)
        url = config.endpoint_url.rstrip("/")
        self.url = url if url.endswith("/chat/completions") else url + "/chat/completions"

    def close(self):
        self.client.close()

    def _headers(self):
        key = os.environ.get(self.config.api_key_env)
        return {"Authorization": f"Bearer {key}"} if key else {}

    def complete(self, prompt: str) -> str:
        """POST one user message; retries transport-level failures."""
        payload = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
        }
        last_error = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                time.sleep(self.retry_backoff * 2 ** (attempt - 1))
            try:
                resp = self.client.post(self.url, json=payload, headers=self._headers())
                if resp.status_code == 429 or resp.status_code >= 500:
                    last_error = f"HTTP {resp.status_code}"
                    continue
                resp.raise_for_status()
                content = resp.json()["choices"][0]["message"]["content"]
                return content if isinstance(content, str) else ""
            except httpx.HTTPStatusError as exc:
                raise BackendError(f"endpoint rejected the request: {exc}") from exc
            except (httpx.TransportError, ValueError, KeyError, IndexError, TypeError) as exc:
                last_error = f"{type(exc).__name__}: {exc}"
        raise BackendError(f"no usable response after {self.config.max_retries + 1} attempts ({last_error})")

    def infer(self, instance: PromptInstance, truth=None, tag: dict | None = None):
        prompt = render_prompt(instance)
        message = prompt
        attempts = []
        start = time.perf_counter()
        parsed = None
        for _ in range(self.config.max_retries + 1):
            text = self.complete(message)
            parsed = parse_response(text, instance.q, instance.criterion)
            attempts.append({"response": text, "violation": None if parsed.ok else parsed.violation.reason})
            if parsed.ok:
                break
            message = prompt + render_retry_suffix(instance, parsed.violation)
        fallback = not parsed.ok
        labels = np.full(instance.q, BETTER) if fallback else np.array(parsed.labels)
        record = InferenceRecord(
            anchor_index=instance.anchor_index,
            prompt_hash=prompt_sha256(prompt),
            raw_response=attempts[-1]["response"],
            labels=labels.tolist(),
            violation=None if parsed.ok else parsed.violation.reason,
            latency=time.perf_counter() - start,
            retries=len(attempts) - 1,
            fallback=fallback,
        )
        if fallback:
            logger.warning("anchor %d: format fallback after %d attempts", instance.anchor_index, len(attempts))
        if self.transcript is not None:
            entry = {
                "anchor": instance.anchor_index,
                "criterion": instance.criterion,
                "prompt_sha256": record.prompt_hash,
                "prompt": prompt,
                "attempts": attempts,
                "labels": record.labels,
                "fallback": fallback,
                "retries": record.retries,
                "latency_s": record.latency,
                "template_version": instance.template_version,
            }
            entry.update(tag or {})
            self.transcript.write(entry)
        return labels, record


def make_backend(config: BackendConfig, transcript: TranscriptWriter | None = None, transport=None):
    config.validate()
    if config.kind == "oracle":
        return OracleBackend(config)
    if config.kind == "random":
        return RandomBackend(config)
    return LLMBackend(config, transport=transport, transcript=transcript)


def infer_all(backend, instances: Sequence[PromptInstance], truth: RelationTruth | None = None,
              tag: dict | None = None):
    """Relation matrix with row ``i`` answering anchor ``i``, plus per-row records."""
    if not instances:
        raise DomainError("no prompt instances to infer")
    q = instances[0].q
    if any(inst.q != q for inst in instances):
        raise DomainError("all prompt instances must share the same query count")
    check_criterion(instances[0].criterion)
    if getattr(backend, "requires_truth", False) and truth is None:
        raise ConfigError(f"the {backend.kind} backend needs ground-truth access")

    def one(inst):
        try:
            if isinstance(backend, LLMBackend):
                return backend.infer(inst, truth, tag=tag)
            return backend.infer(inst, truth)
        except BackendError as exc:
            raise BackendError(str(exc), anchor_index=inst.anchor_index) from exc

    limit = backend.config.concurrency_limit if isinstance(backend, LLMBackend) else 1
    if limit > 1 and len(instances) > 1:
        with ThreadPoolExecutor(max_workers=limit) as pool:
            results = list(pool.map(one, instances))
    else:
        results = [one(inst) for inst in instances]
    # rows follow anchor order whatever order the instances came in
    results.sort(key=lambda item: item[1].anchor_index)
    L = np.vstack([labels for labels, _ in results]).astype(int)
    records = [rec for _, rec in results]
    return L, records
