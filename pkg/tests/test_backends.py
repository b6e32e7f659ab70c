import json

import httpx
import numpy as np
import pytest

from relsaea.backends import (
    BackendConfig,
    LLMBackend,
    OracleBackend,
    RandomBackend,
    RelationTruth,
    TranscriptWriter,
    infer_all,
    make_backend,
)
from relsaea.exceptions import BackendError, ConfigError
from relsaea.prompting import build_anchor_prompts, serialize_labels


def _c1_instances(n=2, q=2, seed=0):
    rng = np.random.default_rng(seed)
    f = rng.random(n)
    return build_anchor_prompts(rng.random((n, 3)), rng.random((q, 3)), "c1", fitness=f), f


def _chat(content):
    return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": content}}]})


def _llm(handler, tmp_path=None, **cfg):
    conf = BackendConfig(kind="llm", endpoint_url="http://test/v1", model_name="m", **cfg)
    transcript = TranscriptWriter(tmp_path / "t.jsonl") if tmp_path is not None else None
    return LLMBackend(conf, transport=httpx.MockTransport(handler), transcript=transcript, retry_backoff=0.0)


# ---- config --------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ConfigError):
        BackendConfig(kind="llm").validate()
    with pytest.raises(ConfigError):
        BackendConfig(kind="llm", endpoint_url="http://x").validate()
    with pytest.raises(ConfigError):
        BackendConfig(kind="magic").validate()
    with pytest.raises(ConfigError):
        BackendConfig(temperature=-1).validate()
    with pytest.raises(ConfigError):
        BackendConfig(concurrency_limit=0).validate()
    assert BackendConfig().temperature == 0.0


def test_make_backend_kinds():
    assert isinstance(make_backend(BackendConfig()), OracleBackend)
    assert isinstance(make_backend(BackendConfig(kind="random", seed=1)), RandomBackend)


# ---- oracle / random -----------------------------------------------------

def test_oracle_c1_example():
    inst = build_anchor_prompts([[0.0], [1.0]], [[0.2], [0.3]], "c1", fitness=[1.0, 3.0])
    truth = RelationTruth.from_fitness([1.0, 3.0], [0.5, 2.0])
    labels, rec = OracleBackend().infer(inst[0], truth)
    assert labels.tolist() == [-1, 1]
    assert not rec.fallback


def test_oracle_c2_example():
    inst = build_anchor_prompts([[0.0], [1.0]], [[0.2], [0.3]], "c2", good=[True, False])
    truth = RelationTruth.from_categories([True, False], [True, False])
    labels, _ = OracleBackend().infer(inst[0], truth)
    assert labels.tolist() == [0, 1]


def test_oracle_needs_truth():
    inst, _ = _c1_instances()
    with pytest.raises(ConfigError):
        infer_all(OracleBackend(), inst, None)


def test_infer_all_stacks_rows():
    inst, f = _c1_instances(2, 3)
    truth = RelationTruth.from_fitness(f, [0.1, 0.5, 0.9])
    L, recs = infer_all(OracleBackend(), inst, truth)
    rows = np.vstack([OracleBackend().infer(i, truth)[0] for i in inst])
    np.testing.assert_array_equal(L, rows)
    assert [r.anchor_index for r in recs] == [0, 1]


def test_infer_all_order_independent():
    inst, f = _c1_instances(5, 4)
    truth = RelationTruth.from_fitness(f, [0.1, 0.5, 0.9, 0.3])
    L1, _ = infer_all(OracleBackend(), inst, truth)
    L2, _ = infer_all(OracleBackend(), inst[::-1], truth)
    np.testing.assert_array_equal(L1, L2)


def test_oracle_matrix_exhaustive(rng):
    for _ in range(50):
        fa, fc = rng.integers(0, 4, 4).astype(float), rng.integers(0, 4, 3).astype(float)
        M = RelationTruth.from_fitness(fa, fc).matrix()
        assert ((M == 1) == (fa[:, None] <= fc[None, :])).all()


def test_random_deterministic_and_alphabet():
    inst, _ = _c1_instances(4, 30)
    L1, _ = infer_all(RandomBackend(BackendConfig(kind="random", seed=3)), inst)
    L2, _ = infer_all(RandomBackend(BackendConfig(kind="random", seed=3)), inst)
    np.testing.assert_array_equal(L1, L2)
    assert set(np.unique(L1)) <= {1, -1}


# ---- llm -----------------------------------------------------------------

def test_llm_happy_path(tmp_path):
    seen = []

    def handler(request):
        body = json.loads(request.content)
        seen.append(body)
        assert request.url.path == "/v1/chat/completions"
        return _chat("Answer: " + serialize_labels([-1, 1]))

    inst, _ = _c1_instances(3, 2)
    backend = _llm(handler, tmp_path)
    L, recs = infer_all(backend, inst)
    assert L.shape == (3, 2) and (L == [[-1, 1]] * 3).all()
    assert all(b["temperature"] == 0.0 and b["model"] == "m" for b in seen)
    assert all(len(b["messages"]) == 1 and b["messages"][0]["role"] == "user" for b in seen)
    lines = (tmp_path / "t.jsonl").read_text().splitlines()
    assert len(lines) == 3
    entry = json.loads(lines[0])
    assert entry["fallback"] is False and entry["retries"] == 0


def test_llm_fallback_after_retries(tmp_path):
    calls = []

    def handler(request):
        calls.append(json.loads(request.content)["messages"][0]["content"])
        return _chat("I cannot answer that.")

    inst, _ = _c1_instances(2, 3)
    backend = _llm(handler, tmp_path, max_retries=3)
    labels, rec = backend.infer(inst[0])
    assert labels.tolist() == [1, 1, 1]
    assert rec.fallback and rec.retries == 3 and rec.violation == "not-json"
    assert len(calls) == 4
    assert calls[1].startswith(calls[0]) and len(calls[1]) > len(calls[0])
    entry = json.loads((tmp_path / "t.jsonl").read_text().splitlines()[0])
    assert entry["fallback"] is True and len(entry["attempts"]) == 4


def test_llm_recovers_on_retry():
    replies = iter(['{"1": 1}', serialize_labels([1, -1])])
    inst, _ = _c1_instances(2, 2)
    backend = _llm(lambda r: _chat(next(replies)))
    labels, rec = backend.infer(inst[0])
    assert labels.tolist() == [1, -1]
    assert rec.retries == 1 and not rec.fallback


def test_llm_transport_failure():
    def handler(request):
        raise httpx.ConnectError("refused")

    inst, _ = _c1_instances(3, 2)
    with pytest.raises(BackendError) as err:
        infer_all(_llm(handler, max_retries=1), inst)
    assert err.value.anchor_index is not None


def test_llm_retries_server_errors():
    codes = iter([503, 429, 200])

    def handler(request):
        code = next(codes)
        return _chat(serialize_labels([1, 1])) if code == 200 else httpx.Response(code)

    inst, _ = _c1_instances(2, 2)
    labels, _ = _llm(handler).infer(inst[0])
    assert labels.tolist() == [1, 1]


def test_llm_client_error_is_fatal():
    inst, _ = _c1_instances(2, 2)
    with pytest.raises(BackendError):
        _llm(lambda r: httpx.Response(401, json={"error": "no key"})).infer(inst[0])


def test_llm_api_key_header(monkeypatch):
    monkeypatch.setenv("TEST_KEY_VAR", "sekrit")
    seen = {}

    def handler(request):
        seen["auth"] = request.headers.get("authorization")
        return _chat(serialize_labels([1, 1]))

    inst, _ = _c1_instances(2, 2)
    _llm(handler, api_key_env="TEST_KEY_VAR").infer(inst[0])
    assert seen["auth"] == "Bearer sekrit"


def test_llm_thirty_by_thirty_transcript(tmp_path):
    inst, _ = _c1_instances(30, 30)
    backend = _llm(lambda r: _chat(serialize_labels([1] * 30)), tmp_path, concurrency_limit=4)
    L, recs = infer_all(backend, inst)
    assert L.size == 900
    assert len((tmp_path / "t.jsonl").read_text().splitlines()) == 30
    assert [r.anchor_index for r in recs] == list(range(30))
