from __future__ import annotations

import json

import pytest

from stocheval.errors import ConfigError, FixtureMiss, UnboundPlaceholder
from stocheval.pipeline import (
    ChatClient,
    ChatRequest,
    ChatResponse,
    METHODS,
    PipelineConfig,
    extract_code,
    load_templates,
    render,
    request_digest,
    run_agentic,
    run_method,
    starter_code,
)

BINDINGS = {
    "problem_description": "Ship widgets from two depots.",
    "code_example": "# starter\n",
    "instructions": "Model class: example.",
}


class ScriptedClient:
    """Returns canned texts in call order; records requests."""

    def __init__(self, texts):
        self.texts = list(texts)
        self.requests: list[ChatRequest] = []

    def complete(self, req: ChatRequest) -> ChatResponse:
        self.requests.append(req)
        return ChatResponse(text=self.texts.pop(0))


def test_method_registry_matches_table():
    assert set(METHODS) == {"standard_s", "cot_s", "cot_s2", "cot_s_instructions", "agentic"}
    templates = load_templates()
    assert {t.method for t in templates.values()} == set(METHODS)


def test_render_substitutes_description_and_starter():
    templates = load_templates()
    text = render(templates["standard_s"], BINDINGS)
    assert BINDINGS["problem_description"] in text
    assert BINDINGS["code_example"] in text
    assert "{problem_description}" not in text and "{code_example}" not in text


def test_render_unbound_placeholder():
    templates = load_templates()
    with pytest.raises(UnboundPlaceholder):
        render(templates["standard_s"], {"problem_description": "p"})


def test_instructed_extract_carries_anchor_sentences():
    templates = load_templates()
    text = render(templates["cot_s_instructions_extract"], BINDINGS)
    assert "Your extraction will serve as the foundation for subsequent code implementation." in text
    assert "Please also learn the following instructions to guide you further:" in text
    assert BINDINGS["instructions"] in text


def test_extract_code_takes_last_fence():
    text = "first\n```python\na = 1\n```\nthen\n```\nb = 2\n```\n"
    assert extract_code(text) == "b = 2"
    assert extract_code("no fences at all") == "no fences at all"


def test_single_exchange_methods():
    for method in ("standard_s", "cot_s"):
        client = ScriptedClient(["```python\nx = 1\n```"])
        code, transcript = run_method(method, BINDINGS, client, PipelineConfig(model="m"))
        assert code == "x = 1"
        assert len(transcript.entries) == 1
        assert len(client.requests) == 1
        assert client.requests[0].messages[0]["role"] == "user"


@pytest.mark.parametrize("method", ["cot_s2", "cot_s_instructions"])
def test_staged_methods_three_entry_transcript(method):
    client = ScriptedClient([
        "extraction notes",
        "```python\ndraft = True\n```",
        "final\n```python\nfinal = True\n```",
    ])
    code, transcript = run_method(method, BINDINGS, client, PipelineConfig(model="m"))
    assert code == "final = True"
    assert [e.role for e in transcript.entries] == ["extract", "formulate", "extensive"]
    # conversation grows: 1, 3, then 5 messages
    assert [len(r.messages) for r in client.requests] == [1, 3, 5]
    assert client.requests[2].messages[1]["content"] == "extraction notes"


def test_agentic_topology():
    responses = [
        "extraction",
        "```python\ndraft = 1\n```",
        "feedback one",
        "feedback two",
        "feedback three",
        "feedback four",
        "```python\nfinal = 2\n```",
    ]
    client = ScriptedClient(responses)
    code, transcript = run_agentic(BINDINGS, client, 4, PipelineConfig(model="m"))
    assert code == "final = 2"
    roles = [e.role for e in transcript.entries]
    assert roles == ["extractor", "formulator", "reviewer_1", "reviewer_2",
                     "reviewer_3", "reviewer_4", "updater"]
    assert transcript.n_reviewers == 4
    updater_prompt = transcript.entries[-1].prompt
    for fb in ("feedback one", "feedback four"):
        assert fb in updater_prompt


def test_agentic_runs_updater_even_on_clean_reviews():
    responses = ["e", "```python\nc=1\n```"] + ["no issues"] * 2 + ["```python\nc=2\n```"]
    client = ScriptedClient(responses)
    code, transcript = run_agentic(BINDINGS, client, 2, PipelineConfig(model="m"))
    assert code == "c=2"
    assert len(transcript.entries) == 1 + 1 + 2 + 1


def test_agentic_requires_reviewers():
    with pytest.raises(ConfigError):
        run_agentic(BINDINGS, ScriptedClient([]), 0, PipelineConfig(model="m"))


def test_unknown_method():
    with pytest.raises(ConfigError):
        run_method("cot_s3", BINDINGS, ScriptedClient([]), PipelineConfig(model="m"))


# ---------------------------------------------------------------------------
# client modes
# ---------------------------------------------------------------------------

def test_digest_depends_on_model_and_messages():
    a = ChatRequest("m1", [{"role": "user", "content": "hi"}])
    b = ChatRequest("m2", [{"role": "user", "content": "hi"}])
    c = ChatRequest("m1", [{"role": "user", "content": "yo"}])
    assert request_digest(a) != request_digest(b)
    assert request_digest(a) != request_digest(c)
    assert request_digest(a) == request_digest(ChatRequest("m1", [{"role": "user", "content": "hi"}], max_tokens=99))


def test_replay_roundtrip(tmp_path):
    req = ChatRequest("m", [{"role": "user", "content": "ping"}])
    digest = request_digest(req)
    fixture = {
        "request": {"model": req.model, "messages": req.messages},
        "response": {"text": "pong", "usage": {"total_tokens": 2}, "latency": 0.5},
    }
    (tmp_path / f"{digest}.json").write_text(json.dumps(fixture))
    client = ChatClient(mode="replay", fixtures_dir=tmp_path)
    first = client.complete(req)
    second = client.complete(req)
    assert first.text == second.text == "pong"
    assert first.usage == {"total_tokens": 2}


def test_replay_miss(tmp_path):
    client = ChatClient(mode="replay", fixtures_dir=tmp_path)
    with pytest.raises(FixtureMiss):
        client.complete(ChatRequest("m", [{"role": "user", "content": "?"}]))


def test_client_mode_validation(tmp_path):
    with pytest.raises(ConfigError):
        ChatClient(mode="replay")  # no store
    with pytest.raises(ConfigError):
        ChatClient(mode="live")  # no endpoint
    with pytest.raises(ConfigError):
        ChatClient(mode="dream", fixtures_dir=tmp_path)


def test_record_mode_persists(tmp_path, monkeypatch):
    client = ChatClient(mode="record", fixtures_dir=tmp_path, endpoint="http://example/api")
    req = ChatRequest("m", [{"role": "user", "content": "record me"}])
    monkeypatch.setattr(client, "_live_call", lambda r: ChatResponse(text="stored", latency=0.1))
    resp = client.complete(req)
    assert resp.text == "stored"
    replay = ChatClient(mode="replay", fixtures_dir=tmp_path)
    assert replay.complete(req).text == "stored"


class _FakeHttp:
    def __init__(self, status_code, body=None, text=""):
        self.status_code = status_code
        self._body = body or {}
        self.text = text

    def json(self):
        return self._body


def _fake_requests_module(responses):
    import types

    calls = {"n": 0}

    def post(url, json=None, headers=None, timeout=None):
        resp = responses[min(calls["n"], len(responses) - 1)]
        calls["n"] += 1
        return resp

    mod = types.SimpleNamespace(post=post, RequestException=Exception, calls=calls)
    return mod


def test_live_retries_then_succeeds(monkeypatch, tmp_path):
    import sys as _sys

    ok_body = {"choices": [{"message": {"content": "answer"}}], "usage": {"total_tokens": 3}}
    fake = _fake_requests_module([_FakeHttp(503), _FakeHttp(200, ok_body)])
    monkeypatch.setitem(_sys.modules, "requests", fake)
    client = ChatClient(mode="live", endpoint="http://example/api", backoff_s=0.0)
    resp = client.complete(ChatRequest("m", [{"role": "user", "content": "q"}]))
    assert resp.text == "answer"
    assert fake.calls["n"] == 2


def test_live_auth_failure_raises_client_error(monkeypatch):
    import sys as _sys

    from stocheval.errors import ClientError

    fake = _fake_requests_module([_FakeHttp(401, text="bad key")])
    monkeypatch.setitem(_sys.modules, "requests", fake)
    client = ChatClient(mode="live", endpoint="http://example/api", backoff_s=0.0)
    with pytest.raises(ClientError) as exc:
        client.complete(ChatRequest("m", [{"role": "user", "content": "q"}]))
    assert exc.value.status == 401


def test_live_empty_completion(monkeypatch):
    import sys as _sys

    from stocheval.errors import EmptyCompletion

    body = {"choices": [{"message": {"content": ""}}]}
    fake = _fake_requests_module([_FakeHttp(200, body)])
    monkeypatch.setitem(_sys.modules, "requests", fake)
    client = ChatClient(mode="live", endpoint="http://example/api")
    with pytest.raises(EmptyCompletion):
        client.complete(ChatRequest("m", [{"role": "user", "content": "q"}]))


def test_token_bucket_spaces_requests():
    import time

    from stocheval.pipeline import _TokenBucket

    bucket = _TokenBucket(rpm=1200)  # 50 ms interval
    started = time.monotonic()
    for _ in range(4):
        bucket.acquire()
    elapsed = time.monotonic() - started
    assert elapsed >= 0.10  # at least 3 intervals waited
    assert _TokenBucket(rpm=0).interval == 0.0  # disabled bucket never sleeps


def test_starter_code_mentions_artifacts():
    text = starter_code()
    assert "model.lp" in text and "solution.json" in text


def test_prompt_assets_have_verbatim_sentences():
    templates = load_templates()
    anchors = {
        "standard_s": "Give your Python code directly.",
        "cot_s": "Let's analyse the problem step by step, and then give your Python code directly.",
        "cot_s2_extensive": "Enumerate all possible scenarios, associating each with its corresponding probability.",
        "agentic_reviewer": "Provide concise and precise feedback.",
        "agentic_updater": "Return the updated final code.",
    }
    for tid, sentence in anchors.items():
        assert sentence in templates[tid].body, tid
