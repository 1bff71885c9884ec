"""Prompt templates, the chat-completion client, and method orchestration.

Five prompting methods are supported: ``standard_s`` and ``cot_s`` are single
exchanges; ``cot_s2`` and ``cot_s_instructions`` run a three-stage
conversation (extract, formulate, extensive form) where each stage sees the
prior exchanges; ``agentic`` wires extractor -> formulator -> reviewers ->
updater with isolated per-agent prompts and one revision round.

The client runs in three modes. ``live`` posts to a chat-completions
endpoint with retries; ``record`` does the same and persists each response in
a fixture store keyed by a digest of (model id, serialized messages);
``replay`` answers purely from that store and raises FixtureMiss otherwise,
which makes whole experiments bit-reproducible offline.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    ClientError,
    ConfigError,
    EmptyCompletion,
    FixtureMiss,
    UnboundPlaceholder,
)

METHODS = ("standard_s", "cot_s", "cot_s2", "cot_s_instructions", "agentic")

_ASSETS = Path(__file__).parent / "assets"
_PLACEHOLDER_RE = re.compile(r"\{([a-z_][a-z0-9_]*)\}")
_CODE_FENCE_RE = re.compile(r"```(?:[A-Za-z0-9_+-]*)\n(.*?)```", re.DOTALL)


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    method: str
    role: str
    body: str

    def placeholders(self) -> set[str]:
        return set(_PLACEHOLDER_RE.findall(self.body))


def _load(name: str, method: str, role: str) -> PromptTemplate:
    body = (_ASSETS / "prompts" / f"{name}.txt").read_text()
    return PromptTemplate(id=name, method=method, role=role, body=body)


def load_templates() -> dict[str, PromptTemplate]:
    """All prompt assets keyed by template id."""
    return {
        t.id: t
        for t in [
            _load("standard_s", "standard_s", "solver"),
            _load("cot_s", "cot_s", "solver"),
            _load("cot_s2_extract", "cot_s2", "extract"),
            _load("cot_s2_formulate", "cot_s2", "formulate"),
            _load("cot_s2_extensive", "cot_s2", "extensive"),
            _load("cot_s_instructions_extract", "cot_s_instructions", "extract"),
            _load("cot_s_instructions_formulate", "cot_s_instructions", "formulate"),
            _load("cot_s_instructions_extensive", "cot_s_instructions", "extensive"),
            _load("agentic_extractor", "agentic", "extractor"),
            _load("agentic_formulator", "agentic", "formulator"),
            _load("agentic_reviewer", "agentic", "reviewer"),
            _load("agentic_updater", "agentic", "updater"),
        ]
    }


def starter_code() -> str:
    return (_ASSETS / "starter_code.py.txt").read_text()


def category_instructions(category: str) -> str:
    files = {
        "SLP-2": "slp2.txt",
        "DLP-2": "dlp2.txt",
        "IndividualChance": "individual_chance.txt",
        "JointChance": "joint_chance.txt",
    }
    if category not in files:
        raise ConfigError(f"no instruction block for category {category!r}")
    return (_ASSETS / "instructions" / files[category]).read_text()


def render(t: PromptTemplate, bindings: dict[str, str]) -> str:
    """Substitute every placeholder; raise UnboundPlaceholder on any gap."""
    missing = t.placeholders() - set(bindings)
    if missing:
        raise UnboundPlaceholder(f"template {t.id}: unbound {sorted(missing)}")
    return _PLACEHOLDER_RE.sub(lambda m: str(bindings[m.group(1)]), t.body)


def extract_code(text: str) -> str:
    """Last fenced code block; the whole response if nothing is fenced."""
    blocks = _CODE_FENCE_RE.findall(text)
    return blocks[-1].strip() if blocks else text.strip()


# ---------------------------------------------------------------------------
# chat client
# ---------------------------------------------------------------------------

@dataclass
class ChatRequest:
    model: str
    messages: list[dict[str, str]]
    temperature: float = 0.0
    max_tokens: int = 2048


@dataclass
class ChatResponse:
    text: str
    usage: dict = field(default_factory=dict)
    latency: float = 0.0


def request_digest(req: ChatRequest) -> str:
    blob = json.dumps({"model": req.model, "messages": req.messages},
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


class _TokenBucket:
    """Simple requests-per-minute limiter shared by live calls."""

    def __init__(self, rpm: int):
        self.interval = 60.0 / rpm if rpm > 0 else 0.0
        self._lock = threading.Lock()
        self._next_free = 0.0

    def acquire(self) -> None:
        if self.interval <= 0:
            return
        with self._lock:
            now = time.monotonic()
            wait = self._next_free - now
            self._next_free = max(now, self._next_free) + self.interval
        if wait > 0:
            time.sleep(wait)


class ChatClient:
    """Chat-completions client with live / record / replay modes."""

    LIVE = "live"
    RECORD = "record"
    REPLAY = "replay"

    def __init__(
        self,
        mode: str = REPLAY,
        fixtures_dir: str | Path | None = None,
        endpoint: str | None = None,
        api_key: str | None = None,
        max_retries: int = 3,
        backoff_s: float = 1.0,
        rate_limit_rpm: int = 0,
        timeout_s: float = 120.0,
    ):
        if mode not in (self.LIVE, self.RECORD, self.REPLAY):
            raise ConfigError(f"unknown client mode {mode!r}")
        if mode in (self.RECORD, self.REPLAY) and fixtures_dir is None:
            raise ConfigError(f"{mode} mode requires a fixture store directory")
        if mode in (self.LIVE, self.RECORD) and not endpoint:
            raise ConfigError(f"{mode} mode requires an endpoint URL")
        self.mode = mode
        self.fixtures_dir = Path(fixtures_dir) if fixtures_dir else None
        self.endpoint = endpoint
        self.api_key = api_key
        self.max_retries = max_retries
        self.backoff_s = backoff_s
        self.timeout_s = timeout_s
        self._bucket = _TokenBucket(rate_limit_rpm)

    # -- fixture store -----------------------------------------------------

    def _fixture_path(self, digest: str) -> Path:
        assert self.fixtures_dir is not None
        return self.fixtures_dir / f"{digest}.json"

    def _read_fixture(self, digest: str) -> ChatResponse | None:
        path = self._fixture_path(digest)
        if not path.exists():
            return None
        data = json.loads(path.read_text())
        resp = data["response"]
        return ChatResponse(
            text=resp["text"],
            usage=dict(resp.get("usage", {})),
            latency=float(resp.get("latency", 0.0)),
        )

    def _write_fixture(self, digest: str, req: ChatRequest, resp: ChatResponse) -> None:
        assert self.fixtures_dir is not None
        self.fixtures_dir.mkdir(parents=True, exist_ok=True)
        payload = {
            "request": {"model": req.model, "messages": req.messages},
            "response": {"text": resp.text, "usage": resp.usage, "latency": resp.latency},
        }
        self._fixture_path(digest).write_text(
            json.dumps(payload, sort_keys=True, indent=1) + "\n"
        )

    # -- completion --------------------------------------------------------

    def complete(self, req: ChatRequest) -> ChatResponse:
        digest = request_digest(req)
        if self.mode == self.REPLAY:
            resp = self._read_fixture(digest)
            if resp is None:
                head = req.messages[-1]["content"][:120] if req.messages else ""
                raise FixtureMiss(f"no fixture {digest[:16]}... for prompt {head!r}")
            return resp
        resp = self._live_call(req)
        if self.mode == self.RECORD:
            self._write_fixture(digest, req, resp)
        return resp

    def _live_call(self, req: ChatRequest) -> ChatResponse:
        import requests  # deferred: replay mode never needs it

        payload = {
            "model": req.model,
            "messages": req.messages,
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: Exception | None = None
        for attempt in range(self.max_retries):
            self._bucket.acquire()
            started = time.monotonic()
            try:
                http = requests.post(self.endpoint, json=payload, headers=headers,
                                     timeout=self.timeout_s)
            except requests.RequestException as exc:
                last_error = exc
                time.sleep(self.backoff_s * 2**attempt)
                continue
            if http.status_code == 200:
                body = http.json()
                try:
                    text = body["choices"][0]["message"]["content"]
                except (KeyError, IndexError, TypeError) as exc:
                    raise ClientError(f"malformed completion payload: {exc}",
                                      status=http.status_code) from exc
                if not text:
                    raise EmptyCompletion("completion returned no text")
                return ChatResponse(
                    text=text,
                    usage=dict(body.get("usage", {})),
                    latency=time.monotonic() - started,
                )
            if http.status_code in (429, 500, 502, 503, 504) and attempt + 1 < self.max_retries:
                time.sleep(self.backoff_s * 2**attempt)
                continue
            raise ClientError(f"completion failed: HTTP {http.status_code}: {http.text[:200]}",
                              status=http.status_code)
        raise ClientError(f"completion failed after {self.max_retries} attempts: {last_error}")


# ---------------------------------------------------------------------------
# method orchestration
# ---------------------------------------------------------------------------

@dataclass
class TranscriptEntry:
    role: str
    prompt: str
    response: str


@dataclass
class AgentTranscript:
    method: str
    entries: list[TranscriptEntry] = field(default_factory=list)
    n_reviewers: int = 0

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "n_reviewers": self.n_reviewers,
            "entries": [
                {"role": e.role, "prompt": e.prompt, "response": e.response}
                for e in self.entries
            ],
        }


@dataclass
class PipelineConfig:
    model: str
    temperature: float = 0.0
    max_tokens: int = 2048
    n_reviewers: int = 4


_STAGES = {
    "cot_s2": ("cot_s2_extract", "cot_s2_formulate", "cot_s2_extensive"),
    "cot_s_instructions": (
        "cot_s_instructions_extract",
        "cot_s_instructions_formulate",
        "cot_s_instructions_extensive",
    ),
}


def run_method(
    method: str,
    bindings: dict[str, str],
    client: ChatClient,
    config: PipelineConfig,
) -> tuple[str, AgentTranscript]:
    """Drive one prompting method to a final code string.

    ``bindings`` must provide problem_description and code_example (and
    instructions for the instructed variant). The agentic method has its own
    entry point but is routed here too for a uniform call site.
    """
    if method == "agentic":
        return run_agentic(bindings, client, config.n_reviewers, config)
    templates = load_templates()
    transcript = AgentTranscript(method=method)
    if method in ("standard_s", "cot_s"):
        prompt = render(templates[method], bindings)
        response = _ask(client, config, [_user(prompt)])
        transcript.entries.append(TranscriptEntry("solver", prompt, response))
        return extract_code(response), transcript
    if method in _STAGES:
        messages: list[dict[str, str]] = []
        response = ""
        for template_id in _STAGES[method]:
            template = templates[template_id]
            prompt = render(template, bindings)
            messages.append(_user(prompt))
            response = _ask(client, config, messages)
            messages.append({"role": "assistant", "content": response})
            transcript.entries.append(TranscriptEntry(template.role, prompt, response))
        return extract_code(response), transcript
    raise ConfigError(f"unknown prompting method {method!r}")


def run_agentic(
    bindings: dict[str, str],
    client: ChatClient,
    n_reviewers: int,
    config: PipelineConfig,
) -> tuple[str, AgentTranscript]:
    """Extractor -> formulator -> n isolated reviewers -> updater."""
    if n_reviewers < 1:
        raise ConfigError("agentic mode needs at least one reviewer")
    templates = load_templates()
    transcript = AgentTranscript(method="agentic", n_reviewers=n_reviewers)

    def call(template_id: str, extra: dict[str, str], role: str) -> str:
        prompt = render(templates[template_id], {**bindings, **extra})
        response = _ask(client, config, [_user(prompt)])
        transcript.entries.append(TranscriptEntry(role, prompt, response))
        return response

    extraction = call("agentic_extractor", {}, "extractor")
    formulation = call("agentic_formulator", {"extraction_output": extraction}, "formulator")
    current_code = extract_code(formulation)
    feedback = [
        call("agentic_reviewer", {"current_code": current_code}, f"reviewer_{i + 1}")
        for i in range(n_reviewers)
    ]
    updated = call(
        "agentic_updater",
        {"current_code": current_code, "reviewers_feedback": "\n\n".join(feedback)},
        "updater",
    )
    return extract_code(updated), transcript


def _user(content: str) -> dict[str, str]:
    return {"role": "user", "content": content}


def _ask(client: ChatClient, config: PipelineConfig, messages: list[dict[str, str]]) -> str:
    req = ChatRequest(
        model=config.model,
        messages=list(messages),
        temperature=config.temperature,
        max_tokens=config.max_tokens,
    )
    return client.complete(req).text
