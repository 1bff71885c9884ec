#!/usr/bin/env python3
"""Author the shipped replay fixtures for the demo experiment.

Drives the real prompting pipeline with scripted responses and persists each
exchange in the digest-keyed fixture store, so `stocheval run --mode replay`
with configs/replay.json replays these exact conversations. The four
(problem x method) cells cover the three outcome classes on purpose:

    standard_s x trucks_two_stores   -> ok (renamed, rescaled, correct model)
    standard_s x power_two_scenarios -> compile error (syntax error)
    agentic    x trucks_two_stores   -> runtime error (raises before dumping)
    agentic    x power_two_scenarios -> ok (extra redundant constraint)

Rerun after changing prompts, the starter code, or the two problem
descriptions: digests depend on all of them.
"""

from __future__ import annotations

import shutil
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from stocheval.harness import builtin_corpus_path, ingest_corpus, problem_bindings
from stocheval.pipeline import (
    ChatRequest,
    ChatResponse,
    PipelineConfig,
    request_digest,
    run_method,
)

FIXTURES = REPO / "fixtures" / "chat"
MODEL_ID = "gpt-test-repro"


class ScriptedRecorder:
    """Stands in for the chat service while writing replayable fixtures."""

    def __init__(self, store: Path, script: list[str]):
        self.store = store
        self.script = script

    def complete(self, req: ChatRequest) -> ChatResponse:
        if not self.script:
            raise RuntimeError("script exhausted; call order changed?")
        text = self.script.pop(0)
        resp = ChatResponse(text=text, usage={"scripted": True}, latency=0.0)
        digest = request_digest(req)
        self.store.mkdir(parents=True, exist_ok=True)
        import json

        payload = {
            "request": {"model": req.model, "messages": req.messages},
            "response": {"text": resp.text, "usage": resp.usage, "latency": resp.latency},
        }
        (self.store / f"{digest}.json").write_text(
            json.dumps(payload, sort_keys=True, indent=1) + "\n"
        )
        return resp


TRUCKS_OK_CODE = '''\
import json

LP = """Minimize
 obj: t1 + t2
Subject To
 meet_a: 2 t1 >= 232.897072539
 meet_b: 3 t2 >= 507.66982045
End
"""

with open("model.lp", "w") as fh:
    fh.write(LP)
with open("solution.json", "w") as fh:
    json.dump({
        "status": "optimal",
        "objective": 285.67180975268377,
        "values": {"t1": 116.44853626951472, "t2": 169.22327348316901},
    }, fh)
'''

POWER_BROKEN_CODE = '''\
def build_model(:
    return None
'''

TRUCKS_RUNTIME_CODE = '''\
raise RuntimeError("formulation step never produced a model")
'''

POWER_OK_CODE = '''\
import json

LP = """Minimize
 obj: base + spot_low + spot_high
Subject To
 low: base + spot_low >= 1
 high: base + spot_high >= 3
 cap: base <= 100
End
"""

with open("model.lp", "w") as fh:
    fh.write(LP)
with open("solution.json", "w") as fh:
    json.dump({
        "status": "optimal",
        "objective": 3.0,
        "values": {"base": 1.0, "spot_low": 0.0, "spot_high": 2.0},
    }, fh)
'''


def fenced(code: str, lede: str) -> str:
    return f"{lede}\n\n```python\n{code}```\n"


def standard_script(code: str) -> list[str]:
    return [fenced(code, "Here is the Python program for the problem.")]


def agentic_script(final_code: str) -> list[str]:
    extraction = fenced(
        "sets = {'stores': ['A', 'B']}\nparameters = {'mu': [100, 150], 'sigma': [10, 15]}\n",
        "Extracted components:",
    )
    formulation = fenced(
        "# decision variables and service-level constraints\n",
        "Complete formulation:",
    )
    review = "The formulation looks consistent; double-check the right-hand sides."
    updated = fenced(final_code, "Updated final code:")
    return [extraction, formulation, review, review, review, review, updated]


def main() -> int:
    if FIXTURES.exists():
        shutil.rmtree(FIXTURES)
    corpus = {p.id: p for p in ingest_corpus(builtin_corpus_path())}
    trucks = corpus["trucks_two_stores"]
    power = corpus["power_two_scenarios"]
    cfg = PipelineConfig(model=MODEL_ID)

    cells = [
        ("standard_s", trucks, standard_script(TRUCKS_OK_CODE)),
        ("standard_s", power, standard_script(POWER_BROKEN_CODE)),
        ("agentic", trucks, agentic_script(TRUCKS_RUNTIME_CODE)),
        ("agentic", power, agentic_script(POWER_OK_CODE)),
    ]
    for method, problem, script in cells:
        client = ScriptedRecorder(FIXTURES, list(script))
        code, transcript = run_method(method, problem_bindings(problem), client, cfg)
        print(f"{method:12s} x {problem.id:22s} -> {len(transcript.entries)} exchanges, "
              f"{len(code)} chars of code")
        if client.script:
            raise RuntimeError(f"unused scripted responses for {method} x {problem.id}")
    n = len(list(FIXTURES.glob("*.json")))
    print(f"{n} fixture files in {FIXTURES}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
