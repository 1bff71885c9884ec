"""Execute candidate solver scripts and classify their failures.

A candidate is judged by a two-phase protocol: a syntax-check invocation of
the configured runner command (failure = compile error), then a full run in a
fresh working directory with a wall-clock timeout. A successful run must
leave behind ``model.lp`` (parseable) and ``solution.json`` with keys
``status``, ``objective`` and ``values``; anything else is a runtime error.
Timeouts get their own classification but count as runtime errors in the
batch metrics. Candidate failures are data, never exceptions.

Resource limits beyond the timeout are the runner command's business; the
harness promises isolation of working directories, not a security boundary.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, ParseError
from .lpformat import parse_lp
from .model import Model
from .solver import Solution

OK = "ok"
COMPILE_ERROR = "compile_error"
RUNTIME_ERROR = "runtime_error"
TIMEOUT = "timeout"

MODEL_ARTIFACT = "model.lp"
SOLUTION_ARTIFACT = "solution.json"

_CAPTURE_LIMIT = 4000  # characters of stdout/stderr kept per run


@dataclass
class RunnerConfig:
    """Command template with a mode flag for syntax-check vs run.

    ``command`` must contain ``{file}`` and may contain ``{mode}`` and
    ``{python}``; ``{mode}`` expands to ``check_mode`` for the syntax pass and
    ``run_mode`` for the execution pass, ``{python}`` to the current
    interpreter.
    """

    command: str = "{python} {mode} {file}"
    check_mode: str = "-m py_compile"
    run_mode: str = ""
    timeout_s: float = 60.0

    def argv(self, file: str, check: bool) -> list[str]:
        if "{file}" not in self.command:
            raise ConfigError("runner command must contain {file}")
        rendered = self.command.replace("{python}", sys.executable)
        rendered = rendered.replace("{mode}", self.check_mode if check else self.run_mode)
        rendered = rendered.replace("{file}", file)
        return [tok for tok in shlex.split(rendered) if tok]


@dataclass
class RunOutcome:
    classification: str
    lp_artifact: str | None = None
    solution_artifact: str | None = None
    stdout: str = ""
    stderr: str = ""
    duration: float = 0.0
    workdir: str = ""

    @property
    def ok(self) -> bool:
        return self.classification == OK

    def load_model(self) -> Model | None:
        if self.lp_artifact is None:
            return None
        return parse_lp(Path(self.lp_artifact).read_text())

    def load_solution(self) -> Solution | None:
        if self.solution_artifact is None:
            return None
        data = json.loads(Path(self.solution_artifact).read_text())
        return Solution(
            status=str(data["status"]),
            objective=None if data.get("objective") is None else float(data["objective"]),
            values={str(k): float(v) for k, v in data.get("values", {}).items()},
        )

    def to_json(self) -> dict:
        # per-run temp paths are redacted so serialized outcomes stay
        # byte-identical across replay invocations
        def scrub(text: str) -> str:
            return text.replace(self.workdir, "<workdir>") if self.workdir else text

        return {
            "classification": self.classification,
            "has_model": self.lp_artifact is not None,
            "has_solution": self.solution_artifact is not None,
            "stdout": scrub(self.stdout),
            "stderr": scrub(self.stderr),
        }


def _clip(text: str) -> str:
    if len(text) > _CAPTURE_LIMIT:
        return text[:_CAPTURE_LIMIT] + "...[truncated]"
    return text


def execute_candidate(
    code: str,
    workdir: str | Path | None = None,
    runner: RunnerConfig | None = None,
    timeout_s: float | None = None,
) -> RunOutcome:
    """Run candidate code through the two-phase protocol.

    ``workdir`` is the parent under which a fresh execution directory is
    created (a temp dir when omitted), keeping concurrent executions
    isolated. ConfigError is raised for bad configuration only; candidate
    failures always come back as classifications.
    """
    if not code:
        return RunOutcome(RUNTIME_ERROR, stderr="empty candidate code")
    runner = runner or RunnerConfig()
    timeout = timeout_s if timeout_s is not None else runner.timeout_s
    if workdir is None:
        exec_dir = Path(tempfile.mkdtemp(prefix="stocheval_run_"))
    else:
        Path(workdir).mkdir(parents=True, exist_ok=True)
        exec_dir = Path(tempfile.mkdtemp(prefix="cell_", dir=str(workdir)))
    script = exec_dir / "candidate.py"
    script.write_text(code)
    wd = str(exec_dir)

    started = time.monotonic()

    check = _invoke(runner.argv(str(script), check=True), exec_dir, timeout)
    if check is None:
        return RunOutcome(TIMEOUT, stdout="", stderr="syntax check timed out",
                          duration=time.monotonic() - started, workdir=wd)
    if check.returncode != 0:
        return RunOutcome(
            COMPILE_ERROR,
            stdout=_clip(check.stdout),
            stderr=_clip(check.stderr),
            duration=time.monotonic() - started,
            workdir=wd,
        )

    run = _invoke(runner.argv(str(script), check=False), exec_dir, timeout)
    duration = time.monotonic() - started
    if run is None:
        return RunOutcome(TIMEOUT, stderr=f"run exceeded {timeout}s", duration=duration,
                          workdir=wd)

    lp_path = exec_dir / MODEL_ARTIFACT
    sol_path = exec_dir / SOLUTION_ARTIFACT
    outcome = RunOutcome(
        RUNTIME_ERROR,
        stdout=_clip(run.stdout),
        stderr=_clip(run.stderr),
        duration=duration,
        workdir=wd,
    )
    # keep whatever parsed even on failure: the scorer can count extras
    if lp_path.exists():
        try:
            parse_lp(lp_path.read_text())
            outcome.lp_artifact = str(lp_path)
        except ParseError:
            pass
    if run.returncode != 0:
        return outcome
    if outcome.lp_artifact is None:
        outcome.stderr = _clip(outcome.stderr + "\nmissing or unparseable model.lp")
        return outcome
    if not sol_path.exists():
        outcome.stderr = _clip(outcome.stderr + "\nmissing solution.json")
        return outcome
    try:
        data = json.loads(sol_path.read_text())
        if not isinstance(data, dict) or "status" not in data:
            raise ValueError("solution.json must be an object with a status key")
        if "values" in data and not isinstance(data["values"], dict):
            raise ValueError("values must be an object")
    except (ValueError, json.JSONDecodeError) as exc:
        outcome.stderr = _clip(outcome.stderr + f"\nbad solution.json: {exc}")
        return outcome
    outcome.solution_artifact = str(sol_path)
    outcome.classification = OK
    return outcome


def _invoke(argv: list[str], cwd: Path, timeout: float) -> subprocess.CompletedProcess | None:
    try:
        return subprocess.run(
            argv,
            cwd=str(cwd),
            capture_output=True,
            text=True,
            timeout=timeout,
        )
    except subprocess.TimeoutExpired:
        return None
    except FileNotFoundError as exc:
        raise ConfigError(f"runner command not found: {argv[0]}") from exc
