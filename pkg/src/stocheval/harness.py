"""Corpus ingestion, the batch experiment loop, aggregation, and reports.

An experiment sweeps the grid (problem x model x prompting method x run
index). Each cell renders its prompts, obtains candidate code through the
chat client, executes it under the runner contract, scores the dumped model
against the ground truth, and appends one RunRecord to a JSONL log. The log
is append-only and the sweep is crash-resumable: cells already present are
skipped on rerun.

Aggregation keeps exact rational sums internally so that combining two
disjoint aggregates is exactly the aggregate of the union.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import runner as runner_mod
from . import solver as solver_mod
from .detequiv import (
    ChanceSpec,
    TwoStageSpec,
    build_extensive_form,
    flatten_dlp2,
    reformulate_individual_chance,
)
from .errors import (
    ClientError,
    ConfigError,
    CorpusError,
    EmptyCompletion,
    FixtureMiss,
    StochevalError,
)
from .lpformat import parse_lp
from .model import Model
from .pipeline import (
    ChatClient,
    PipelineConfig,
    category_instructions,
    run_method,
    starter_code,
)
from .runner import RunnerConfig, execute_candidate
from .softscore import (
    ERROR_COMPILE,
    ERROR_NONE,
    ERROR_RUNTIME,
    METRIC_KEYS,
    ScoreReport,
    score_models,
)
from .solver import Solution, solve_lp, solve_mip

log = logging.getLogger(__name__)

CATEGORIES = ("SLP-2", "DLP-2", "JointChance", "IndividualChance")

_BUILTIN_CORPUS = Path(__file__).parent / "corpus" / "problems"


# ---------------------------------------------------------------------------
# corpus
# ---------------------------------------------------------------------------

@dataclass
class ProblemInstance:
    id: str
    category: str
    instance_index: int
    description: str
    ground_truth: Model
    reference_solution: Solution
    path: str = ""


def compile_spec_to_model(spec: TwoStageSpec | ChanceSpec) -> Model:
    if isinstance(spec, ChanceSpec):
        return reformulate_individual_chance(spec)
    if spec.deterministic:
        return flatten_dlp2(spec)
    return build_extensive_form(spec)


def _solve_reference(m: Model) -> Solution:
    has_int = any(v.kind != "continuous" for v in m.variables)
    return solve_mip(m) if has_int else solve_lp(m)


def ingest_corpus(path: str | Path) -> list[ProblemInstance]:
    """Load and validate every problem instance under ``path``.

    Layout: ``<category>/<id>/description.md`` plus ``truth.lp`` or
    ``truth.spec`` and ``meta.json`` with category and instance_index.
    Ground truths are solved eagerly; anything not optimal is rejected.
    """
    root = Path(path)
    if not root.is_dir():
        raise CorpusError(f"corpus directory not found: {root}")
    instances = []
    for meta_path in sorted(root.glob("*/*/meta.json")):
        inst_dir = meta_path.parent
        pid = inst_dir.name
        try:
            meta = json.loads(meta_path.read_text())
            category = meta["category"]
            instance_index = int(meta["instance_index"])
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            raise CorpusError(f"{meta_path}: bad meta.json ({exc})") from exc
        if category not in CATEGORIES:
            raise CorpusError(f"{meta_path}: unknown category {category!r}")
        desc_path = inst_dir / "description.md"
        if not desc_path.exists():
            raise CorpusError(f"{inst_dir}: missing description.md")
        lp_path = inst_dir / "truth.lp"
        spec_path = inst_dir / "truth.spec"
        try:
            if lp_path.exists():
                truth = parse_lp(lp_path.read_text())
            elif spec_path.exists():
                from .specfile import parse_spec

                truth = compile_spec_to_model(parse_spec(spec_path.read_text()))
            else:
                raise CorpusError(f"{inst_dir}: needs truth.lp or truth.spec")
        except StochevalError as exc:
            raise CorpusError(f"{inst_dir}: ground truth failed to load: {exc}") from exc
        reference = _solve_reference(truth)
        if reference.status != solver_mod.OPTIMAL:
            raise CorpusError(f"{inst_dir}: ground truth solves to {reference.status}")
        instances.append(
            ProblemInstance(
                id=pid,
                category=category,
                instance_index=instance_index,
                description=desc_path.read_text(),
                ground_truth=truth,
                reference_solution=reference,
                path=str(inst_dir),
            )
        )
    if not instances:
        raise CorpusError(f"no problem instances under {root}")
    return instances


def builtin_corpus_path() -> Path:
    return _BUILTIN_CORPUS


# ---------------------------------------------------------------------------
# experiment configuration
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    models: list[str]
    methods: list[str]
    runs: int = 10
    temperature: float = 0.0
    allow_nonzero_temperature: bool = False
    mode: str = "replay"
    corpus: str = "builtin"
    problems: list[str] | None = None
    output_dir: str = "runs/experiment"
    fixtures_dir: str | None = None
    endpoint: str | None = None
    api_key_env: str = "STOCHEVAL_API_KEY"
    runner: RunnerConfig = field(default_factory=RunnerConfig)
    concurrency: int = 4
    n_reviewers: int = 4
    max_tokens: int = 2048
    rate_limit_rpm: int = 0

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if not self.models or not self.methods:
            raise ConfigError("at least one model and one method are required")
        from .pipeline import METHODS

        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown prompting method {m!r}")
        if self.temperature != 0.0 and not self.allow_nonzero_temperature:
            raise ConfigError(
                "temperature is fixed at 0 for experiments; "
                "set allow_nonzero_temperature to override"
            )
        if self.temperature != 0.0:
            log.warning("running with nonzero temperature %.2f; results will not be reproducible",
                        self.temperature)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        runner_cfg = RunnerConfig(**data.pop("runner", {}))
        known = {f for f in cls.__dataclass_fields__ if f != "runner"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(runner=runner_cfg, **data)

    def corpus_path(self) -> Path:
        return _BUILTIN_CORPUS if self.corpus == "builtin" else Path(self.corpus)

    def build_client(self) -> ChatClient:
        return ChatClient(
            mode=self.mode,
            fixtures_dir=self.fixtures_dir,
            endpoint=self.endpoint,
            api_key=os.environ.get(self.api_key_env),
            rate_limit_rpm=self.rate_limit_rpm,
        )


# ---------------------------------------------------------------------------
# run records
# ---------------------------------------------------------------------------

@dataclass
class RunRecord:
    problem: str
    category: str
    instance: int
    model: str
    method: str
    run: int
    classification: str | None = None
    client_error: str | None = None
    outcome: dict | None = None
    score: ScoreReport | None = None
    transcript_file: str | None = None
    timings: dict[str, float] = field(default_factory=dict)
    transcript_payload: dict | None = field(default=None, repr=False)  # not serialized inline

    @property
    def cell(self) -> str:
        return cell_key(self.problem, self.model, self.method, self.run)

    def to_json(self) -> dict:
        return {
            "cell": self.cell,
            "problem": self.problem,
            "category": self.category,
            "instance": self.instance,
            "model": self.model,
            "method": self.method,
            "run": self.run,
            "classification": self.classification,
            "client_error": self.client_error,
            "outcome": self.outcome,
            "score": None if self.score is None else self.score.to_json(),
            "transcript_file": self.transcript_file,
            "timings": self.timings,
        }


def cell_key(problem: str, model: str, method: str, run: int) -> str:
    return f"{problem}|{model}|{method}|run{run}"


TIMING_KEYS = ("timings",)


def record_lines_equal_modulo_timings(a: str, b: str) -> bool:
    """Compare two serialized records ignoring wall-clock fields."""
    da, db = json.loads(a), json.loads(b)
    for key in TIMING_KEYS:
        da.pop(key, None)
        db.pop(key, None)
    return da == db


# ---------------------------------------------------------------------------
# experiment loop
# ---------------------------------------------------------------------------

def _classification_to_error_kind(classification: str) -> str:
    if classification == runner_mod.OK:
        return ERROR_NONE
    if classification == runner_mod.COMPILE_ERROR:
        return ERROR_COMPILE
    # runtime errors and timeouts both count as runtime in the metrics
    return ERROR_RUNTIME


def problem_bindings(problem: ProblemInstance) -> dict[str, str]:
    """Placeholder bindings a problem contributes to every prompt."""
    return {
        "problem_description": problem.description,
        "code_example": starter_code(),
        "instructions": category_instructions(problem.category),
    }


def run_cell(
    problem: ProblemInstance,
    model_id: str,
    method: str,
    run_idx: int,
    client: ChatClient,
    cfg: ExperimentConfig,
    workdir: Path,
) -> RunRecord:
    record = RunRecord(
        problem=problem.id,
        category=problem.category,
        instance=problem.instance_index,
        model=model_id,
        method=method,
        run=run_idx,
    )
    bindings = problem_bindings(problem)
    pipe_cfg = PipelineConfig(
        model=model_id,
        temperature=cfg.temperature,
        max_tokens=cfg.max_tokens,
        n_reviewers=cfg.n_reviewers,
    )
    started = time.monotonic()
    try:
        code, transcript = run_method(method, bindings, client, pipe_cfg)
    except (ClientError, FixtureMiss, EmptyCompletion) as exc:
        record.client_error = f"{type(exc).__name__}: {exc}"
        record.timings = {"total_s": round(time.monotonic() - started, 3)}
        return record

    outcome = execute_candidate(code, workdir=workdir, runner=cfg.runner)
    record.classification = outcome.classification
    record.outcome = outcome.to_json()
    error_kind = _classification_to_error_kind(outcome.classification)

    gen_model = None
    gen_solution = None
    if outcome.lp_artifact is not None:
        try:
            gen_model = outcome.load_model()
        except StochevalError:
            gen_model = None
    if outcome.ok:
        try:
            gen_solution = outcome.load_solution()
        except (StochevalError, ValueError, KeyError):
            gen_solution = None
            error_kind = ERROR_RUNTIME
            record.classification = runner_mod.RUNTIME_ERROR

    record.score = score_models(
        problem.ground_truth,
        gen_model,
        problem.reference_solution,
        gen_solution,
        error_kind=error_kind,
    )
    record.transcript_payload = transcript.to_json()
    record.timings = {
        "total_s": round(time.monotonic() - started, 3),
        "exec_s": round(outcome.duration, 3),
    }
    return record


def load_records(path: str | Path) -> list[dict]:
    records = []
    p = Path(path)
    if not p.exists():
        return records
    for line in p.read_text().splitlines():
        if line.strip():
            records.append(json.loads(line))
    return records


def run_experiment(
    cfg: ExperimentConfig,
    corpus: list[ProblemInstance],
    client: ChatClient | None = None,
) -> list[dict]:
    """Execute every cell of the configured grid and persist records.

    Returns the full record list (existing plus new) as dicts. Per-cell
    failures never abort the sweep; only configuration and corpus problems
    are fatal.
    """
    client = client or cfg.build_client()
    problems = corpus
    if cfg.problems:
        by_id = {p.id: p for p in corpus}
        missing = [pid for pid in cfg.problems if pid not in by_id]
        if missing:
            raise ConfigError(f"problems not in corpus: {missing}")
        problems = [by_id[pid] for pid in cfg.problems]

    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records_path = out_dir / "records.jsonl"
    transcripts_dir = out_dir / "transcripts"
    workdir = out_dir / "exec"

    existing = {rec["cell"] for rec in load_records(records_path)}
    cells = [
        (p, model, method, run)
        for p in problems
        for model in cfg.models
        for method in cfg.methods
        for run in range(1, cfg.runs + 1)
    ]
    todo = [c for c in cells if cell_key(c[0].id, c[1], c[2], c[3]) not in existing]
    if existing:
        log.info("resuming: %d cells already recorded, %d to go", len(existing), len(todo))

    write_lock = threading.Lock()

    def finish(record: RunRecord) -> None:
        payload = record.transcript_payload
        if payload is not None:
            transcripts_dir.mkdir(parents=True, exist_ok=True)
            tpath = transcripts_dir / f"{record.cell.replace('|', '_')}.json"
            tpath.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")
            record.transcript_file = str(tpath.relative_to(out_dir))
        line = json.dumps(record.to_json(), sort_keys=True)
        with write_lock:
            with records_path.open("a") as fh:
                fh.write(line + "\n")

    def work(cell) -> None:
        p, model, method, run = cell
        record = run_cell(p, model, method, run, client, cfg, workdir)
        finish(record)

    # replay runs stay sequential in sorted order so the record log is
    # byte-stable; live/record sweeps use the worker pool
    if cfg.mode == ChatClient.REPLAY or cfg.concurrency <= 1:
        for cell in todo:
            work(cell)
    else:
        with ThreadPoolExecutor(max_workers=cfg.concurrency) as pool:
            list(pool.map(work, todo))

    return load_records(records_path)


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------

GROUP_FIELDS = ("problem", "category", "instance", "model", "method", "run")


@dataclass
class AggregateRow:
    key: tuple
    count: int
    sums: dict[str, Fraction]

    def means(self) -> dict[str, float]:
        return {k: float(self.sums[k] / self.count) for k in METRIC_KEYS}


@dataclass
class MetricAggregate:
    group_by: tuple[str, ...]
    rows: list[AggregateRow]

    def row_map(self) -> dict[tuple, AggregateRow]:
        return {r.key: r for r in self.rows}


def record_metrics(rec: dict) -> dict[str, float] | None:
    score = rec.get("score")
    if score is None:
        return None
    return {k: float(score[k]) for k in METRIC_KEYS}


def aggregate(records: list[dict], group_by: tuple[str, ...] | list[str]) -> MetricAggregate:
    """Arithmetic means per metric per group; error metrics are the share of
    cells with that error kind. Scoreless records (client failures) are
    excluded from the means; empty groups never appear as rows."""
    group_by = tuple(group_by)
    for f in group_by:
        if f not in GROUP_FIELDS:
            raise ConfigError(f"cannot group by {f!r}; choose from {GROUP_FIELDS}")
    buckets: dict[tuple, AggregateRow] = {}
    for rec in records:
        metrics = record_metrics(rec)
        if metrics is None:
            continue
        key = tuple(rec[f] for f in group_by)
        row = buckets.get(key)
        if row is None:
            row = AggregateRow(key=key, count=0, sums={k: Fraction(0) for k in METRIC_KEYS})
            buckets[key] = row
        row.count += 1
        for k in METRIC_KEYS:
            row.sums[k] += Fraction(metrics[k])
    rows = [buckets[k] for k in sorted(buckets, key=lambda t: tuple(str(x) for x in t))]
    return MetricAggregate(group_by=group_by, rows=rows)


def merge_aggregates(a: MetricAggregate, b: MetricAggregate) -> MetricAggregate:
    """Count-weighted combination; exact because sums are rational."""
    if a.group_by != b.group_by:
        raise ConfigError("cannot merge aggregates with different groupings")
    merged: dict[tuple, AggregateRow] = {}
    for src in (a.rows, b.rows):
        for row in src:
            cur = merged.get(row.key)
            if cur is None:
                merged[row.key] = AggregateRow(
                    key=row.key, count=row.count, sums=dict(row.sums)
                )
            else:
                cur.count += row.count
                for k in METRIC_KEYS:
                    cur.sums[k] += row.sums[k]
    rows = [merged[k] for k in sorted(merged, key=lambda t: tuple(str(x) for x in t))]
    return MetricAggregate(group_by=a.group_by, rows=rows)


def aggregates_equal(a: MetricAggregate, b: MetricAggregate) -> bool:
    if a.group_by != b.group_by or len(a.rows) != len(b.rows):
        return False
    bm = b.row_map()
    for row in a.rows:
        other = bm.get(row.key)
        if other is None or other.count != row.count or other.sums != row.sums:
            return False
    return True


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

FIGURE_GROUPINGS = {
    "by_model_category": ("model", "category"),
    "by_method_category": ("method", "category"),
    "by_instance": ("category", "instance"),
    "by_method_trend": ("method", "run"),
    "by_model_trend": ("model", "run"),
}


def aggregate_to_table(agg: MetricAggregate) -> list[dict]:
    table = []
    for row in agg.rows:
        entry: dict = {f: row.key[i] for i, f in enumerate(agg.group_by)}
        entry["cells"] = row.count
        means = row.means()
        for k in METRIC_KEYS:
            entry[k] = round(means[k], 6)
        table.append(entry)
    return table


def write_csv(agg: MetricAggregate, path: Path) -> None:
    cols = list(agg.group_by) + ["cells"] + list(METRIC_KEYS)
    lines = [",".join(cols)]
    for entry in aggregate_to_table(agg):
        cells = []
        for c in cols:
            v = entry[c]
            cells.append(f"{v:.6f}" if isinstance(v, float) else str(v))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def write_json(agg: MetricAggregate, path: Path) -> None:
    payload = {"group_by": list(agg.group_by), "rows": aggregate_to_table(agg)}
    path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")


def emit_report(records: list[dict], out_dir: str | Path,
                groupings: dict[str, tuple[str, ...]] | None = None) -> list[Path]:
    """Write CSV + JSON per grouping and one plot-data JSON; returns paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    groupings = groupings or FIGURE_GROUPINGS
    written = []
    plot_data = {}
    for name, group_by in groupings.items():
        agg = aggregate(records, group_by)
        csv_path = out / f"{name}.csv"
        json_path = out / f"{name}.json"
        write_csv(agg, csv_path)
        write_json(agg, json_path)
        plot_data[name] = aggregate_to_table(agg)
        written.extend([csv_path, json_path])
    plot_path = out / "plot_data.json"
    plot_path.write_text(json.dumps(plot_data, sort_keys=True, indent=1) + "\n")
    written.append(plot_path)
    return written
