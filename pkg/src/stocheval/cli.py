"""Command-line entry points.

Subcommands: ``run`` (full experiment sweep), ``score`` (compare two LP
files), ``reformulate`` (compact spec -> deterministic-equivalent LP),
``solve`` (LP/MILP file -> solution JSON), ``report`` (aggregate a records
log), and ``replay-verify`` (determinism check: replay twice, byte-compare
reports).
"""

from __future__ import annotations

import argparse
import json
import logging
import shutil
import sys
import tempfile
from pathlib import Path

from .errors import StochevalError
from .harness import (
    ExperimentConfig,
    aggregate,
    aggregate_to_table,
    compile_spec_to_model,
    emit_report,
    ingest_corpus,
    load_records,
    run_experiment,
    write_csv,
    write_json,
)
from .lpformat import emit_lp, parse_lp
from .softscore import score_models
from .solver import solve_lp, solve_mip
from .specfile import parse_spec


def _cmd_run(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    if args.mode:
        cfg.mode = args.mode
    if args.out:
        cfg.output_dir = args.out
    corpus = ingest_corpus(cfg.corpus_path())
    records = run_experiment(cfg, corpus)
    reports = emit_report(records, Path(cfg.output_dir) / "reports")
    print(f"{len(records)} records in {cfg.output_dir}")
    for p in reports:
        print(f"  wrote {p}")
    return 0


def _cmd_score(args) -> int:
    truth = parse_lp(Path(args.truth).read_text())
    gen = parse_lp(Path(args.generated).read_text())
    truth_sol = _solve(truth)
    gen_sol = _solve(gen)
    report = score_models(truth, gen, truth_sol, gen_sol)
    print(json.dumps(report.to_json(), sort_keys=True, indent=1))
    return 0


def _solve(model):
    has_int = any(v.kind != "continuous" for v in model.variables)
    return solve_mip(model) if has_int else solve_lp(model)


def _cmd_reformulate(args) -> int:
    spec = parse_spec(Path(args.spec).read_text())
    model = compile_spec_to_model(spec)
    text = emit_lp(model)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def _cmd_solve(args) -> int:
    model = parse_lp(Path(args.lp).read_text())
    sol = _solve(model)
    print(json.dumps(sol.to_json(), sort_keys=True, indent=1))
    return 0


def _cmd_report(args) -> int:
    records = load_records(args.records)
    group_by = tuple(args.group_by.split(","))
    agg = aggregate(records, group_by)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        name = "_".join(group_by)
        write_csv(agg, out / f"by_{name}.csv")
        write_json(agg, out / f"by_{name}.json")
        print(f"wrote {out}/by_{name}.csv and .json")
    else:
        print(json.dumps(aggregate_to_table(agg), sort_keys=True, indent=1))
    return 0


def _cmd_replay_verify(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    cfg.mode = "replay"
    corpus = ingest_corpus(cfg.corpus_path())
    tmp = Path(tempfile.mkdtemp(prefix="stocheval_verify_"))
    try:
        outputs = []
        for tag in ("first", "second"):
            out_dir = tmp / tag
            cfg.output_dir = str(out_dir)
            records = run_experiment(cfg, corpus)
            emit_report(records, out_dir / "reports")
            outputs.append(out_dir / "reports")
        mismatches = []
        for path in sorted(outputs[0].iterdir()):
            other = outputs[1] / path.name
            if not other.exists() or path.read_bytes() != other.read_bytes():
                mismatches.append(path.name)
        if mismatches:
            print(f"REPLAY NOT DETERMINISTIC: {mismatches}")
            return 1
        print(f"replay deterministic: {len(list(outputs[0].iterdir()))} report files identical")
        return 0
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stocheval",
        description="Batch evaluation harness for LLM-formulated stochastic optimization models",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment sweep from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--mode", choices=["live", "record", "replay"], default=None)
    p.add_argument("--out", default=None, help="override the configured output directory")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("score", help="soft-score a generated LP against a ground-truth LP")
    p.add_argument("--truth", required=True)
    p.add_argument("--generated", required=True)
    p.set_defaults(fn=_cmd_score)

    p = sub.add_parser("reformulate", help="compile a compact spec to a deterministic LP")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_reformulate)

    p = sub.add_parser("solve", help="solve an LP/MILP file with the embedded solver")
    p.add_argument("--lp", required=True)
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("report", help="aggregate a records log")
    p.add_argument("--records", required=True)
    p.add_argument("--group-by", default="model", help="comma-separated fields, e.g. model,category")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_report)

    p = sub.add_parser("replay-verify", help="run a replay config twice and compare reports")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=_cmd_replay_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.fn(args)
    except (StochevalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
