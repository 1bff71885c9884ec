"""A full batch experiment replayed from shipped fixtures.

The replay fixture store under fixtures/chat contains four scripted
conversations covering the three outcome classes (clean run, compile error,
runtime error). Running the sweep twice produces byte-identical reports;
this script runs it once through the library API and prints the
method-by-category table.
"""

import tempfile
from pathlib import Path

from stocheval.harness import (
    ExperimentConfig,
    aggregate,
    aggregate_to_table,
    ingest_corpus,
    run_experiment,
)
from stocheval.runner import RunnerConfig

REPO = Path(__file__).resolve().parent.parent

cfg = ExperimentConfig(
    models=["gpt-test-repro"],
    methods=["standard_s", "agentic"],
    runs=3,
    mode="replay",
    corpus="builtin",
    problems=["trucks_two_stores", "power_two_scenarios"],
    output_dir=tempfile.mkdtemp(prefix="stocheval_demo_"),
    fixtures_dir=str(REPO / "fixtures" / "chat"),
    concurrency=1,
    runner=RunnerConfig(timeout_s=30),
)

corpus = ingest_corpus(cfg.corpus_path())
records = run_experiment(cfg, corpus)
print(f"{len(records)} cells recorded in {cfg.output_dir}")

table = aggregate_to_table(aggregate(records, ("method", "category")))
cols = ["method", "category", "cells", "accuracy", "partial_score",
        "match_vars", "extra_gen", "runtime_err", "compile_err"]
print(" | ".join(f"{c:>13s}" for c in cols))
for row in table:
    print(" | ".join(f"{row[c]:>13}" if isinstance(row[c], (str, int))
                     else f"{row[c]:>13.2f}" for c in cols))

# The same sweep is reachable from the command line:
#   stocheval run --config configs/replay.json --mode replay
#   stocheval replay-verify --config configs/replay.json
