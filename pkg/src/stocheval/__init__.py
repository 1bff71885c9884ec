"""stocheval: evaluation harness for LLM-formulated stochastic optimization models.

The package is organized as a small numpy-backed library:

- ``model``     canonical linear-model IR, canonicalization, fingerprints
- ``lpformat``  LP-file parser/emitter (the runner <-> scorer interchange)
- ``detequiv``  deterministic equivalents: extensive form, two-stage
                flattening, normal-quantile chance reformulation
- ``specfile``  compact text format for two-stage / chance specs
- ``solver``    embedded two-phase simplex + small branch-and-bound
- ``softscore`` partial-credit comparison of generated vs truth models
- ``runner``    sandboxed execution of candidate scripts
- ``pipeline``  prompt templates, chat client (live/record/replay), agents
- ``harness``   corpus ingestion, experiment loop, aggregation, reports
"""

from .model import (
    BINARY,
    CONTINUOUS,
    INTEGER,
    MAXIMIZE,
    MINIMIZE,
    Constraint,
    LinExpr,
    Model,
    Objective,
    Variable,
    canonicalize_constraint,
    fingerprint,
    models_structurally_equal,
)
from .lpformat import emit_lp, parse_lp
from .solver import Solution, solve_lp, solve_mip
from .detequiv import (
    ChanceRow,
    ChanceSpec,
    NormalDist,
    ScenarioBlock,
    TwoStageSpec,
    build_extensive_form,
    flatten_dlp2,
    normal_quantile,
    reformulate_individual_chance,
)
from .softscore import (
    PairScore,
    ScoreReport,
    constraints_equivalent,
    exact_accuracy,
    greedy_match,
    pair_score,
    rename_generated,
    score_models,
)

__version__ = "0.1.0"

__all__ = [
    "BINARY", "CONTINUOUS", "INTEGER", "MAXIMIZE", "MINIMIZE",
    "Constraint", "LinExpr", "Model", "Objective", "Variable",
    "canonicalize_constraint", "fingerprint", "models_structurally_equal",
    "emit_lp", "parse_lp",
    "Solution", "solve_lp", "solve_mip",
    "ChanceRow", "ChanceSpec", "NormalDist", "ScenarioBlock", "TwoStageSpec",
    "build_extensive_form", "flatten_dlp2", "normal_quantile",
    "reformulate_individual_chance",
    "PairScore", "ScoreReport", "constraints_equivalent", "exact_accuracy",
    "greedy_match", "pair_score", "rename_generated", "score_models",
    "__version__",
]
