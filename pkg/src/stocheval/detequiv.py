"""Compile compact stochastic problem descriptions into linear Models.

Three builders live here:

- ``build_extensive_form``: enumerate the finite scenario set of a two-stage
  recourse problem and replicate second-stage variables/constraints per
  scenario, probability-weighting the recourse costs in the objective.
- ``flatten_dlp2``: the perfect-information (deterministic) counterpart with
  a single implicit scenario, producing one flat LP.
- ``reformulate_individual_chance``: replace each probabilistic row
  ``P(a.x >= d) >= alpha`` with its normal-quantile equivalent
  ``a.x >= mu + z(alpha) * sigma``.

``normal_quantile`` is the supporting primitive: the inverse standard normal
CDF computed by bisection over an in-house series / continued-fraction erf,
kept independent of any library implementation so tests can use one as an
oracle against the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import model as ir
from .errors import (
    DimensionMismatch,
    DomainError,
    JointNotSupported,
    ProbabilityError,
    UnsupportedRandomness,
)
from .model import Constraint, LinExpr, Model, Objective, Variable

_PROB_TOL = 1e-9
_SQRT_PI = math.sqrt(math.pi)
_SQRT_2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# normal quantile
# ---------------------------------------------------------------------------

def _erf_series(x: float) -> float:
    """Taylor series of erf, accurate to ~1e-16 for |x| <= 3."""
    term = x  # (-1)^n x^(2n+1) / n!
    total = x
    n = 0
    while True:
        n += 1
        term *= -x * x / n
        inc = term / (2 * n + 1)
        total += inc
        if abs(inc) < 1e-18:
            return 2.0 / _SQRT_PI * total


def _erfc_cf(x: float, depth: int = 80) -> float:
    """Continued fraction for erfc, x >= 3 (DLMF-style J-fraction)."""
    f = 0.0
    for k in range(depth, 0, -1):
        f = (k / 2.0) / (x + f)
    return math.exp(-x * x) / _SQRT_PI / (x + f)


def _erfc(x: float) -> float:
    if x >= 3.0:
        return _erfc_cf(x)
    if x <= -3.0:
        return 2.0 - _erfc_cf(-x)
    return 1.0 - _erf_series(x)


def _norm_cdf(z: float) -> float:
    return 0.5 * _erfc(-z / _SQRT_2)


def normal_quantile(alpha: float) -> float:
    """Inverse standard normal CDF with |CDF(z) - alpha| <= 1e-10.

    Bisection over [-10, 10]; raises DomainError outside (0, 1).
    """
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must be in (0, 1), got {alpha}")
    lo, hi = -10.0, 10.0
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        if _norm_cdf(mid) < alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# two-stage specs
# ---------------------------------------------------------------------------

@dataclass
class ScenarioBlock:
    """One realization of the second-stage data: min q.y st -B x + D y (sense) d."""

    q: np.ndarray
    B: np.ndarray
    D: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        self.q = np.atleast_1d(np.asarray(self.q, dtype=float))
        self.d = np.atleast_1d(np.asarray(self.d, dtype=float))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        self.D = np.atleast_2d(np.asarray(self.D, dtype=float))


@dataclass
class TwoStageSpec:
    """Compact two-stage problem: first-stage block plus per-scenario data."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    first_senses: list[str]
    probabilities: np.ndarray
    scenarios: list[ScenarioBlock]
    second_senses: list[str] | None = None
    deterministic: bool = False
    x_names: list[str] | None = None
    y_names: list[str] | None = None
    first_names: list[str] | None = None
    second_names: list[str] | None = None

    def __post_init__(self):
        self.c = np.atleast_1d(np.asarray(self.c, dtype=float))
        self.b = np.atleast_1d(np.asarray(self.b, dtype=float)) if np.size(self.b) else np.zeros(0)
        self.A = (
            np.asarray(self.A, dtype=float).reshape(len(self.b), -1)
            if np.size(self.A)
            else np.zeros((0, self.c.size))
        )
        self.probabilities = np.atleast_1d(np.asarray(self.probabilities, dtype=float))
        n_x = self.c.size
        if self.x_names is None:
            self.x_names = [f"x{i + 1}" for i in range(n_x)]
        if self.A.shape != (self.b.size, n_x):
            raise DimensionMismatch(
                f"first-stage A is {self.A.shape}, expected ({self.b.size}, {n_x})"
            )
        if len(self.first_senses) != self.b.size:
            raise DimensionMismatch("first-stage senses do not match rhs length")
        if self.first_names is None:
            self.first_names = [f"fs{i + 1}" for i in range(self.b.size)]
        if not self.scenarios:
            raise DimensionMismatch("at least one scenario block required")
        n_y = self.scenarios[0].q.size
        n_rows = self.scenarios[0].d.size
        if self.y_names is None:
            self.y_names = [f"y{j + 1}" for j in range(n_y)]
        if self.second_names is None:
            self.second_names = [f"ss{i + 1}" for i in range(n_rows)]
        if self.second_senses is None:
            self.second_senses = [ir.EQ] * n_rows
        if len(self.second_senses) != n_rows:
            raise DimensionMismatch("second-stage senses do not match row count")
        for i, blk in enumerate(self.scenarios):
            if blk.q.size != n_y or blk.d.size != n_rows:
                raise DimensionMismatch(f"scenario {i + 1} block sizes disagree")
            if blk.D.shape != (n_rows, n_y):
                raise DimensionMismatch(
                    f"scenario {i + 1}: D is {blk.D.shape}, expected ({n_rows}, {n_y})"
                )
            if blk.B.shape != (n_rows, n_x):
                raise DimensionMismatch(
                    f"scenario {i + 1}: B is {blk.B.shape}, expected ({n_rows}, {n_x})"
                )
        if self.probabilities.size != len(self.scenarios):
            raise DimensionMismatch("probabilities do not match scenario count")
        if (self.probabilities < -_PROB_TOL).any():
            raise ProbabilityError("negative scenario probability")
        total = float(self.probabilities.sum())
        if abs(total - 1.0) > _PROB_TOL:
            raise ProbabilityError(f"probabilities sum to {total}, expected 1")
        if self.deterministic and len(self.scenarios) != 1:
            raise ProbabilityError("deterministic spec must have exactly one scenario")

    @property
    def n_scenarios(self) -> int:
        return len(self.scenarios)


def _first_stage_rows(spec: TwoStageSpec) -> list[Constraint]:
    rows = []
    for i in range(spec.b.size):
        terms = {
            spec.x_names[j]: float(spec.A[i, j])
            for j in range(spec.c.size)
            if spec.A[i, j] != 0.0
        }
        rows.append(Constraint(spec.first_names[i], LinExpr(terms), spec.first_senses[i],
                               float(spec.b[i])))
    return rows


def _second_stage_rows(spec: TwoStageSpec, blk: ScenarioBlock, y_names: list[str],
                       suffix: str) -> list[Constraint]:
    rows = []
    n_x = spec.c.size
    for r in range(blk.d.size):
        terms: dict[str, float] = {}
        for j in range(n_x):
            coef = -float(blk.B[r, j])
            if coef != 0.0:
                terms[spec.x_names[j]] = coef
        for j in range(len(y_names)):
            coef = float(blk.D[r, j])
            if coef != 0.0:
                terms[y_names[j]] = terms.get(y_names[j], 0.0) + coef
        rows.append(Constraint(spec.second_names[r] + suffix, LinExpr(terms),
                               spec.second_senses[r], float(blk.d[r])))
    return rows


def build_extensive_form(spec: TwoStageSpec) -> Model:
    """Scenario-replicated deterministic equivalent of a two-stage spec.

    Variables: first-stage x unchanged, then per-scenario copies y<j>__s<i>.
    Objective: c.x + sum_i p_i * q_i . y_i. Constraints: first-stage rows, then
    per-scenario rows named <base>__s<i>.
    """
    if spec.deterministic:
        raise ValueError("extensive form expects a stochastic spec; use flatten_dlp2")
    variables = [Variable(n) for n in spec.x_names]
    obj_terms = {
        spec.x_names[j]: float(spec.c[j]) for j in range(spec.c.size) if spec.c[j] != 0.0
    }
    constraints = _first_stage_rows(spec)
    for i, blk in enumerate(spec.scenarios):
        suffix = f"__s{i + 1}"
        y_names = [f"{y}{suffix}" for y in spec.y_names]
        variables.extend(Variable(n) for n in y_names)
        p = float(spec.probabilities[i])
        for j, yn in enumerate(y_names):
            coef = p * float(blk.q[j])
            if coef != 0.0:
                obj_terms[yn] = coef
        constraints.extend(_second_stage_rows(spec, blk, y_names, suffix))
    return Model(variables, constraints, Objective(ir.MINIMIZE, LinExpr(obj_terms)))


def flatten_dlp2(spec: TwoStageSpec) -> Model:
    """Single flat LP for the perfect-information two-stage problem."""
    if not spec.deterministic:
        raise ValueError("flatten_dlp2 expects deterministic=True")
    blk = spec.scenarios[0]
    variables = [Variable(n) for n in spec.x_names] + [Variable(n) for n in spec.y_names]
    obj_terms = {
        spec.x_names[j]: float(spec.c[j]) for j in range(spec.c.size) if spec.c[j] != 0.0
    }
    for j, yn in enumerate(spec.y_names):
        if blk.q[j] != 0.0:
            obj_terms[yn] = float(blk.q[j])
    constraints = _first_stage_rows(spec)
    constraints.extend(_second_stage_rows(spec, blk, spec.y_names, ""))
    return Model(variables, constraints, Objective(ir.MINIMIZE, LinExpr(obj_terms)))


# ---------------------------------------------------------------------------
# chance constraints
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormalDist:
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")


@dataclass
class ChanceRow:
    """One probabilistic row: a.x (sense) d with d ~ Normal, held w.p. >= alpha."""

    name: str
    a: np.ndarray
    sense: str
    dist: NormalDist
    alpha: float | None = None

    def __post_init__(self):
        self.a = np.atleast_1d(np.asarray(self.a, dtype=float))


@dataclass
class ChanceSpec:
    c: np.ndarray
    rows: list[ChanceRow]
    joint: bool = False
    joint_alpha: float | None = None
    x_names: list[str] | None = None

    def __post_init__(self):
        self.c = np.atleast_1d(np.asarray(self.c, dtype=float))
        if self.x_names is None:
            self.x_names = [f"x{i + 1}" for i in range(self.c.size)]
        for row in self.rows:
            if row.a.size != self.c.size:
                raise DimensionMismatch(f"row {row.name}: coefficient length mismatch")
            alpha = self.joint_alpha if self.joint else row.alpha
            if alpha is None or not (0.0 < alpha < 1.0):
                raise DomainError(f"row {row.name}: confidence level must be in (0, 1)")


def reformulate_individual_chance(spec: ChanceSpec) -> Model:
    """Quantile reformulation of individual normal-rhs chance constraints.

    ``a.x >= d`` held with probability alpha becomes ``a.x >= mu + z(alpha)*sigma``;
    ``a.x <= d`` becomes ``a.x <= mu - z(alpha)*sigma``. Joint specs and
    equality rows are typed errors, never silent approximations.
    """
    if spec.joint:
        raise JointNotSupported("joint chance constraints are represented, not reformulated")
    variables = [Variable(n) for n in spec.x_names]
    obj_terms = {
        spec.x_names[j]: float(spec.c[j]) for j in range(spec.c.size) if spec.c[j] != 0.0
    }
    constraints = []
    for row in spec.rows:
        if row.sense == ir.EQ:
            raise UnsupportedRandomness(
                f"row {row.name}: equality with continuous randomness cannot hold "
                "with fixed probability"
            )
        z = normal_quantile(row.alpha)
        if row.sense == ir.GE:
            rhs = row.dist.mu + z * row.dist.sigma
        else:
            rhs = row.dist.mu - z * row.dist.sigma
        terms = {
            spec.x_names[j]: float(row.a[j]) for j in range(row.a.size) if row.a[j] != 0.0
        }
        constraints.append(Constraint(row.name, LinExpr(terms), row.sense, rhs))
    return Model(variables, constraints, Objective(ir.MINIMIZE, LinExpr(obj_terms)))
