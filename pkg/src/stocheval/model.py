"""Canonical in-memory representation of linear optimization models.

A Model is the unit of comparison between a generated solver script and the
ground truth: ordered variables, ordered linear constraints, one objective.
Canonicalization makes algebraically equivalent constraints compare equal
(constant folded into the rhs, >= flipped to <=, max-abs scaling, sign rule
for equalities), which is what the scorer and the fingerprint rely on.

Models are treated as immutable values after construction; all operations
here are pure and return new objects.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field

from .errors import InfeasibleTautology, ModelError, TrivialConstraint

CONTINUOUS = "continuous"
INTEGER = "integer"
BINARY = "binary"
KINDS = (CONTINUOUS, INTEGER, BINARY)

MINIMIZE = "minimize"
MAXIMIZE = "maximize"

LE = "<="
EQ = "="
GE = ">="
SENSES = (LE, EQ, GE)

#: relative tolerance for coefficient/rhs comparison after canonicalization
REL_TOL = 1e-6
#: absolute threshold below which a canonical coefficient is dropped as zero
ZERO_TOL = 1e-9

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def close(a: float, b: float, rel: float = REL_TOL) -> bool:
    """Approximate equality: absolute for small magnitudes, relative above 1."""
    if a == b:
        return True
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class Variable:
    name: str
    lower: float = 0.0
    upper: float = math.inf
    kind: str = CONTINUOUS

    def __post_init__(self):
        if not _NAME_RE.match(self.name):
            raise ModelError(f"invalid variable name {self.name!r}")
        if self.kind not in KINDS:
            raise ModelError(f"unknown variable kind {self.kind!r} for {self.name}")
        if self.lower > self.upper:
            raise ModelError(f"variable {self.name}: lower {self.lower} > upper {self.upper}")
        if self.kind == BINARY and (self.lower, self.upper) != (0.0, 1.0):
            raise ModelError(f"binary variable {self.name} must have bounds [0, 1]")


@dataclass
class LinExpr:
    """Sparse linear expression: coefficient per variable name plus a constant."""

    terms: dict[str, float] = field(default_factory=dict)
    constant: float = 0.0

    def evaluate(self, values: dict[str, float]) -> float:
        return self.constant + sum(c * values.get(v, 0.0) for v, c in self.terms.items())

    def copy(self) -> "LinExpr":
        return LinExpr(dict(self.terms), self.constant)


@dataclass
class Constraint:
    name: str
    lhs: LinExpr
    sense: str
    rhs: float

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ModelError(f"constraint {self.name}: unknown sense {self.sense!r}")


@dataclass
class Objective:
    sense: str
    expr: LinExpr

    def __post_init__(self):
        if self.sense not in (MINIMIZE, MAXIMIZE):
            raise ModelError(f"unknown objective sense {self.sense!r}")


@dataclass
class Model:
    variables: list[Variable]
    constraints: list[Constraint]
    objective: Objective

    def __post_init__(self):
        self.variables = list(self.variables)
        self.constraints = list(self.constraints)
        validate_model(self)

    @property
    def variable_names(self) -> list[str]:
        return [v.name for v in self.variables]

    def variable(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)


def validate_model(m: Model) -> None:
    """Exhaustive scan: unique names, resolved references, sane components."""
    declared: set[str] = set()
    for v in m.variables:
        if v.name in declared:
            raise ModelError(f"duplicate variable name {v.name!r}")
        declared.add(v.name)
    seen_cons: set[str] = set()
    for c in m.constraints:
        if not _NAME_RE.match(c.name):
            raise ModelError(f"invalid constraint name {c.name!r}")
        if c.name in seen_cons:
            raise ModelError(f"duplicate constraint name {c.name!r}")
        seen_cons.add(c.name)
        for ref in c.lhs.terms:
            if ref not in declared:
                raise ModelError(f"constraint {c.name} references undeclared variable {ref!r}")
    for ref in m.objective.expr.terms:
        if ref not in declared:
            raise ModelError(f"objective references undeclared variable {ref!r}")


def canonicalize_constraint(c: Constraint, tol: float = ZERO_TOL) -> Constraint:
    """Normalize a constraint so algebraically equal rows become identical.

    Steps: fold the lhs constant into the rhs, flip >= to <= by negation,
    divide everything by the largest magnitude among coefficients and rhs,
    drop coefficients below ``tol``, and for equalities pick the sign that
    makes the lexicographically smallest variable's coefficient positive.

    Raises InfeasibleTautology for empty rows that can never hold and
    TrivialConstraint for empty rows that always hold.
    """
    terms = {v: k for v, k in c.lhs.terms.items() if k != 0.0}
    rhs = c.rhs - c.lhs.constant
    sense = c.sense
    if sense == GE:
        terms = {v: -k for v, k in terms.items()}
        rhs = -rhs
        sense = LE

    def degenerate(rhs_val: float) -> Constraint:
        if sense == LE:
            if rhs_val < -tol:
                raise InfeasibleTautology(f"{c.name}: 0 <= {rhs_val}")
            raise TrivialConstraint(c.name)
        if abs(rhs_val) > tol:
            raise InfeasibleTautology(f"{c.name}: 0 = {rhs_val}")
        raise TrivialConstraint(c.name)

    if not terms:
        degenerate(rhs)

    scale = max(max(abs(k) for k in terms.values()), abs(rhs))
    if scale == 0.0:
        scale = 1.0
    terms = {v: k / scale for v, k in terms.items()}
    rhs = rhs / scale
    terms = {v: k for v, k in terms.items() if abs(k) >= tol}
    if not terms:
        degenerate(rhs)

    if sense == EQ and terms[min(terms)] < 0:
        terms = {v: -k for v, k in terms.items()}
        rhs = -rhs
    return Constraint(c.name, LinExpr(terms, 0.0), sense, rhs)


def canonical_rows(m: Model, tol: float = ZERO_TOL) -> list[Constraint]:
    """Canonicalize every constraint, silently dropping trivial rows.

    Infeasible tautologies are kept in a fixed normal form (0 <= -1) so two
    nonsense rows still compare equal instead of crashing the scorer.
    """
    rows = []
    for c in m.constraints:
        try:
            rows.append(canonicalize_constraint(c, tol))
        except TrivialConstraint:
            continue
        except InfeasibleTautology:
            rows.append(Constraint(c.name, LinExpr({}, 0.0), LE, -1.0))
    return rows


def constraint_key(c: Constraint, digits: int = 9) -> tuple:
    """Hashable summary of a canonicalized constraint, names sorted."""
    items = tuple(sorted((v, round(k, digits)) for v, k in c.lhs.terms.items()))
    return (c.sense, items, round(c.rhs, digits))


def fingerprint(m: Model) -> str:
    """Stable 256-bit hex digest of the canonicalized model.

    Constraints enter sorted by canonical content (names excluded), so
    reordering rows does not change the digest; coefficient changes beyond
    the zero-drop tolerance do.
    """
    vars_part = sorted(
        (v.name, _round_bound(v.lower), _round_bound(v.upper), v.kind) for v in m.variables
    )
    rows_part = sorted(constraint_key(c)[:3] for c in canonical_rows(m))
    obj = m.objective
    obj_part = (
        obj.sense,
        tuple(sorted((v, round(k, 9)) for v, k in obj.expr.terms.items() if k != 0.0)),
        round(obj.expr.constant, 9),
    )
    blob = json.dumps([vars_part, rows_part, obj_part], sort_keys=False, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _round_bound(b: float) -> float | str:
    if math.isinf(b):
        return "-inf" if b < 0 else "+inf"
    return round(b, 9)


def models_structurally_equal(a: Model, b: Model, tol: float = REL_TOL) -> bool:
    """Name-aware structural equality after canonicalization.

    Variables must agree on bounds and kind, same-named constraints must
    canonicalize to the same row within ``tol``, objectives must match.
    """
    av = {v.name: v for v in a.variables}
    bv = {v.name: v for v in b.variables}
    if set(av) != set(bv):
        return False
    for name, v in av.items():
        w = bv[name]
        if v.kind != w.kind or not close(v.lower, w.lower, tol) or not close(v.upper, w.upper, tol):
            return False
    ar = {c.name: c for c in canonical_rows(a)}
    br = {c.name: c for c in canonical_rows(b)}
    if set(ar) != set(br):
        return False
    for name, c in ar.items():
        if not _rows_close(c, br[name], tol):
            return False
    if a.objective.sense != b.objective.sense:
        return False
    if not _expr_close(a.objective.expr, b.objective.expr, tol):
        return False
    return True


def _rows_close(c1: Constraint, c2: Constraint, tol: float) -> bool:
    if c1.sense != c2.sense or not close(c1.rhs, c2.rhs, tol):
        return False
    return _expr_close(c1.lhs, c2.lhs, tol)


def _expr_close(e1: LinExpr, e2: LinExpr, tol: float) -> bool:
    if not close(e1.constant, e2.constant, tol):
        return False
    for v in set(e1.terms) | set(e2.terms):
        if not close(e1.terms.get(v, 0.0), e2.terms.get(v, 0.0), tol):
            return False
    return True
