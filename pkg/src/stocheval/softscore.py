"""Partial-credit comparison of a generated model against ground truth.

The comparison is robust to variable renaming, constraint reordering, and
positive rescaling: variables are matched greedily by a five-part similarity
score, the generated model is rewritten onto the truth's namespace, and
constraints/objective terms are then compared in canonical form. The result
is a ScoreReport carrying the eight batch metrics plus the match details.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import model as ir
from .errors import CollisionError, InfeasibleTautology, TrivialConstraint
from .model import (
    Constraint,
    LinExpr,
    Model,
    Objective,
    REL_TOL,
    Variable,
    canonical_rows,
    canonicalize_constraint,
    close,
)
from .solver import OPTIMAL, Solution

#: greedy matcher drops pairs scoring below this floor
MATCH_FLOOR = 0.2

ERROR_NONE = "none"
ERROR_RUNTIME = "runtime"
ERROR_COMPILE = "compile"

METRIC_KEYS = (
    "accuracy",
    "partial_score",
    "match_vars",
    "match_cons",
    "match_obj",
    "extra_gen",
    "runtime_err",
    "compile_err",
)


@dataclass
class PairScore:
    truth_var: str
    gen_var: str
    subscores: tuple[float, float, float, float, float]
    total: float


@dataclass
class ScoreReport:
    accuracy: float = 0.0
    partial_score: float = 0.0
    match_vars: float = 0.0
    match_cons: float = 0.0
    match_obj: float = 0.0
    extra_gen: float = 0.0
    error_kind: str = ERROR_NONE
    var_mapping: dict[str, str] = field(default_factory=dict)  # generated -> truth
    matched_vars: list[tuple[str, str]] = field(default_factory=list)  # (truth, gen)
    matched_cons: list[tuple[str, str]] = field(default_factory=list)
    matched_obj_terms: list[str] = field(default_factory=list)
    extra_vars: list[str] = field(default_factory=list)
    extra_cons: list[str] = field(default_factory=list)
    extra_obj_terms: list[str] = field(default_factory=list)

    def metrics(self) -> dict[str, float]:
        """Flat dict with exactly the eight batch metric keys."""
        return {
            "accuracy": self.accuracy,
            "partial_score": self.partial_score,
            "match_vars": self.match_vars,
            "match_cons": self.match_cons,
            "match_obj": self.match_obj,
            "extra_gen": self.extra_gen,
            "runtime_err": 100.0 if self.error_kind == ERROR_RUNTIME else 0.0,
            "compile_err": 100.0 if self.error_kind == ERROR_COMPILE else 0.0,
        }

    def to_json(self) -> dict:
        out = self.metrics()
        out["error_kind"] = self.error_kind
        out["var_mapping"] = dict(self.var_mapping)
        out["matched_vars"] = [list(p) for p in self.matched_vars]
        out["matched_cons"] = [list(p) for p in self.matched_cons]
        out["matched_obj_terms"] = list(self.matched_obj_terms)
        out["extra_vars"] = list(self.extra_vars)
        out["extra_cons"] = list(self.extra_cons)
        out["extra_obj_terms"] = list(self.extra_obj_terms)
        return out


def exact_accuracy(truth_out: Solution, gen_out: Solution) -> float:
    """100 when the executions agree: same status and, if optimal, objectives
    within relative 1e-6; otherwise 0 and scoring proceeds on partial credit."""
    if truth_out.status != gen_out.status:
        return 0.0
    if truth_out.status == OPTIMAL:
        ot, og = truth_out.objective, gen_out.objective
        if ot is None or og is None:
            return 0.0
        if abs(ot - og) > 1e-6 * max(1.0, abs(ot)):
            return 0.0
    return 100.0


# ---------------------------------------------------------------------------
# pair scoring
# ---------------------------------------------------------------------------

def _orient_for_scoring(row: Constraint) -> Constraint:
    """Re-orient canonical equality rows by coefficient values, not names.

    The canonical sign rule (lexicographically smallest variable positive) is
    name-dependent, so a renamed model could flip row signs and perturb the
    pair scorer. Here equality rows pick the orientation whose sorted
    coefficient tuple (then rhs) is lexicographically larger; ties keep the
    stored orientation. Value-based, hence invariant under renaming.
    """
    if row.sense != ir.EQ or not row.lhs.terms:
        return row
    fwd = (tuple(sorted(row.lhs.terms.values())), row.rhs)
    rev = (tuple(sorted(-k for k in row.lhs.terms.values())), -row.rhs)
    if rev > fwd:
        return Constraint(row.name, LinExpr({v: -k for v, k in row.lhs.terms.items()}),
                          row.sense, -row.rhs)
    return row


class _ModelView:
    """Precomputed per-variable structure used by the pair scorer."""

    def __init__(self, m: Model):
        self.model = m
        self.vars = {v.name: v for v in m.variables}
        self.order = m.variable_names
        self.rows = [_orient_for_scoring(r) for r in canonical_rows(m)]
        self.shapes: dict[str, list[tuple]] = {n: [] for n in self.vars}
        self.incidences: dict[str, list[float]] = {n: [] for n in self.vars}
        for row in self.rows:
            n_pos = sum(1 for k in row.lhs.terms.values() if k > 0)
            n_neg = len(row.lhs.terms) - n_pos
            for v, k in row.lhs.terms.items():
                self.shapes[v].append((row.sense, n_pos, n_neg, 1 if k > 0 else -1))
                self.incidences[v].append(k)
        obj = m.objective.expr.terms
        self.obj_terms = {v: k for v, k in obj.items() if k != 0.0}
        self.obj_scale = max((abs(k) for k in self.obj_terms.values()), default=0.0)
        self.freq = {
            n: len(self.shapes[n]) + (1 if n in self.obj_terms else 0) for n in self.vars
        }


def _bounds_type_score(vt: Variable, vg: Variable) -> float:
    s = 1.0 if vt.kind == vg.kind else 0.0
    if not close(vt.lower, vg.lower):
        s -= 0.25
    if not close(vt.upper, vg.upper):
        s -= 0.25
    return max(0.0, s)


def _multiset_jaccard(a: list, b: list) -> float:
    if not a and not b:
        return 1.0
    counts_a: dict = {}
    counts_b: dict = {}
    for x in a:
        counts_a[x] = counts_a.get(x, 0) + 1
    for x in b:
        counts_b[x] = counts_b.get(x, 0) + 1
    inter = sum(min(counts_a.get(k, 0), counts_b.get(k, 0)) for k in set(counts_a) | set(counts_b))
    union = sum(max(counts_a.get(k, 0), counts_b.get(k, 0)) for k in set(counts_a) | set(counts_b))
    return inter / union


def _objective_score(tv: str, gv: str, truth: _ModelView, gen: _ModelView) -> float:
    in_t = tv in truth.obj_terms
    in_g = gv in gen.obj_terms
    if not in_t and not in_g:
        return 1.0
    if in_t != in_g:
        return 0.0
    ct = truth.obj_terms[tv] / truth.obj_scale
    cg = gen.obj_terms[gv] / gen.obj_scale
    return max(0.0, 1.0 - abs(ct - cg))


def _frequency_score(ft: int, fg: int) -> float:
    if ft == 0 and fg == 0:
        return 1.0
    if ft == 0 or fg == 0:
        return 0.0
    return min(ft, fg) / max(ft, fg)


def _incidence_overlap(truth_inc: list[float], gen_inc: list[float]) -> float:
    if not truth_inc:
        return 1.0 if not gen_inc else 0.0
    remaining = sorted(gen_inc)
    matched = 0
    for k in sorted(truth_inc):
        for i, g in enumerate(remaining):
            if close(k, g):
                matched += 1
                del remaining[i]
                break
    return matched / len(truth_inc)


def pair_score(vt: Variable, vg: Variable, truth: Model, gen: Model) -> PairScore:
    """Five-part similarity between one truth variable and one generated one."""
    tview, gview = _ModelView(truth), _ModelView(gen)
    return _pair_score_views(vt.name, vg.name, tview, gview)


def _pair_score_views(tv: str, gv: str, tview: _ModelView, gview: _ModelView) -> PairScore:
    s1 = _bounds_type_score(tview.vars[tv], gview.vars[gv])
    s2 = _multiset_jaccard(tview.shapes[tv], gview.shapes[gv])
    s3 = _objective_score(tv, gv, tview, gview)
    s4 = _frequency_score(tview.freq[tv], gview.freq[gv])
    s5 = _incidence_overlap(tview.incidences[tv], gview.incidences[gv])
    subs = (s1, s2, s3, s4, s5)
    return PairScore(tv, gv, subs, sum(subs) / 5.0)


def score_grid(truth: Model, gen: Model) -> list[PairScore]:
    """Pair scores over the full truth x generated grid, in grid order."""
    tview, gview = _ModelView(truth), _ModelView(gen)
    return [
        _pair_score_views(tv, gv, tview, gview)
        for tv in tview.order
        for gv in gview.order
    ]


def greedy_match(scores: list[PairScore], truth_order: list[str] | None = None,
                 gen_order: list[str] | None = None) -> dict[str, str]:
    """Greedy descending-score assignment without endpoint reuse.

    Pairs below MATCH_FLOOR are never accepted; ties break on truth
    declaration order, then generated declaration order. Returns the mapping
    generated-name -> truth-name.
    """
    if truth_order is None:
        seen: dict[str, None] = {}
        for p in scores:
            seen.setdefault(p.truth_var)
        truth_order = list(seen)
    if gen_order is None:
        seen = {}
        for p in scores:
            seen.setdefault(p.gen_var)
        gen_order = list(seen)
    t_idx = {n: i for i, n in enumerate(truth_order)}
    g_idx = {n: i for i, n in enumerate(gen_order)}
    ordered = sorted(scores, key=lambda p: (-p.total, t_idx[p.truth_var], g_idx[p.gen_var]))
    used_t: set[str] = set()
    used_g: set[str] = set()
    mapping: dict[str, str] = {}
    for p in ordered:
        if p.total < MATCH_FLOOR:
            break
        if p.truth_var in used_t or p.gen_var in used_g:
            continue
        mapping[p.gen_var] = p.truth_var
        used_t.add(p.truth_var)
        used_g.add(p.gen_var)
    return mapping


EXTRA_PREFIX = "extra__"


def rename_generated(gen: Model, mapping: dict[str, str], strict: bool = True) -> Model:
    """Rewrite the generated model onto the truth namespace.

    Matched names take their truth counterpart; unmatched names get the
    ``extra__`` prefix. In strict mode a mapping target that collides with an
    unmatched generated name raises CollisionError; with strict=False the
    prefix resolves it.
    """
    renames: dict[str, str] = {}
    for v in gen.variables:
        if v.name in mapping:
            renames[v.name] = mapping[v.name]
        else:
            renames[v.name] = EXTRA_PREFIX + v.name
    if strict:
        unmatched = {v.name for v in gen.variables if v.name not in mapping}
        for target in mapping.values():
            if target in unmatched:
                raise CollisionError(
                    f"mapping target {target!r} collides with an unmatched generated variable"
                )
    final = list(renames.values())
    if len(set(final)) != len(final):
        raise CollisionError("renaming would produce duplicate variable names")

    def rename_expr(e: LinExpr) -> LinExpr:
        return LinExpr({renames[v]: k for v, k in e.terms.items()}, e.constant)

    variables = [Variable(renames[v.name], v.lower, v.upper, v.kind) for v in gen.variables]
    constraints = [Constraint(c.name, rename_expr(c.lhs), c.sense, c.rhs) for c in gen.constraints]
    objective = Objective(gen.objective.sense, rename_expr(gen.objective.expr))
    return Model(variables, constraints, objective)


def constraints_equivalent(c1: Constraint, c2: Constraint, tol: float = REL_TOL) -> bool:
    """True iff the canonical forms agree: same sense, coefficients and rhs
    within relative tolerance. Scaling and >= flips are absorbed."""
    k1 = _canon_or_none(c1, tol)
    k2 = _canon_or_none(c2, tol)
    if k1 is None or k2 is None:
        return k1 is k2 is None
    if k1.sense != k2.sense or not close(k1.rhs, k2.rhs, tol):
        return False
    for v in set(k1.lhs.terms) | set(k2.lhs.terms):
        if not close(k1.lhs.terms.get(v, 0.0), k2.lhs.terms.get(v, 0.0), tol):
            return False
    return True


def _canon_or_none(c: Constraint, tol: float):
    try:
        return canonicalize_constraint(c)
    except TrivialConstraint:
        return None
    except InfeasibleTautology:
        return Constraint(c.name, LinExpr({}, 0.0), ir.LE, -1.0)


# ---------------------------------------------------------------------------
# whole-model scoring
# ---------------------------------------------------------------------------

def score_models(
    truth: Model,
    gen: Model | None,
    truth_out: Solution | None = None,
    gen_out: Solution | None = None,
    error_kind: str = ERROR_NONE,
) -> ScoreReport:
    """Run the full comparison and assemble the eight metrics.

    On error paths (``error_kind`` != none) no matches are credited; extra_gen
    is 100 when a generated model parsed anyway and 0 when nothing did.
    """
    if error_kind != ERROR_NONE:
        report = ScoreReport(error_kind=error_kind)
        report.extra_gen = 100.0 if gen is not None and _gen_element_count(gen) else 0.0
        return report
    assert gen is not None

    report = ScoreReport()
    if truth_out is not None and gen_out is not None:
        report.accuracy = exact_accuracy(truth_out, gen_out)

    grid = score_grid(truth, gen)
    mapping = greedy_match(grid, truth.variable_names, gen.variable_names)
    report.var_mapping = mapping
    report.matched_vars = sorted(((t, g) for g, t in mapping.items()),
                                 key=lambda p: truth.variable_names.index(p[0]))
    report.extra_vars = [EXTRA_PREFIX + v for v in gen.variable_names if v not in mapping]
    n_tvars = len(truth.variables)
    report.match_vars = _pct(len(mapping), n_tvars)

    renamed = rename_generated(gen, mapping, strict=False)

    # constraints: one-to-one greedy in declaration order over canonical forms
    gen_rows = list(renamed.constraints)
    used = [False] * len(gen_rows)
    matched_cons = []
    for t_row in truth.constraints:
        for i, g_row in enumerate(gen_rows):
            if used[i]:
                continue
            if constraints_equivalent(t_row, g_row):
                used[i] = True
                matched_cons.append((t_row.name, g_row.name))
                break
    report.matched_cons = matched_cons
    report.extra_cons = [g.name for i, g in enumerate(gen_rows) if not used[i]]
    n_tcons = len(truth.constraints)
    report.match_cons = _pct(len(matched_cons), n_tcons)

    # objective terms on the shared namespace
    t_obj = {v: k for v, k in truth.objective.expr.terms.items() if k != 0.0}
    g_obj = {v: k for v, k in renamed.objective.expr.terms.items() if k != 0.0}
    sense_ok = truth.objective.sense == renamed.objective.sense
    matched_terms = []
    if sense_ok:
        for v, k in t_obj.items():
            if v in g_obj and close(k, g_obj[v]):
                matched_terms.append(v)
    report.matched_obj_terms = matched_terms
    report.extra_obj_terms = [v for v in g_obj if v not in set(matched_terms)]
    if not sense_ok:
        obj_fraction = 0.0
    elif not t_obj:
        obj_fraction = 1.0
    else:
        obj_fraction = len(matched_terms) / len(t_obj)
    report.match_obj = 100.0 * obj_fraction

    n_gen_elements = _gen_element_count(gen)
    n_extra = len(report.extra_vars) + len(report.extra_cons) + len(report.extra_obj_terms)
    report.extra_gen = _pct(n_extra, n_gen_elements) if n_gen_elements else 0.0

    denom = n_tvars + n_tcons + 1
    report.partial_score = 100.0 * (len(mapping) + len(matched_cons) + obj_fraction) / denom
    return report


def _gen_element_count(gen: Model) -> int:
    n_obj = sum(1 for k in gen.objective.expr.terms.values() if k != 0.0)
    return len(gen.variables) + len(gen.constraints) + n_obj


def _pct(num: int, den: int) -> float:
    if den == 0:
        return 100.0 if num == 0 else 0.0
    return 100.0 * num / den
