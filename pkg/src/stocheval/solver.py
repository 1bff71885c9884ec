"""Embedded LP/MILP solver for reference optima and execution checks.

solve_lp runs a dense two-phase tableau simplex with Bland's anti-cycling
rule; solve_mip wraps it in a best-first branch-and-bound on the most
fractional integer variable. Deliberately simple: the corpus is desk-scale
(at most a few hundred variables) and testability beats speed here.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from . import model as ir
from .errors import NumericBreakdown
from .model import Model

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NODE_LIMIT = "node_limit"

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-12
INT_TOL = 1e-6

# phase-1 artificial cost above this is reported infeasible; comfortably above
# accumulated rounding for desk-scale data, far below any real violation
_PHASE1_TOL = 1e-7


@dataclass
class Solution:
    status: str
    objective: float | None = None
    values: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"status": self.status, "objective": self.objective, "values": dict(self.values)}


class _Standardizer:
    """Rewrites a Model over shifted/split nonnegative columns.

    Produces min c.x, A_ub x <= b_ub, A_eq x = b_eq, x >= 0 plus the recipe
    to map a column solution back to original variable values.
    """

    def __init__(self, m: Model, bound_overrides: dict[str, tuple[float, float]] | None = None):
        overrides = bound_overrides or {}
        self.m = m
        self.columns: list[tuple[str, float, float]] = []  # (var, scale, shift-part)
        self.fixed: dict[str, float] = {}
        self.var_cols: dict[str, list[tuple[int, float]]] = {}
        self.shift: dict[str, float] = {}
        self.extra_ub: list[tuple[str, float]] = []  # column upper bounds (var, cap)
        self.infeasible_box = False

        col = 0
        for v in m.variables:
            lo, hi = overrides.get(v.name, (v.lower, v.upper))
            if lo > hi + FEAS_TOL:
                self.infeasible_box = True
                return
            if not math.isinf(lo) and not math.isinf(hi) and abs(hi - lo) <= FEAS_TOL:
                self.fixed[v.name] = lo
                continue
            if not math.isinf(lo):
                # x = lo + x'
                self.var_cols[v.name] = [(col, 1.0)]
                self.shift[v.name] = lo
                if not math.isinf(hi):
                    self.extra_ub.append((v.name, hi - lo))
                col += 1
            elif not math.isinf(hi):
                # x = hi - x'
                self.var_cols[v.name] = [(col, -1.0)]
                self.shift[v.name] = hi
                col += 1
            else:
                # free: x = x+ - x-
                self.var_cols[v.name] = [(col, 1.0), (col + 1, -1.0)]
                self.shift[v.name] = 0.0
                col += 2
        self.ncols = col

    def expr_row(self, terms: dict[str, float]) -> tuple[np.ndarray, float]:
        """Column coefficients and the constant contributed by shifts/fixing."""
        row = np.zeros(self.ncols)
        const = 0.0
        for name, k in terms.items():
            if name in self.fixed:
                const += k * self.fixed[name]
                continue
            const += k * self.shift[name]
            for idx, scale in self.var_cols[name]:
                row[idx] += k * scale
        return row, const

    def recover(self, x: np.ndarray) -> dict[str, float]:
        values = {name: float(v) for name, v in self.fixed.items()}
        for name, cols in self.var_cols.items():
            values[name] = float(self.shift[name] + sum(scale * x[idx] for idx, scale in cols))
        return values


def _build_standard(m: Model, bound_overrides=None):
    std = _Standardizer(m, bound_overrides)
    if std.infeasible_box:
        return std, None
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    for c in m.constraints:
        row, const = std.expr_row(c.lhs.terms)
        rhs = c.rhs - c.lhs.constant - const
        if c.sense == ir.LE:
            a_ub.append(row)
            b_ub.append(rhs)
        elif c.sense == ir.GE:
            a_ub.append(-row)
            b_ub.append(-rhs)
        else:
            a_eq.append(row)
            b_eq.append(rhs)
    for name, cap in std.extra_ub:
        row = np.zeros(std.ncols)
        for idx, scale in std.var_cols[name]:
            row[idx] += scale
        a_ub.append(row)
        b_ub.append(cap)
    obj_row, _ = std.expr_row(m.objective.expr.terms)
    sign = 1.0 if m.objective.sense == ir.MINIMIZE else -1.0
    return std, (sign * obj_row, a_ub, b_ub, a_eq, b_eq)


class _Tableau:
    """Dense simplex tableau with Bland's rule."""

    def __init__(self, rows: np.ndarray, rhs: np.ndarray, basis: list[int]):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self.small_pivots = 0

    def _pivot(self, r: int, c: int) -> None:
        piv = self.rows[r, c]
        if abs(piv) < PIVOT_TOL:
            raise NumericBreakdown(f"pivot {piv:.3e} below tolerance")
        self.rows[r] /= piv
        self.rhs[r] /= piv
        for i in range(self.rows.shape[0]):
            if i == r:
                continue
            f = self.rows[i, c]
            if f != 0.0:
                self.rows[i] -= f * self.rows[r]
                self.rhs[i] -= f * self.rhs[r]
        self.basis[r] = c

    def run(self, cost: np.ndarray, allowed: int) -> tuple[str, np.ndarray, float]:
        """Minimize cost over the tableau; returns (status, x, objective).

        ``allowed`` restricts entering columns to indices < allowed (used to
        keep phase-2 from re-entering artificials).
        """
        m, n = self.rows.shape
        # reduced costs for the current basis
        z = cost.astype(float).copy()
        obj = 0.0
        for r, b in enumerate(self.basis):
            if z[b] != 0.0:
                obj -= z[b] * self.rhs[r]
                z -= z[b] * self.rows[r]
        max_iter = 10000 * (m + n + 1)
        for _ in range(max_iter):
            enter = -1
            for j in range(allowed):  # Bland: lowest eligible index
                if z[j] < -OPT_TOL:
                    enter = j
                    break
            if enter < 0:
                x = np.zeros(n)
                for r, b in enumerate(self.basis):
                    x[b] = self.rhs[r]
                return OPTIMAL, x, -obj
            col = self.rows[:, enter]
            best_ratio = math.inf
            leave = -1
            for r in range(m):
                a = col[r]
                if a > FEAS_TOL:
                    ratio = self.rhs[r] / a
                    if ratio < best_ratio - FEAS_TOL or (
                        abs(ratio - best_ratio) <= FEAS_TOL
                        and (leave < 0 or self.basis[r] < self.basis[leave])
                    ):
                        best_ratio = ratio
                        leave = r
            if leave < 0:
                if col.max(initial=-math.inf) > PIVOT_TOL:
                    # entries exist but all below the feasibility tolerance
                    self.small_pivots += 1
                    if self.small_pivots >= 10:
                        raise NumericBreakdown("repeated near-zero pivot columns")
                return UNBOUNDED, np.zeros(n), -math.inf
            piv = self.rows[leave, enter]
            self._pivot(leave, enter)
            f = z[enter]
            z = z - f * self.rows[leave]
            obj -= f * self.rhs[leave]
            if abs(piv) < 1e-9:
                self.small_pivots += 1
                if self.small_pivots >= 10:
                    raise NumericBreakdown("repeated near-zero pivots")
        raise NumericBreakdown("iteration limit exceeded; possible cycling")


def _simplex(c: np.ndarray, a_ub, b_ub, a_eq, b_eq) -> tuple[str, np.ndarray | None, float]:
    n = c.size
    m_ub, m_eq = len(a_ub), len(b_eq)
    rows = []
    rhs = []
    slack_of_row: list[int | None] = []
    for i in range(m_ub):
        r = np.zeros(n + m_ub)
        r[:n] = a_ub[i]
        r[n + i] = 1.0
        rows.append(r)
        rhs.append(float(b_ub[i]))
        slack_of_row.append(n + i)
    for i in range(m_eq):
        r = np.zeros(n + m_ub)
        r[:n] = a_eq[i]
        rows.append(r)
        rhs.append(float(b_eq[i]))
        slack_of_row.append(None)
    m = len(rows)
    if m == 0:
        # unconstrained over x >= 0
        if (c < -OPT_TOL).any():
            return UNBOUNDED, None, -math.inf
        return OPTIMAL, np.zeros(n), 0.0
    A = np.vstack(rows)
    b = np.array(rhs)

    # orient rows so rhs >= 0, then add artificials where the slack cannot
    # serve as the starting basis
    art_cols = []
    basis: list[int] = [0] * m
    for i in range(m):
        if b[i] < 0:
            A[i] = -A[i]
            b[i] = -b[i]
            if slack_of_row[i] is not None:
                slack_of_row[i] = None  # slack coefficient is now -1
    total = n + m_ub
    extra = []
    for i in range(m):
        s = slack_of_row[i]
        if s is not None and A[i, s] == 1.0:
            basis[i] = s
        else:
            col = np.zeros(m)
            col[i] = 1.0
            extra.append(col)
            basis[i] = total + len(extra) - 1
            art_cols.append(basis[i])
    if extra:
        A = np.hstack([A, np.column_stack(extra)])
    tab = _Tableau(A, b, basis)

    if art_cols:
        phase1 = np.zeros(A.shape[1])
        for j in art_cols:
            phase1[j] = 1.0
        status, _, art_obj = tab.run(phase1, allowed=A.shape[1])
        if status != OPTIMAL:  # phase 1 is always bounded below by 0
            raise NumericBreakdown("phase 1 did not terminate optimally")
        if art_obj > _PHASE1_TOL:
            return INFEASIBLE, None, math.inf
        # drive remaining artificials out of the basis
        drop_rows = []
        for r, bvar in enumerate(tab.basis):
            if bvar >= total:
                piv_col = -1
                for j in range(total):
                    if abs(tab.rows[r, j]) > 1e-9:
                        piv_col = j
                        break
                if piv_col >= 0:
                    tab._pivot(r, piv_col)
                else:
                    drop_rows.append(r)
        if drop_rows:
            keep = [r for r in range(tab.rows.shape[0]) if r not in drop_rows]
            tab.rows = tab.rows[keep]
            tab.rhs = tab.rhs[keep]
            tab.basis = [tab.basis[r] for r in keep]

    cost = np.zeros(tab.rows.shape[1])
    cost[:n] = c
    status, x, obj = tab.run(cost, allowed=total)
    if status == UNBOUNDED:
        return UNBOUNDED, None, -math.inf
    return OPTIMAL, x[:n], obj


def solve_lp(m: Model, _bound_overrides=None) -> Solution:
    """Solve the continuous relaxation-free Model; all variables continuous."""
    if _bound_overrides is None:
        for v in m.variables:
            if v.kind != ir.CONTINUOUS:
                raise ValueError(f"solve_lp requires continuous variables, got {v.kind} {v.name}")
    return _solve_relaxed(m, _bound_overrides)


def _solve_relaxed(m: Model, bound_overrides=None) -> Solution:
    std, standard = _build_standard(m, bound_overrides)
    if standard is None:
        return Solution(INFEASIBLE)
    c, a_ub, b_ub, a_eq, b_eq = standard
    status, x, _ = _simplex(c, a_ub, b_ub, a_eq, b_eq)
    if status == INFEASIBLE:
        return Solution(INFEASIBLE)
    if status == UNBOUNDED:
        return Solution(UNBOUNDED)
    values = std.recover(x)
    objective = float(m.objective.expr.evaluate(values))
    return Solution(OPTIMAL, objective, values)


def solve_mip(m: Model, node_limit: int = 10000) -> Solution:
    """Best-first branch-and-bound over the integer/binary variables."""
    int_vars = [v.name for v in m.variables if v.kind != ir.CONTINUOUS]
    if not int_vars:
        return solve_lp(m)
    minimize = m.objective.sense == ir.MINIMIZE
    sign = 1.0 if minimize else -1.0

    root = _solve_relaxed(m)
    if root.status != OPTIMAL:
        return Solution(root.status)

    counter = 0
    heap: list[tuple[float, int, dict]] = []
    heapq.heappush(heap, (sign * root.objective, counter, {}))
    incumbent: Solution | None = None
    nodes = 0

    while heap:
        bound, _, overrides = heapq.heappop(heap)
        if incumbent is not None and bound >= sign * incumbent.objective - 1e-9:
            continue
        nodes += 1
        if nodes > node_limit:
            if incumbent is not None:
                return Solution(NODE_LIMIT, incumbent.objective, incumbent.values)
            return Solution(NODE_LIMIT)
        sol = _solve_relaxed(m, overrides) if overrides else root
        if sol.status != OPTIMAL:
            continue
        if incumbent is not None and sign * sol.objective >= sign * incumbent.objective - 1e-9:
            continue
        branch = _pick_branch(m, sol.values)
        if branch is None:
            snapped = _snap_integers(m, sol.values)
            obj = m.objective.expr.evaluate(snapped)
            if incumbent is None or sign * obj < sign * incumbent.objective - 1e-12:
                incumbent = Solution(OPTIMAL, obj, snapped)
            continue
        name, val = branch
        var = m.variable(name)
        lo, hi = overrides.get(name, (var.lower, var.upper))
        down = dict(overrides)
        down[name] = (lo, math.floor(val))
        up = dict(overrides)
        up[name] = (math.ceil(val), hi)
        for child in (down, up):
            clo, chi = child[name]
            if clo > chi:
                continue
            counter += 1
            heapq.heappush(heap, (sign * sol.objective, counter, child))

    if incumbent is None:
        return Solution(INFEASIBLE)
    return incumbent


def _pick_branch(m: Model, values: dict[str, float]) -> tuple[str, float] | None:
    """Most fractional integer variable, or None if all are integral."""
    best: tuple[str, float] | None = None
    best_dist = -1.0
    for v in m.variables:
        if v.kind == ir.CONTINUOUS:
            continue
        val = values.get(v.name, 0.0)
        frac = abs(val - round(val))
        if frac <= INT_TOL:
            continue
        dist = -abs(frac - 0.5)  # closer to 0.5 is better
        if dist > best_dist:
            best_dist = dist
            best = (v.name, val)
    return best


def _snap_integers(m: Model, values: dict[str, float]) -> dict[str, float]:
    out = dict(values)
    for v in m.variables:
        if v.kind != ir.CONTINUOUS:
            out[v.name] = float(round(out.get(v.name, 0.0)))
    return out
