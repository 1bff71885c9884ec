from __future__ import annotations

import random

import pytest

from stocheval.model import Constraint, LinExpr, Model, Objective, Variable
from stocheval.solver import solve_lp, solve_mip

from .oracles import brute_force_binary_mip, brute_force_lp


def lp(variables, constraints, sense, obj_terms):
    return Model(variables, constraints, Objective(sense, LinExpr(dict(obj_terms))))


def test_hand_solvable_minimum():
    m = lp(
        [Variable("x"), Variable("y")],
        [Constraint("c", LinExpr({"x": 1.0, "y": 1.0}), ">=", 2.0)],
        "minimize",
        {"x": 1.0, "y": 1.0},
    )
    sol = solve_lp(m)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(2.0, abs=1e-9)


def test_unbounded():
    m = lp([Variable("x")], [], "minimize", {"x": -1.0})
    assert solve_lp(m).status == "unbounded"


def test_infeasible():
    m = lp(
        [Variable("x")],
        [
            Constraint("lo", LinExpr({"x": 1.0}), ">=", 5.0),
            Constraint("hi", LinExpr({"x": 1.0}), "<=", 1.0),
        ],
        "minimize",
        {"x": 1.0},
    )
    assert solve_lp(m).status == "infeasible"


def test_maximize_with_bounds():
    m = lp(
        [Variable("a", upper=4.0), Variable("b", upper=3.0)],
        [Constraint("c", LinExpr({"a": 1.0, "b": 2.0}), "<=", 8.0)],
        "maximize",
        {"a": 3.0, "b": 2.0},
    )
    sol = solve_lp(m)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(16.0, abs=1e-9)
    assert sol.values["a"] == pytest.approx(4.0)


def test_free_and_negative_bounds():
    m = lp(
        [Variable("u", lower=float("-inf"), upper=float("inf")), Variable("w", lower=-2.0, upper=5.0)],
        [Constraint("c1", LinExpr({"u": 1.0, "w": 1.0}), "=", 1.0)],
        "minimize",
        {"u": 2.0, "w": 1.0},
    )
    sol = solve_lp(m)
    assert sol.status == "optimal"
    # u = 1 - w; cost = 2(1 - w) + w = 2 - w, minimized at w = 5
    assert sol.objective == pytest.approx(-3.0, abs=1e-9)


def test_objective_recomputed_from_values():
    m = lp(
        [Variable("x"), Variable("y", upper=9.0)],
        [
            Constraint("c1", LinExpr({"x": 2.0, "y": 1.0}), ">=", 4.0),
            Constraint("c2", LinExpr({"x": 1.0, "y": 3.0}), "<=", 15.0),
        ],
        "minimize",
        {"x": 1.5, "y": 0.5},
    )
    sol = solve_lp(m)
    assert sol.status == "optimal"
    recomputed = m.objective.expr.evaluate(sol.values)
    assert abs(recomputed - sol.objective) <= 1e-9


def test_solution_feasible_within_tolerance():
    rng = random.Random(7)
    for _ in range(25):
        m = random_bounded_lp(rng)
        sol = solve_lp(m)
        if sol.status != "optimal":
            continue
        for c in m.constraints:
            lhs = c.lhs.evaluate(sol.values)
            if c.sense == "<=":
                assert lhs <= c.rhs + 1e-6
            elif c.sense == ">=":
                assert lhs >= c.rhs - 1e-6
            else:
                assert abs(lhs - c.rhs) <= 1e-6
        for v in m.variables:
            assert sol.values[v.name] >= v.lower - 1e-9
            assert sol.values[v.name] <= v.upper + 1e-9


def test_rejects_integer_variables():
    m = lp([Variable("n", kind="integer")], [], "minimize", {"n": 1.0})
    with pytest.raises(ValueError):
        solve_lp(m)


def random_bounded_lp(rng: random.Random, max_vars: int = 6, max_cons: int = 6) -> Model:
    n = rng.randint(1, max_vars)
    mm = rng.randint(1, max_cons)
    variables = [Variable(f"x{i}", 0.0, float(rng.choice([5, 8, 10]))) for i in range(n)]
    names = [v.name for v in variables]
    constraints = []
    for j in range(mm):
        terms = {}
        for v in names:
            k = rng.randint(-5, 5)
            if k:
                terms[v] = float(k)
        if not terms:
            terms[rng.choice(names)] = 1.0
        sense = rng.choices(["<=", ">=", "="], weights=[5, 4, 1])[0]
        constraints.append(Constraint(f"c{j}", LinExpr(terms), sense, float(rng.randint(-10, 20))))
    obj = {v: float(rng.randint(-5, 5)) for v in names}
    sense = rng.choice(["minimize", "maximize"])
    return lp(variables, constraints, sense, obj)


def test_matches_vertex_enumeration_sample():
    rng = random.Random(20250810)
    mismatches = []
    for i in range(120):
        m = random_bounded_lp(rng)
        sol = solve_lp(m)
        status, obj = brute_force_lp(m)
        if sol.status != status:
            mismatches.append((i, sol.status, status))
        elif status == "optimal" and abs(sol.objective - obj) > 1e-6:
            mismatches.append((i, sol.objective, obj))
    assert not mismatches, mismatches[:5]


def test_mip_rounding_forced():
    m = lp(
        [Variable("x", kind="integer")],
        [Constraint("c", LinExpr({"x": 1.0}), ">=", 1.5)],
        "minimize",
        {"x": 1.0},
    )
    sol = solve_mip(m)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(2.0)
    assert sol.values["x"] == 2.0


def test_mip_continuous_equals_lp():
    m = lp(
        [Variable("x"), Variable("y")],
        [Constraint("c", LinExpr({"x": 1.0, "y": 2.0}), ">=", 3.0)],
        "minimize",
        {"x": 2.0, "y": 1.0},
    )
    assert solve_mip(m).objective == pytest.approx(solve_lp(m).objective)


def test_knapsack_two_items():
    m = lp(
        [Variable("a", 0, 1, "binary"), Variable("b", 0, 1, "binary")],
        [Constraint("cap", LinExpr({"a": 1.0, "b": 1.0}), "<=", 1.0)],
        "maximize",
        {"a": 3.0, "b": 2.0},
    )
    sol = solve_mip(m)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(3.0)
    assert sol.values == {"a": 1.0, "b": 0.0}


def test_mip_infeasible():
    m = lp(
        [Variable("a", 0, 1, "binary")],
        [Constraint("c", LinExpr({"a": 1.0}), ">=", 2.0)],
        "minimize",
        {"a": 1.0},
    )
    assert solve_mip(m).status == "infeasible"


def test_node_limit_reported():
    rng = random.Random(3)
    variables = [Variable(f"z{i}", 0, 1, "binary") for i in range(8)]
    terms = {v.name: float(rng.randint(3, 9)) for v in variables}
    m = lp(
        variables,
        [Constraint("cap", LinExpr(dict(terms)), "<=", 17.0)],
        "maximize",
        {v.name: float(rng.randint(1, 20)) for v in variables},
    )
    sol = solve_mip(m, node_limit=1)
    assert sol.status == "node_limit"


def random_binary_mip(rng: random.Random, max_vars: int = 8) -> Model:
    n = rng.randint(2, max_vars)
    variables = [Variable(f"z{i}", 0, 1, "binary") for i in range(n)]
    names = [v.name for v in variables]
    constraints = []
    for j in range(rng.randint(1, 4)):
        terms = {v: float(rng.randint(-4, 6)) for v in rng.sample(names, rng.randint(1, n))}
        sense = rng.choice(["<=", ">="])
        constraints.append(Constraint(f"c{j}", LinExpr(terms), sense, float(rng.randint(-2, 9))))
    obj = {v: float(rng.randint(-9, 9)) for v in names}
    return lp(variables, constraints, rng.choice(["minimize", "maximize"]), obj)


def test_mip_matches_enumeration_sample():
    rng = random.Random(99)
    for i in range(60):
        m = random_binary_mip(rng)
        sol = solve_mip(m)
        status, obj = brute_force_binary_mip(m)
        assert sol.status == status, f"instance {i}: {sol.status} vs {status}"
        if status == "optimal":
            assert sol.objective == pytest.approx(obj, abs=1e-9), f"instance {i}"
