"""The embedded two-phase simplex and small branch-and-bound.

Reference optima for corpus ground truths come from this solver, so it is
deliberately boring: dense tableau, Bland's rule for guaranteed termination,
best-first branching on the most fractional integer variable.
"""

from stocheval import (
    Constraint,
    LinExpr,
    Model,
    Objective,
    Variable,
    solve_lp,
    solve_mip,
)

# A continuous LP with mixed senses and bounds.
lp = Model(
    [Variable("oil", upper=40.0), Variable("gas"), Variable("coal", lower=5.0)],
    [
        Constraint("energy", LinExpr({"oil": 1.0, "gas": 1.0, "coal": 1.0}), ">=", 60.0),
        Constraint("carbon", LinExpr({"oil": 2.0, "gas": 1.0, "coal": 3.0}), "<=", 150.0),
        Constraint("blend", LinExpr({"gas": 1.0, "coal": -1.0}), "=", 10.0),
    ],
    Objective("minimize", LinExpr({"oil": 3.0, "gas": 4.0, "coal": 2.0})),
)
solution = solve_lp(lp)
print(f"LP status {solution.status}, objective {solution.objective:.4f}")
print({k: round(v, 4) for k, v in solution.values.items()})

# Infeasibility and unboundedness come back as statuses, never exceptions.
unbounded = Model([Variable("x")], [], Objective("minimize", LinExpr({"x": -1.0})))
print("no lower bound on cost:", solve_lp(unbounded).status)

# A small knapsack: branch-and-bound agrees with what enumeration would say.
knapsack = Model(
    [Variable(f"item{i}", 0, 1, "binary") for i in range(5)],
    [Constraint("capacity",
                LinExpr({f"item{i}": w for i, w in enumerate([3.0, 4.0, 5.0, 6.0, 7.0])}),
                "<=", 12.0)],
    Objective("maximize",
              LinExpr({f"item{i}": v for i, v in enumerate([4.0, 5.0, 6.0, 8.0, 9.0])})),
)
best = solve_mip(knapsack)
chosen = [name for name, v in best.values.items() if v > 0.5]
print(f"MIP objective {best.objective:.1f} choosing {chosen}")
