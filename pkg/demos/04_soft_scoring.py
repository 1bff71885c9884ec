"""Soft-scoring a generated model against ground truth.

The scorer is what makes batch evaluation meaningful: it credits partially
correct models and is invariant to renaming, reordering, and rescaling, so a
candidate that calls the variables differently still gets full marks when
the algebra matches.
"""

from stocheval import (
    Constraint,
    LinExpr,
    Model,
    Objective,
    Variable,
    score_models,
    solve_lp,
)

truth = Model(
    [Variable("x1"), Variable("x2")],
    [
        Constraint("supply", LinExpr({"x1": 1.0, "x2": 1.0}), "<=", 10.0),
        Constraint("min_mix", LinExpr({"x1": 1.0, "x2": -1.0}), ">=", 2.0),
    ],
    Objective("minimize", LinExpr({"x1": 3.0, "x2": 1.0})),
)

# The "generated" model renames everything, scales a row by 4, flips the
# other, and invents one extra constraint the truth never had.
generated = Model(
    [Variable("alloc_a"), Variable("alloc_b")],
    [
        Constraint("g1", LinExpr({"alloc_a": 4.0, "alloc_b": 4.0}), "<=", 40.0),
        Constraint("g2", LinExpr({"alloc_a": -1.0, "alloc_b": 1.0}), "<=", -2.0),
        Constraint("g3", LinExpr({"alloc_a": 1.0}), "<=", 99.0),
    ],
    Objective("minimize", LinExpr({"alloc_a": 3.0, "alloc_b": 1.0})),
)

report = score_models(truth, generated, solve_lp(truth), solve_lp(generated))
print("variable mapping (generated -> truth):", report.var_mapping)
print("metrics:")
for key, value in report.metrics().items():
    print(f"  {key:14s} {value:8.3f}")
print("extra components:", report.extra_cons)

# Drop a matched constraint and partial credit goes down, never up.
weaker = Model(generated.variables, generated.constraints[:1], generated.objective)
weaker_report = score_models(truth, weaker, None, None)
print(f"partial score after deleting a matched row: "
      f"{report.partial_score:.2f} -> {weaker_report.partial_score:.2f}")
