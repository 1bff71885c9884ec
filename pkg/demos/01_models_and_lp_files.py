"""Building linear models, canonical forms, and the LP interchange format.

The Model IR is the unit everything else works on: the runner reads candidate
models from LP files, the scorer compares them in canonical form, and the
fingerprint keys regression baselines.
"""

from stocheval import (
    Constraint,
    LinExpr,
    Model,
    Objective,
    Variable,
    canonicalize_constraint,
    emit_lp,
    fingerprint,
    parse_lp,
)

# A tiny production model: two activities, one shared resource.
model = Model(
    variables=[Variable("make_a"), Variable("make_b", upper=8.0)],
    constraints=[
        Constraint("resource", LinExpr({"make_a": 2.0, "make_b": 1.0}), "<=", 10.0),
        Constraint("ratio", LinExpr({"make_a": 1.0, "make_b": -1.0}), ">=", -4.0),
    ],
    objective=Objective("maximize", LinExpr({"make_a": 3.0, "make_b": 2.0})),
)

print("LP text for the model:")
print(emit_lp(model))

# The emitted text parses back to a structurally identical model, and the
# emit is byte-stable, so files can be compared directly.
text = emit_lp(model)
again = parse_lp(text)
assert emit_lp(again) == text
print("round trip is byte-stable")

# Canonicalization is what makes algebraically equal constraints compare
# equal: constants fold into the rhs, >= flips to <=, and everything is
# scaled by the largest magnitude.
c1 = Constraint("c", LinExpr({"x": 2.0, "y": 2.0}), "<=", 4.0)
c2 = Constraint("c", LinExpr({"x": -1.0, "y": -1.0}), ">=", -2.0)
k1 = canonicalize_constraint(c1)
k2 = canonicalize_constraint(c2)
print("canonical forms agree:", k1.lhs.terms == k2.lhs.terms and k1.rhs == k2.rhs)

# Fingerprints ignore constraint order (they hash sorted canonical rows).
shuffled = Model(model.variables, list(reversed(model.constraints)), model.objective)
print("fingerprint stable under row reordering:",
      fingerprint(model) == fingerprint(shuffled))
