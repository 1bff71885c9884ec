from __future__ import annotations

import math

import pytest

from stocheval.errors import InfeasibleTautology, ModelError, TrivialConstraint
from stocheval.model import (
    Constraint,
    LinExpr,
    Model,
    Objective,
    Variable,
    canonicalize_constraint,
    fingerprint,
    models_structurally_equal,
)


def lin(terms, constant=0.0):
    return LinExpr(dict(terms), constant)


def tiny_model():
    return Model(
        [Variable("x"), Variable("y")],
        [Constraint("c1", lin({"x": 1, "y": 1}), ">=", 2.0)],
        Objective("minimize", lin({"x": 2, "y": 3})),
    )


class TestVariable:
    def test_defaults(self):
        v = Variable("x")
        assert v.lower == 0.0 and math.isinf(v.upper) and v.kind == "continuous"

    def test_bad_name(self):
        with pytest.raises(ModelError):
            Variable("2x")

    def test_binary_bounds_enforced(self):
        with pytest.raises(ModelError):
            Variable("z", 0.0, 2.0, "binary")

    def test_inverted_bounds(self):
        with pytest.raises(ModelError):
            Variable("x", 3.0, 1.0)


class TestModelValidation:
    def test_duplicate_variable(self):
        with pytest.raises(ModelError):
            Model([Variable("x"), Variable("x")], [], Objective("minimize", lin({})))

    def test_undeclared_reference(self):
        with pytest.raises(ModelError):
            Model(
                [Variable("x")],
                [Constraint("c", lin({"ghost": 1.0}), "<=", 1.0)],
                Objective("minimize", lin({})),
            )

    def test_duplicate_constraint_name(self):
        with pytest.raises(ModelError):
            Model(
                [Variable("x")],
                [
                    Constraint("c", lin({"x": 1.0}), "<=", 1.0),
                    Constraint("c", lin({"x": 2.0}), "<=", 2.0),
                ],
                Objective("minimize", lin({})),
            )


class TestCanonicalize:
    def test_sense_flip_and_scaling(self):
        # -x - y >= -2  ==  x + y <= 2  -> scaled to 0.5 x + 0.5 y <= 1
        c = Constraint("c", lin({"x": -1.0, "y": -1.0}), ">=", -2.0)
        k = canonicalize_constraint(c)
        assert k.sense == "<="
        assert k.lhs.terms == pytest.approx({"x": 0.5, "y": 0.5})
        assert k.rhs == pytest.approx(1.0)

    def test_positive_scaling_invariance(self):
        c1 = canonicalize_constraint(Constraint("c", lin({"x": 2.0, "y": 2.0}), "<=", 4.0))
        c2 = canonicalize_constraint(Constraint("c", lin({"x": 1.0, "y": 1.0}), "<=", 2.0))
        assert c1.lhs.terms == pytest.approx(c2.lhs.terms)
        assert c1.rhs == pytest.approx(c2.rhs)
        assert c1.sense == c2.sense

    def test_equality_sign_rule(self):
        # any nonzero scalar, including negative, leaves equalities invariant
        c1 = canonicalize_constraint(Constraint("c", lin({"a": 1.0, "b": -2.0}), "=", 3.0))
        c2 = canonicalize_constraint(Constraint("c", lin({"a": -0.5, "b": 1.0}), "=", -1.5))
        assert c1.lhs.terms == pytest.approx(c2.lhs.terms)
        assert c1.rhs == pytest.approx(c2.rhs)
        assert c1.lhs.terms["a"] > 0

    def test_constant_folded(self):
        c = canonicalize_constraint(Constraint("c", lin({"x": 1.0}, constant=1.0), "<=", 3.0))
        assert c.lhs.constant == 0.0
        assert c.rhs == pytest.approx(1.0)  # (3 - 1) / max(1, 2)

    def test_infeasible_tautology(self):
        with pytest.raises(InfeasibleTautology):
            canonicalize_constraint(Constraint("c", lin({"x": 0.0}), "<=", -1.0))

    def test_trivial_marker(self):
        with pytest.raises(TrivialConstraint):
            canonicalize_constraint(Constraint("c", lin({}), "<=", 5.0))

    def test_idempotent(self):
        c = Constraint("c", lin({"x": -3.0, "y": 7.0}, 1.0), ">=", -9.0)
        once = canonicalize_constraint(c)
        twice = canonicalize_constraint(once)
        assert once.lhs.terms == twice.lhs.terms
        assert once.rhs == twice.rhs and once.sense == twice.sense

    def test_small_coefficients_dropped(self):
        c = Constraint("c", lin({"x": 1.0, "y": 1e-15}), "<=", 1.0)
        k = canonicalize_constraint(c)
        assert "y" not in k.lhs.terms


class TestFingerprint:
    def test_deterministic(self):
        m = tiny_model()
        assert fingerprint(m) == fingerprint(m)
        assert len(fingerprint(m)) == 64

    def test_constraint_reordering_invariant(self):
        vars_ = [Variable("x"), Variable("y")]
        c1 = Constraint("c1", lin({"x": 1.0}), "<=", 1.0)
        c2 = Constraint("c2", lin({"y": 1.0}), "<=", 2.0)
        obj = Objective("minimize", lin({"x": 1.0}))
        assert fingerprint(Model(vars_, [c1, c2], obj)) == fingerprint(Model(vars_, [c2, c1], obj))

    def test_coefficient_change_alters_digest(self):
        m1 = tiny_model()
        m2 = Model(
            [Variable("x"), Variable("y")],
            [Constraint("c1", lin({"x": 1, "y": 1.5}), ">=", 2.0)],
            Objective("minimize", lin({"x": 2, "y": 3})),
        )
        assert fingerprint(m1) != fingerprint(m2)


class TestStructuralEquality:
    def test_scaled_constraint_equal(self):
        a = tiny_model()
        b = Model(
            [Variable("x"), Variable("y")],
            [Constraint("c1", lin({"x": 2.0, "y": 2.0}), ">=", 4.0)],
            Objective("minimize", lin({"x": 2, "y": 3})),
        )
        assert models_structurally_equal(a, b)

    def test_different_bounds_not_equal(self):
        a = tiny_model()
        b = Model(
            [Variable("x", upper=5.0), Variable("y")],
            [Constraint("c1", lin({"x": 1, "y": 1}), ">=", 2.0)],
            Objective("minimize", lin({"x": 2, "y": 3})),
        )
        assert not models_structurally_equal(a, b)
