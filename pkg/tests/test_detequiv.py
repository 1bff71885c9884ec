from __future__ import annotations

import math
import random

import numpy as np
import pytest

from stocheval.detequiv import (
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
from stocheval.errors import (
    DimensionMismatch,
    DomainError,
    JointNotSupported,
    ProbabilityError,
    UnsupportedRandomness,
)
from stocheval.solver import solve_lp

from .oracles import stdlib_normal_cdf, stdlib_normal_quantile


# ---------------------------------------------------------------------------
# normal quantile
# ---------------------------------------------------------------------------

class TestNormalQuantile:
    def test_median_is_zero(self):
        assert normal_quantile(0.5) == pytest.approx(0.0, abs=1e-10)

    @pytest.mark.parametrize("alpha,expected", [(0.95, 1.6449), (0.90, 1.2816)])
    def test_reference_points(self, alpha, expected):
        z = normal_quantile(alpha)
        assert z == pytest.approx(stdlib_normal_quantile(alpha), abs=1e-9)
        assert z == pytest.approx(expected, abs=1e-4)
        assert abs(stdlib_normal_cdf(z) - alpha) <= 1e-10

    def test_domain_errors(self):
        for bad in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(DomainError):
                normal_quantile(bad)

    def test_cdf_inversion_accuracy(self):
        for k in range(1, 100):
            alpha = k / 100.0
            z = normal_quantile(alpha)
            assert abs(stdlib_normal_cdf(z) - alpha) <= 1e-10

    def test_strictly_increasing_and_symmetric(self):
        alphas = [0.005 + 0.99 * i / 99 for i in range(100)]
        zs = [normal_quantile(a) for a in alphas]
        assert all(a < b for a, b in zip(zs, zs[1:]))
        for a in (0.6, 0.75, 0.9, 0.99):
            assert normal_quantile(a) == pytest.approx(-normal_quantile(1 - a), abs=1e-9)


# ---------------------------------------------------------------------------
# two-stage specs
# ---------------------------------------------------------------------------

def toy_recourse_spec() -> TwoStageSpec:
    """Scalar first stage, unit recourse: min x + E[2 y], y >= d - x, d in {1, 3}."""
    scenarios = [
        ScenarioBlock(q=[2.0], B=[[-1.0]], D=[[1.0]], d=[d]) for d in (1.0, 3.0)
    ]
    return TwoStageSpec(
        c=[1.0],
        A=[],
        b=[],
        first_senses=[],
        probabilities=[0.5, 0.5],
        scenarios=scenarios,
        second_senses=[">="],
    )


def brute_force_toy_objective() -> float:
    """Grid over x with the inner minimum solved analytically."""
    best = math.inf
    for i in range(0, 501):
        x = i * 0.01
        cost = x + 0.5 * 2.0 * max(0.0, 1.0 - x) + 0.5 * 2.0 * max(0.0, 3.0 - x)
        best = min(best, cost)
    return best


class TestExtensiveForm:
    def test_variable_replication_count(self):
        scenarios = [
            ScenarioBlock(q=[1.0, 1.0, 1.0], B=np.zeros((2, 2)), D=np.ones((2, 3)), d=[1.0, 2.0])
            for _ in range(2)
        ]
        spec = TwoStageSpec(
            c=[1.0, 1.0], A=[[1.0, 1.0]], b=[5.0], first_senses=["<="],
            probabilities=[0.5, 0.5], scenarios=scenarios,
        )
        m = build_extensive_form(spec)
        assert len(m.variables) == 2 + 2 * 3
        assert len(m.constraints) == 1 + 2 * 2
        assert "y1__s1" in m.variable_names and "y3__s2" in m.variable_names
        assert any(c.name == "ss1__s2" for c in m.constraints)

    def test_toy_objective_value(self):
        target = brute_force_toy_objective()
        m = build_extensive_form(toy_recourse_spec())
        sol = solve_lp(m)
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(target, abs=1e-6)
        assert sol.objective == pytest.approx(3.0, abs=1e-6)

    def test_objective_identity_at_random_points(self):
        spec = toy_recourse_spec()
        m = build_extensive_form(spec)
        rng = random.Random(5)
        for _ in range(20):
            point = {n: rng.uniform(0, 4) for n in m.variable_names}
            direct = m.objective.expr.evaluate(point)
            expected = point["x1"] + 0.5 * 2.0 * point["y1__s1"] + 0.5 * 2.0 * point["y1__s2"]
            assert direct == pytest.approx(expected, abs=1e-12)

    def test_probability_validation(self):
        with pytest.raises(ProbabilityError):
            TwoStageSpec(
                c=[1.0], A=[], b=[], first_senses=[], probabilities=[0.6, 0.6],
                scenarios=[ScenarioBlock([1.0], [[0.0]], [[1.0]], [1.0]) for _ in range(2)],
            )

    def test_dimension_validation(self):
        with pytest.raises(DimensionMismatch):
            TwoStageSpec(
                c=[1.0, 2.0], A=[[1.0]], b=[1.0], first_senses=["<="],
                probabilities=[1.0],
                scenarios=[ScenarioBlock([1.0], [[0.0]], [[1.0]], [1.0])],
            )

    def test_single_scenario_matches_flatten(self):
        blk = ScenarioBlock(q=[3.0, 1.0], B=[[1.0], [0.0]], D=[[1.0, 0.0], [1.0, 1.0]], d=[0.0, 4.0])
        stoch = TwoStageSpec(
            c=[2.0], A=[[1.0]], b=[6.0], first_senses=["<="],
            probabilities=[1.0], scenarios=[blk],
        )
        det = TwoStageSpec(
            c=[2.0], A=[[1.0]], b=[6.0], first_senses=["<="],
            probabilities=[1.0], scenarios=[blk], deterministic=True,
        )
        ext = build_extensive_form(stoch)
        flat = flatten_dlp2(det)
        assert [v.replace("__s1", "") for v in ext.variable_names] == flat.variable_names
        s_ext = solve_lp(ext)
        s_flat = solve_lp(flat)
        assert s_ext.objective == pytest.approx(s_flat.objective, abs=1e-9)


class TestFlattenDlp2:
    def warehouse_spec(self) -> TwoStageSpec:
        # 2 warehouses, 2 regions: order x_i, ship y_ij; capacity rows <=, demand rows =
        blk = ScenarioBlock(
            q=[1.0, 3.0, 2.0, 1.0],
            B=[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [0.0, 0.0]],
            D=[
                [1.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 1.0],
                [1.0, 0.0, 1.0, 0.0],
                [0.0, 1.0, 0.0, 1.0],
            ],
            d=[0.0, 0.0, 5.0, 7.0],
        )
        return TwoStageSpec(
            c=[2.0, 3.0], A=[], b=[], first_senses=[],
            probabilities=[1.0], scenarios=[blk], deterministic=True,
            x_names=["x_1", "x_2"], y_names=["y_11", "y_12", "y_21", "y_22"],
            second_senses=["<=", "<=", "=", "="],
            second_names=["cap_1", "cap_2", "dem_1", "dem_2"],
        )

    def test_warehouse_shape(self):
        m = flatten_dlp2(self.warehouse_spec())
        assert m.variable_names == ["x_1", "x_2", "y_11", "y_12", "y_21", "y_22"]
        assert [c.name for c in m.constraints] == ["cap_1", "cap_2", "dem_1", "dem_2"]
        cap = m.constraints[0]
        assert cap.lhs.terms == {"x_1": -1.0, "y_11": 1.0, "y_12": 1.0}
        assert cap.sense == "<=" and cap.rhs == 0.0

    def test_warehouse_solves(self):
        sol = solve_lp(flatten_dlp2(self.warehouse_spec()))
        assert sol.status == "optimal"
        # region 1 cheapest via warehouse 1 (2+1), region 2 via warehouse 2 (3+1)
        assert sol.objective == pytest.approx(5 * 3 + 7 * 4, abs=1e-6)

    def test_empty_second_stage(self):
        blk = ScenarioBlock(q=[], B=np.zeros((1, 1)), D=np.zeros((1, 0)), d=[2.0])
        spec = TwoStageSpec(
            c=[1.0], A=[[1.0]], b=[4.0], first_senses=["<="],
            probabilities=[1.0], scenarios=[blk], deterministic=True,
            second_senses=["<="],
        )
        m = flatten_dlp2(spec)
        assert m.variable_names == ["x1"]

    def test_requires_deterministic_flag(self):
        with pytest.raises(ValueError):
            flatten_dlp2(toy_recourse_spec())


# ---------------------------------------------------------------------------
# chance constraints
# ---------------------------------------------------------------------------

def truck_spec() -> ChanceSpec:
    return ChanceSpec(
        c=[1.0, 1.0],
        rows=[
            ChanceRow("store_a", [1.0, 0.0], ">=", NormalDist(100.0, 10.0), 0.95),
            ChanceRow("store_b", [0.0, 1.0], ">=", NormalDist(150.0, 15.0), 0.90),
        ],
    )


class TestChanceReformulation:
    def test_truck_example(self):
        m = reformulate_individual_chance(truck_spec())
        sol = solve_lp(m)
        z95 = stdlib_normal_quantile(0.95)
        z90 = stdlib_normal_quantile(0.90)
        assert sol.status == "optimal"
        assert sol.values["x1"] == pytest.approx(100 + 10 * z95, abs=1e-6)
        assert sol.values["x2"] == pytest.approx(150 + 15 * z90, abs=1e-6)
        assert sol.objective == pytest.approx(250 + 10 * z95 + 15 * z90, abs=1e-6)

    def test_alpha_half_reduces_to_mean(self):
        spec = ChanceSpec(
            c=[1.0], rows=[ChanceRow("r", [1.0], ">=", NormalDist(40.0, 5.0), 0.5)]
        )
        m = reformulate_individual_chance(spec)
        assert m.constraints[0].rhs == pytest.approx(40.0, abs=1e-9)

    def test_le_sense_flips_quantile(self):
        spec = ChanceSpec(
            c=[1.0], rows=[ChanceRow("r", [1.0], "<=", NormalDist(40.0, 5.0), 0.95)]
        )
        m = reformulate_individual_chance(spec)
        assert m.constraints[0].rhs == pytest.approx(40.0 - 5.0 * stdlib_normal_quantile(0.95), abs=1e-6)

    def test_joint_not_supported(self):
        spec = ChanceSpec(
            c=[1.0],
            rows=[ChanceRow("r", [1.0], ">=", NormalDist(1.0, 1.0))],
            joint=True,
            joint_alpha=0.95,
        )
        with pytest.raises(JointNotSupported):
            reformulate_individual_chance(spec)

    def test_equality_rejected(self):
        spec = ChanceSpec(
            c=[1.0], rows=[ChanceRow("r", [1.0], "=", NormalDist(1.0, 1.0), 0.9)]
        )
        with pytest.raises(UnsupportedRandomness):
            reformulate_individual_chance(spec)

    def test_monte_carlo_coverage(self):
        spec = truck_spec()
        m = reformulate_individual_chance(spec)
        sol = solve_lp(m)
        rng = np.random.default_rng(20240810)
        n = 1_000_000
        for row, var, alpha in (
            (spec.rows[0], "x1", 0.95),
            (spec.rows[1], "x2", 0.90),
        ):
            samples = rng.normal(row.dist.mu, row.dist.sigma, size=n)
            covered = float(np.mean(sol.values[var] >= samples))
            assert abs(covered - alpha) <= 0.005

    def test_sigma_must_be_positive(self):
        with pytest.raises(DomainError):
            NormalDist(0.0, 0.0)
