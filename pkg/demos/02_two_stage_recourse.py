"""Two-stage recourse problems and their deterministic equivalents.

A compact TwoStageSpec carries the first-stage block plus per-scenario
second-stage data. The extensive-form builder replicates the recourse
variables per scenario and probability-weights their costs; the flattener
handles the perfect-information counterpart.
"""

from stocheval import ScenarioBlock, TwoStageSpec, build_extensive_form, flatten_dlp2, solve_lp
from stocheval.lpformat import emit_lp

# Contract base capacity x now at unit cost 1; demand turns out to be 1 or 3
# with equal probability; cover any shortfall with spot power y at cost 2.
spec = TwoStageSpec(
    c=[1.0],
    A=[], b=[], first_senses=[],
    probabilities=[0.5, 0.5],
    scenarios=[
        ScenarioBlock(q=[2.0], B=[[-1.0]], D=[[1.0]], d=[demand])
        for demand in (1.0, 3.0)
    ],
    second_senses=[">="],
    second_names=["cover_demand"],
)

extensive = build_extensive_form(spec)
print("extensive form:")
print(emit_lp(extensive))

solution = solve_lp(extensive)
print(f"optimal expected cost: {solution.objective:.4f}")
print({k: round(v, 4) for k, v in solution.values.items()})
# Any contracted capacity in [1, 3] is optimal here; the expected cost is 3.

# The deterministic two-stage counterpart (one scenario, known data) flattens
# to a single LP with no scenario suffixes.
det = TwoStageSpec(
    c=[1.0],
    A=[], b=[], first_senses=[],
    probabilities=[1.0],
    scenarios=[ScenarioBlock(q=[2.0], B=[[-1.0]], D=[[1.0]], d=[2.0])],
    second_senses=[">="],
    deterministic=True,
)
flat = flatten_dlp2(det)
print("flattened deterministic model variables:", [v.name for v in flat.variables])
print(f"known-demand cost: {solve_lp(flat).objective:.4f}")

# Variable and constraint counts follow the replication formulas exactly.
n_x, n_y, s = 1, 1, len(spec.scenarios)
assert len(extensive.variables) == n_x + s * n_y
assert len(extensive.constraints) == 0 + s * 1
print("replication counts check out")
