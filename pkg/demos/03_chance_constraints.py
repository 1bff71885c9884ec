"""Individual chance constraints and the normal-quantile reformulation.

P(a.x >= d) >= alpha with d ~ Normal(mu, sigma) becomes the deterministic
row a.x >= mu + z(alpha) * sigma. The quantile z comes from an in-house
erf evaluation, and the resulting coverage can be validated by sampling.
"""

import numpy as np

from stocheval import (
    ChanceRow,
    ChanceSpec,
    NormalDist,
    normal_quantile,
    reformulate_individual_chance,
    solve_lp,
)

print("normal quantiles:", {a: round(normal_quantile(a), 4) for a in (0.5, 0.9, 0.95, 0.99)})

# Truck allocation: cover store A's demand N(100, 10^2) with 95% confidence
# and store B's demand N(150, 15^2) with 90% confidence, minimizing trucks.
spec = ChanceSpec(
    c=[1.0, 1.0],
    rows=[
        ChanceRow("store_a", [1.0, 0.0], ">=", NormalDist(100.0, 10.0), 0.95),
        ChanceRow("store_b", [0.0, 1.0], ">=", NormalDist(150.0, 15.0), 0.90),
    ],
)
model = reformulate_individual_chance(spec)
for c in model.constraints:
    print(f"  {c.name}: {c.lhs.terms} {c.sense} {c.rhs:.4f}")

solution = solve_lp(model)
print(f"optimal trucks: {solution.objective:.4f} "
      f"(x1 = {solution.values['x1']:.4f}, x2 = {solution.values['x2']:.4f})")

# Sample a million demands per store and confirm the promised service level.
rng = np.random.default_rng(7)
for row, var in ((spec.rows[0], "x1"), (spec.rows[1], "x2")):
    demand = rng.normal(row.dist.mu, row.dist.sigma, size=1_000_000)
    coverage = np.mean(solution.values[var] >= demand)
    print(f"  {row.name}: target {row.alpha:.2f}, sampled coverage {coverage:.4f}")
