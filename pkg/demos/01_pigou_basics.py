"""Walk through the classic two-road example.

One road costs its own congestion c1(x) = x, the other a flat c2 = 1.
Selfish routing sends the whole unit of demand down the congestible road
(equilibrium cost 1), while splitting it evenly is socially optimal
(cost 3/4), so the price of anarchy is 4/3.
"""

import json

from wardrop import (
    network_to_spec,
    opt_bruteforce,
    opt_parallel_marginal,
    pigou,
    poa,
    verify_equilibrium,
    wardrop_parallel,
)

net = pigou()
M = 1.0

eq = wardrop_parallel(net, M)
print(f"equilibrium flows: {eq.flow.path_flows}, common level {eq.lam}")
print(f"equilibrium (worst-case) social cost: {eq.cost}")
print(f"equilibrium residual: {eq.residual:.2e}")

opt = opt_parallel_marginal(net, M)
print(f"\noptimal flows: {opt.flow.path_flows}")
print(f"optimal social cost: {opt.cost}")

oracle = opt_bruteforce(net, M)
print(f"brute-force check: {oracle.cost} (error bound {oracle.resolution_bound:.1e})")

result = poa(net, M)
print(f"\nprice of anarchy at M={M}: {result.poa}  (= 4/3)")

# any other split is strictly worse for somebody on a used road
from wardrop import FlowProfile  # noqa: E402

bad = FlowProfile((0.5, 0.5), M)
print(f"splitting evenly is NOT an equilibrium: residual "
      f"{verify_equilibrium(net, bad).residual}")

print("\nwire format for this instance:")
print(json.dumps(network_to_spec(net), indent=2))
