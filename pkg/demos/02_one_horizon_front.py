"""
The cost/coverage trade-off for one horizon
===========================================

Optimise the first planning horizon of the fixture instance and look at the
Pareto front: every point is a layout that cannot be made cheaper without
losing coverage. The three selection rules pick different points from it.
"""

from chargeplan.datasets import synthetic_instance
from chargeplan.horizons import MAX_COVERAGE_LOOKAHEAD, MEDIAN_COVERAGE_LOOKAHEAD, select_solution
from chargeplan.nsga2 import NSGA2Params, evolve

inst = synthetic_instance()
prev = inst.initial_solution()
print(f"{len(inst.stations)} station sites, {len(inst.togo)} to-go sites")
print(f"horizon 0 coverage: {prev.coverage:.0f} veh/h")

# a smaller population than the default keeps this demo quick
params = NSGA2Params(pop_size=100, generations=100, seed=0)
front = evolve(inst, prev, params, k=1, gamma=inst.params.gamma_k[0])

print(f"\n{len(front)} non-dominated layouts (budget {inst.params.b_k[0]} MEUR)")
print(" cost MEUR   coverage   with look-ahead")
for s in front[:: max(1, len(front) // 12)]:
    print(f"{s.cost:10.3f} {s.coverage:10.1f} {s.coverage + s.lookahead_coverage:12.1f}")

for pol in (MAX_COVERAGE_LOOKAHEAD, MEDIAN_COVERAGE_LOOKAHEAD):
    pick = select_solution(front, pol)
    print(f"{pol.selection} rule: cost {pick.cost:.3f} MEUR, coverage {pick.coverage:.1f} veh/h")
