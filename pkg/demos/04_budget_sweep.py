"""
How much does a bigger budget buy?
==================================

Multiply every horizon's budget by a factor theta and re-run scenario 1.
Coverage keeps rising with money, but each extra step buys less than the
one before it once the busiest corridors are served.
"""

from chargeplan.datasets import synthetic_instance
from chargeplan.horizons import PAPER_THETAS, sensitivity_sweep
from chargeplan.nsga2 import NSGA2Params

rows = sensitivity_sweep(
    synthetic_instance(), None, "scenario1", PAPER_THETAS, seed=[0, 1, 2],
    params=NSGA2Params(pop_size=100, generations=150),
)

print("theta  " + "  ".join(f"   h{k}" for k in range(1, 6)) + "   cost MEUR  cost %  coverage %")
prev = None
for r in rows:
    cov = "  ".join(f"{c:5.0f}" for c in r.coverages)
    gain = "" if prev is None else f"  (+{r.coverages[-1] - prev:.0f})"
    print(f"{r.theta:5.1f}  {cov}  {r.total_cost:9.3f}  {r.cost_pct:6.1f}  {r.coverage_pct:9.1f}{gain}")
    prev = r.coverages[-1]
