"""
Ranking highway junctions and screening candidate sites
=======================================================

Load the bundled ring-and-radials network, rank every junction by the sum of
its degree, closeness and betweenness centrality, then build the candidate
pool from POIs, top-ranked junctions and provider sites.
"""

from chargeplan.datasets import build_synthetic_pool, synthetic_paths
from chargeplan.geodata import aggregate_freight_demand, load_flows, load_network
from chargeplan.netgraph import composite_rank

paths = synthetic_paths()
g = load_network(paths["network"])
print(f"{len(g.node_ids)} junctions, {g.n_arcs} arcs")

# the ten most central junctions
report = composite_rank(g)
print("rank  score   dc     cc     bc     node")
for r in report.top(10):
    print(f"{r.rank:>4}  {r.score:.3f}  {r.dc:.3f}  {r.cc:.3f}  {r.bc:.3f}  {r.node_id}")

# freight demand: mean truck flow per road segment start
demand = aggregate_freight_demand(load_flows(paths["flows"]), "truck")
print(f"\n{len(demand)} demand points, mean {sum(d.q for d in demand) / len(demand):.1f} veh/h")

# the full screening pipeline: POIs within the 500 m buffer, sites next to
# the top-ranked junctions, and provider sites, each tagged with the flow of
# its nearest demand point
pool = build_synthetic_pool()
print(f"\n{len(pool)} candidates:", pool.provenance())
print(f"share from POI data: {100 * pool.poi_share():.1f}%")
for s in pool.stations[:5]:
    print(f"  {s.site_id:<12} {s.source:<20} q = {s.q:6.1f} veh/h")
