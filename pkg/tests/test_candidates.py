import json

import numpy as np
import pytest

from chargeplan.candidates import (
    CandidatePool,
    CandidateSite,
    attach_demand,
    build_pool,
    load_layout,
    merge_pool,
    nearest_demand,
    pool_from_geojson,
    pool_to_geojson,
    select_from_network,
    select_from_pois,
)
from chargeplan.datasets import build_synthetic_pool, synthetic_pool
from chargeplan.errors import DuplicateSiteId, InputError, MalformedFile, NoDemandData
from chargeplan.geodata import DemandPoint, GeoPoint, Poi, geo_distance, within_buffer
from chargeplan.netgraph import Arc, HighwayGraph, composite_rank, graph_from_edges


def _line_graph():
    # 10 km east-west planar highway
    return HighwayGraph({"a": (0.0, 0.0), "b": (10_000.0, 0.0)}, (Arc("e", "a", "b", 10_000.0),), "planar")


def _site(sid, x, y, kind="station", source="existing"):
    return CandidateSite(sid, kind, source, GeoPoint(x, y))


def test_poi_rules():
    g = _line_graph()
    pois = [
        Poi("1", "supermarket", GeoPoint(5000.0, 300.0)),
        Poi("2", "fuel_station", GeoPoint(5000.0, 2000.0)),
        Poi("3", "truck_stop", GeoPoint(1000.0, -450.0)),
        Poi("4", "other", GeoPoint(1000.0, 0.0)),
    ]
    pool = select_from_pois(pois, g, radius=500.0)
    assert [s.site_id for s in pool.togo] == ["poi-1"]
    assert [s.site_id for s in pool.stations] == ["poi-3"]
    assert pool.stations[0].source == "existing"


def test_poi_hand_tally():
    # 10 POIs inside the buffer with mixed labels, plus 3 outside
    g = _line_graph()
    labels = ["fuel_station", "truck_stop", "parking_area", "supermarket", "other",
              "supermarket", "fuel_station", "other", "parking_area", "supermarket"]
    pois = [Poi(f"in{i}", lab, GeoPoint(500.0 + 900 * i, (-1) ** i * 40.0 * i)) for i, lab in enumerate(labels)]
    pois += [Poi(f"out{i}", "fuel_station", GeoPoint(3000.0, 600.0 + 100 * i)) for i in range(3)]
    pool = select_from_pois(pois, g, radius=500.0)
    assert (len(pool.stations), len(pool.togo)) == (5, 3)


def test_network_sites_bound_and_dedupe():
    g = graph_from_edges(
        [(0, 1, 1000), (1, 2, 1000), (2, 3, 1000), (1, 4, 1000), (2, 5, 1000)],
        coords={0: (0, 0), 1: (1000, 0), 2: (2000, 0), 3: (3000, 0), 4: (1000, 1000), 5: (2000, 1000)},
    )
    rep = composite_rank(g)
    pool = select_from_network(rep, g, k=3, sites_per_node=2, offset_m=200.0, dedupe_radius=250.0)
    assert len(pool.stations) <= 3 * 2
    assert all(s.source == "network_recommended" for s in pool.stations)
    # an existing site right on node 1 suppresses the junction site there
    existing = [_site("poi-x", 1000.0, 10.0)]
    pool2 = select_from_network(rep, g, k=3, sites_per_node=1, existing=existing)
    assert "net-1-0" not in {s.site_id for s in pool2.stations}
    assert "net-2-0" in {s.site_id for s in pool2.stations}


def test_k_larger_than_graph():
    g = graph_from_edges([(0, 1), (1, 2)])
    with pytest.raises(InputError):
        select_from_network(composite_rank(g), g, k=4)


def test_fifteen_sites_near_ten_nodes():
    # ten hubs on a ring: five with four arms get two sites, five with three arms get one
    edges, coords = [], {}
    for h in range(10):
        coords[f"h{h}"] = (h * 10_000.0, 0.0)
        edges.append((f"h{h}", f"h{(h + 1) % 10}", 10_000.0))
        arms = 2 if h % 2 == 0 else 1
        for a in range(arms):
            leaf = f"l{h}_{a}"
            coords[leaf] = (h * 10_000.0, (a + 1) * 3000.0 * (1 if a == 0 else -1))
            edges.append((f"h{h}", leaf, 3000.0))
    g = graph_from_edges(edges, coords=coords)
    rep = composite_rank(g)
    top = [r.node_id for r in rep.top(10)]
    assert set(top) == {f"h{h}" for h in range(10)}
    pool = select_from_network(rep, g, k=10, sites_per_node=lambda deg: 2 if deg >= 4 else 1)
    assert len(pool.stations) == 15


def test_single_demand_point():
    pool = CandidatePool.from_sites([_site("a", 0, 0), _site("b", 5, 5, "togo", "togo_poi")])
    out = attach_demand(pool, [DemandPoint(0, GeoPoint(100.0, 100.0), 120.0)], "planar")
    assert [s.q for s in out.sites] == [120.0, 120.0]


def test_demand_tie_lower_id():
    d = [DemandPoint(3, GeoPoint(10.0, 0.0), 5.0), DemandPoint(1, GeoPoint(-10.0, 0.0), 9.0)]
    assert nearest_demand((0.0, 0.0), d, "planar").id == 1


def test_no_demand():
    with pytest.raises(NoDemandData):
        attach_demand(CandidatePool.from_sites([_site("a", 0, 0)]), [], "planar")


def test_nearest_matches_scan_oracle():
    rng = np.random.default_rng(2)
    demand = [
        DemandPoint(i, GeoPoint(float(rng.uniform(4.7, 5.1)), float(rng.uniform(52.3, 52.5))), float(rng.uniform(10, 200)))
        for i in range(40)
    ]
    sites = [_site(f"s{i}", float(rng.uniform(4.7, 5.1)), float(rng.uniform(52.3, 52.5))) for i in range(50)]
    pool = attach_demand(CandidatePool.from_sites(sites), demand)
    for s in pool.sites:
        best = None
        for d in demand:
            dist = geo_distance(s.location, d.location)
            if best is None or dist < best[0] or (dist == best[0] and d.id < best[1].id):
                best = (dist, d)
        assert s.q == best[1].q
        assert s.q in {d.q for d in demand}


def test_merge_duplicate_ids():
    pois = CandidatePool.from_sites([_site("poi-1", 0, 0)])
    with pytest.raises(DuplicateSiteId):
        merge_pool([pois], [CandidateSite("poi-1", "station", "provider_selected", GeoPoint(1, 1))])
    with pytest.raises(DuplicateSiteId):
        merge_pool([pois, pois])


def test_merge_empty_provider_and_layout():
    pois = CandidatePool.from_sites([_site("poi-1", 0, 0), _site("poi-2", 0, 1, "togo", "togo_poi")])
    assert merge_pool([pois]) == pois
    out = merge_pool([pois], layout0={"poi-1": 2, "poi-2": 3})
    assert out.stations[0].initial_scale == 2 and out.togo[0].initial_piles == 3
    with pytest.raises(InputError):
        merge_pool([pois], layout0={"nope": 1})


def test_site_validation():
    with pytest.raises(InputError):
        CandidateSite("x", "togo", "existing", GeoPoint(0, 0))
    with pytest.raises(InputError):
        CandidateSite("x", "station", "existing", GeoPoint(0, 0), q=-1.0)


def test_layout_file(tmp_path):
    p = tmp_path / "l.csv"
    p.write_text("site_id,scale\na,1\nb,1.5\n")
    with pytest.raises(MalformedFile) as exc:
        load_layout(p)
    assert exc.value.line == 3


def test_geojson_roundtrip(tmp_path):
    pool = synthetic_pool()
    p = tmp_path / "c.geojson"
    p.write_text(json.dumps(pool_to_geojson(pool)))
    assert pool_from_geojson(p) == pool


def test_fixture_pool():
    pool = build_synthetic_pool()
    assert len(pool) == 30
    assert pool.provenance() == {"existing": 9, "network_recommended": 6, "provider_selected": 5, "togo_poi": 10}
    # target share of POI-derived candidates: 63.4%
    assert pool.poi_share() == pytest.approx(0.634, abs=0.005)
    shipped = synthetic_pool()
    assert [s.site_id for s in shipped.sites] == [s.site_id for s in pool.sites]
    assert [s.q for s in shipped.sites] == pytest.approx([s.q for s in pool.sites], abs=1e-6)


def test_fixture_sites_in_buffer():
    from chargeplan.datasets import synthetic_paths
    from chargeplan.geodata import load_network

    g = load_network(synthetic_paths()["network"])
    assert all(within_buffer(s.location, g, 500.0) for s in synthetic_pool().sites)


def test_far_provider_site_dropped(caplog):
    g = _line_graph()
    demand = [DemandPoint(0, GeoPoint(5000.0, 0.0), 50.0)]
    far = CandidateSite("prov-far", "station", "provider_selected", GeoPoint(5000.0, 5000.0))
    near = CandidateSite("prov-near", "station", "provider_selected", GeoPoint(6000.0, 100.0))
    pool = build_pool(g, [], demand, composite_rank(g), provider_sites=[far, near], top_k=0)
    assert [s.site_id for s in pool.sites] == ["prov-near"]
    assert "prov-far" in caplog.text
