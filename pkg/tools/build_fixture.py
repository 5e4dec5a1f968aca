"""Regenerate the bundled synthetic highway fixture.

Writes network, flow, POI, provider-site and layout files, the derived
candidate pool and a run config into ``src/chargeplan/data/synthetic``.
Output is fully determined by the seed below.

    python tools/build_fixture.py
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "chargeplan" / "data" / "synthetic"
SEED = 20220627
CENTER = (4.895, 52.370)
M_PER_DEG_LAT = 111_195.0
M_PER_DEG_LON = M_PER_DEG_LAT * math.cos(math.radians(CENTER[1]))

CONFIG = """\
# Run configuration for the bundled synthetic fixture.
inputs:
  network: network.csv
  flows: flows.csv
  pois: pois.csv
  provider_sites: provider_sites.csv
  layout0: layout0.csv
demand:
  vehicle_class: truck
screening:
  radius_m: 500
  top_k: 6
  sites_per_node: 1
  offset_m: 200
  dedupe_radius_m: 250
  step_m: 100
algorithm:
  pop_size: 500
  generations: 300
  pc: 0.9
  pm: 0.1
  seed: 0
policies: [scenario1, scenario2, scenario3]
thetas: [0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6]
output_dir: runs
"""


def lonlat(east_m, north_m):
    return (round(CENTER[0] + east_m / M_PER_DEG_LON, 6), round(CENTER[1] + north_m / M_PER_DEG_LAT, 6))


def polar(r_km, angle_deg):
    a = math.radians(angle_deg)
    return lonlat(r_km * 1000 * math.cos(a), r_km * 1000 * math.sin(a))


def haversine(a, b):
    lon1, lat1, lon2, lat2 = map(math.radians, (a[0], a[1], b[0], b[1]))
    h = math.sin((lat2 - lat1) / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    return 2 * 6_371_000.0 * math.asin(math.sqrt(h))


def build_network():
    nodes = {}
    # ring road, 10 junctions at 6 km
    for i in range(10):
        nodes[str(i + 1)] = polar(6.0, 90 - 36 * i)
    # six radial motorways leaving ring junctions 1, 3, 4, 6, 8, 9 with two junctions each
    radials = {1: 80, 3: 20, 4: -15, 6: -95, 8: -160, 9: 160}
    nid = 11
    radial_nodes = {}
    for ring, ang in radials.items():
        inner, outer = str(nid), str(nid + 1)
        nodes[inner] = polar(12.0, ang)
        nodes[outer] = polar(19.0, ang + 4)
        radial_nodes[ring] = (inner, outer)
        nid += 2
    # outer connectors: south arc between radials of junctions 4 and 8, west link between 8 and 9
    nodes["23"] = polar(13.5, -60)
    nodes["24"] = polar(13.0, -125)
    nodes["25"] = polar(12.5, 180)
    nodes["26"] = polar(11.0, 45)

    arcs = []

    def add(u, v, bend=0.0):
        a, b = nodes[u], nodes[v]
        # gently bent polyline through an offset midpoint
        mx, my = (a[0] + b[0]) / 2, (a[1] + b[1]) / 2
        dx, dy = (b[0] - a[0]) * M_PER_DEG_LON, (b[1] - a[1]) * M_PER_DEG_LAT
        norm = math.hypot(dx, dy) or 1.0
        off = bend * norm
        mid = (round(mx - dy / norm * off / M_PER_DEG_LON, 6), round(my + dx / norm * off / M_PER_DEG_LAT, 6))
        poly = [a, mid, b]
        length = sum(haversine(p, q) for p, q in zip(poly, poly[1:]))
        arcs.append((f"a{len(arcs) + 1}", u, v, round(length, 1), poly))

    for i in range(10):
        add(str(i + 1), str((i + 1) % 10 + 1), bend=0.08)
    for ring, (inner, outer) in radial_nodes.items():
        add(str(ring), inner, bend=0.02)
        add(inner, outer, bend=-0.03)
    add(radial_nodes[4][0], "23", 0.05)
    add("23", radial_nodes[6][0], 0.05)
    add(radial_nodes[6][0], "24", 0.05)
    add("24", radial_nodes[8][0], 0.05)
    add(radial_nodes[8][0], "25", 0.04)
    add("25", radial_nodes[9][0], 0.04)
    add(radial_nodes[1][0], "26", 0.03)
    add("26", radial_nodes[3][0], 0.03)
    return nodes, arcs


def sample_along(poly, step):
    pts = []
    for a, b in zip(poly, poly[1:]):
        d = haversine(a, b)
        m = max(1, int(d // step))
        for t in np.arange(m) / m:
            pts.append((a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))
    return pts


def offset_point(p, east_m, north_m):
    return (round(p[0] + east_m / M_PER_DEG_LON, 6), round(p[1] + north_m / M_PER_DEG_LAT, 6))


def main():
    rng = np.random.default_rng(SEED)
    OUT.mkdir(parents=True, exist_ok=True)
    nodes, arcs = build_network()

    with (OUT / "network.csv").open("w", newline="") as fh:
        fh.write("# coordinate_mode: wgs84\n[nodes]\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id", "lon", "lat"])
        for k in sorted(nodes, key=int):
            w.writerow([k, *nodes[k]])
        fh.write("[arcs]\n")
        w.writerow(["arc_id", "from_node", "to_node", "length_m", "polyline"])
        for arc_id, u, v, length, poly in arcs:
            w.writerow([arc_id, u, v, length, ";".join(f"{x} {y}" for x, y in poly)])

    # segment starts every ~2.5 km; heavy freight on most of the ring, two busy
    # radial corridors, light traffic elsewhere
    heavy = {f"a{i}" for i in (1, 3, 4, 5, 6, 7, 8)}
    corridors = {"a17", "a25"}
    points = []
    for arc_id, u, v, length, poly in arcs:
        base = 115.0 if arc_id in heavy else 75.0 if arc_id in corridors else 38.0
        for p in sample_along(poly, 2500.0)[1:]:
            q = base * rng.lognormal(0.0, 0.3)
            points.append((f"R{arc_id}", (round(p[0], 6), round(p[1], 6)), q))
    hours = np.arange(24)
    profile = 0.55 + 0.45 * np.exp(-((hours - 11) / 5.0) ** 2)
    profile = profile / profile.mean()
    dates = [f"2022-06-{d}" for d in (27, 28, 29, 30)] + ["2022-07-01", "2022-07-02", "2022-07-03"]
    day_factor = [1.08, 1.1, 1.1, 1.08, 1.04, 0.82, 0.78]
    with (OUT / "flows.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "period", "route_id", "lon", "lat", "flow", "speed", "vehicle_class"])
        for route, (x, y), q in points:
            for d, date in enumerate(dates):
                for h in hours:
                    truck = max(0.0, q * profile[h] * day_factor[d] * rng.normal(1.0, 0.08))
                    total = truck * rng.uniform(6.0, 9.0)
                    speed = rng.uniform(70, 105)
                    period = f"{h:02d}:00-{(h + 1) % 24:02d}:00"
                    w.writerow([date, period, route, x, y, round(total, 1), round(speed, 1), "all"])
                    w.writerow([date, period, route, x, y, round(truck, 1), round(speed - 8, 1), "truck"])

    # POIs: station-type POIs, supermarkets, distractors and far-away decoys
    arc_by_id = {a[0]: a for a in arcs}

    def near_arc(arc_id, t, side_m):
        poly = arc_by_id[arc_id][4]
        a, b = (poly[0], poly[1]) if t < 0.5 else (poly[1], poly[2])
        tt = (t * 2) % 1.0 if t != 0.5 else 0.0
        p = (a[0] + tt * (b[0] - a[0]), a[1] + tt * (b[1] - a[1]))
        dx, dy = (b[0] - a[0]) * M_PER_DEG_LON, (b[1] - a[1]) * M_PER_DEG_LAT
        norm = math.hypot(dx, dy)
        return offset_point(p, -dy / norm * side_m, dx / norm * side_m)

    station_pois = [
        ("fuel station", "a1", 0.5), ("truck stop", "a3", 0.3), ("parking area", "a5", 0.6),
        ("fuel station", "a7", 0.4), ("fuel station", "a9", 0.7), ("Truck Stop", "a12", 0.5),
        ("parking area", "a16", 0.5), ("fuel", "a19", 0.5), ("fuel station", "a24", 0.4),
    ]
    supermarkets = [
        ("a2", 0.5), ("a4", 0.6), ("a6", 0.3), ("a8", 0.5), ("a10", 0.6),
        ("a13", 0.4), ("a15", 0.6), ("a20", 0.5), ("a23", 0.5), ("a26", 0.4),
    ]
    pois = []
    for n, (label, arc_id, t) in enumerate(station_pois):
        pois.append((f"P{n + 1}", label, near_arc(arc_id, t, rng.uniform(60, 380))))
    for n, (arc_id, t) in enumerate(supermarkets):
        pois.append((f"S{n + 1}", "supermarket", near_arc(arc_id, t, rng.uniform(80, 420))))
    for n, (label, arc_id, t, side) in enumerate([
        ("fuel station", "a11", 0.5, 1800.0), ("supermarket", "a14", 0.5, 2600.0),
        ("restaurant", "a2", 0.2, 150.0), ("hotel", "a18", 0.5, 300.0), ("supermarket", "a21", 0.3, 950.0),
    ]):
        pois.append((f"X{n + 1}", label, near_arc(arc_id, t, side)))
    with (OUT / "pois.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "label", "lon", "lat"])
        for pid, label, (x, y) in pois:
            w.writerow([pid, label, x, y])

    provider = [("a17", 0.5), ("a14", 0.6), ("a22", 0.5), ("a25", 0.6), ("a27", 0.5)]
    with (OUT / "provider_sites.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["site_id", "lon", "lat"])
        for n, (arc_id, t) in enumerate(provider):
            w.writerow([f"prov-{n + 1}", *near_arc(arc_id, t, rng.uniform(50, 250))])

    with (OUT / "layout0.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["site_id", "scale"])
        for sid, scale in (("poi-P1", 1), ("poi-P3", 2), ("poi-P5", 1), ("poi-P8", 1)):
            w.writerow([sid, scale])

    # derived candidate pool, produced with the library's own pipeline
    from chargeplan.datasets import build_synthetic_pool
    from chargeplan.candidates import pool_to_geojson

    pool = build_synthetic_pool(OUT)
    (OUT / "candidates.geojson").write_text(json.dumps(pool_to_geojson(pool), indent=1) + "\n")
    (OUT / "config.yaml").write_text(CONFIG)
    print(f"{len(pool)} candidates: {pool.provenance()}")


if __name__ == "__main__":
    main()
