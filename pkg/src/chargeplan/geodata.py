"""Input ingestion: highway network, freight flow records and POIs.

Also hosts the distance primitives used throughout the pipeline. In
``wgs84`` mode coordinates are (lon, lat) degrees and distances are
great-circle metres; in ``planar`` mode coordinates are already metres.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .errors import DanglingArc, EmptySelection, InputError, MalformedFile
from .netgraph import Arc, HighwayGraph

log = logging.getLogger(__name__)

EARTH_RADIUS_M = 6_371_000.0
VEHICLE_CLASSES = ("all", "truck")
POI_LABELS = ("fuel_station", "truck_stop", "parking_area", "supermarket", "other")

_LABEL_ALIASES = {
    "fuel": "fuel_station",
    "gas_station": "fuel_station",
    "petrol_station": "fuel_station",
    "parking": "parking_area",
    "rest_area": "parking_area",
    "truckstop": "truck_stop",
}


class GeoPoint(NamedTuple):
    lon: float
    lat: float


def check_wgs84(p) -> GeoPoint:
    lon, lat = float(p[0]), float(p[1])
    if not (math.isfinite(lon) and math.isfinite(lat)):
        raise InputError(f"non-finite coordinate {p!r}")
    if not (-180.0 <= lon <= 180.0 and -90.0 <= lat <= 90.0):
        raise InputError(f"coordinate out of WGS84 range: lon={lon}, lat={lat}")
    return GeoPoint(lon, lat)


@dataclass(frozen=True)
class FlowRecord:
    route_id: str
    segment_start: GeoPoint
    period: str
    flow: float
    speed: float
    vehicle_class: str
    date: str = ""

    def __post_init__(self):
        for name in ("flow", "speed"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise InputError(f"{name} must be finite and non-negative, got {v}")
        if self.vehicle_class not in VEHICLE_CLASSES:
            raise InputError(f"unknown vehicle class {self.vehicle_class!r}")


@dataclass(frozen=True)
class DemandPoint:
    id: int
    location: GeoPoint
    q: float  # mean freight flow, veh/h


@dataclass(frozen=True)
class Poi:
    id: str
    label: str
    location: GeoPoint


def normalize_label(raw: str) -> str:
    key = "_".join(str(raw).strip().lower().replace("-", " ").split())
    key = _LABEL_ALIASES.get(key, key)
    return key if key in POI_LABELS else "other"


# -- distances ----------------------------------------------------------------

def geo_distance(a, b, mode: str = "wgs84") -> float:
    """Distance in metres; haversine for WGS84 points, Euclidean for planar."""
    if mode == "planar":
        return math.hypot(b[0] - a[0], b[1] - a[1])
    lon1, lat1, lon2, lat2 = map(math.radians, (a[0], a[1], b[0], b[1]))
    h = (
        math.sin((lat2 - lat1) / 2) ** 2
        + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    )
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def distances_to(p, xs, ys, mode: str = "wgs84") -> np.ndarray:
    """Vectorised ``geo_distance`` from one point to many."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if mode == "planar":
        return np.hypot(xs - p[0], ys - p[1])
    lon1, lat1 = math.radians(p[0]), math.radians(p[1])
    lon2, lat2 = np.radians(xs), np.radians(ys)
    h = (
        np.sin((lat2 - lat1) / 2) ** 2
        + math.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2
    )
    return 2 * EARTH_RADIUS_M * np.arcsin(np.minimum(1.0, np.sqrt(h)))


def pairwise_distances(points, mode: str = "wgs84") -> np.ndarray:
    pts = np.asarray([(p[0], p[1]) for p in points], dtype=float).reshape(-1, 2)
    out = np.zeros((len(pts), len(pts)))
    for i, p in enumerate(pts):
        out[i] = distances_to(p, pts[:, 0], pts[:, 1], mode)
    return np.minimum(out, out.T)


def arc_geometry(g: HighwayGraph, arc: Arc) -> list[tuple]:
    pts = list(arc.polyline) if arc.polyline else []
    start, end = tuple(g.nodes[arc.u]), tuple(g.nodes[arc.v])
    if not pts or tuple(pts[0]) != start:
        pts.insert(0, start)
    if tuple(pts[-1]) != end:
        pts.append(end)
    return [tuple(p) for p in pts]


def point_along(g: HighwayGraph, arc: Arc, from_node: str, offset_m: float):
    """Point ``offset_m`` metres along ``arc`` starting at ``from_node``.

    Clamped to the far end when the arc is shorter than the offset.
    """
    pts = arc_geometry(g, arc)
    if from_node == arc.v:
        pts = pts[::-1]
    remaining = offset_m
    for a, b in zip(pts, pts[1:]):
        seg = geo_distance(a, b, g.coordinate_mode)
        if seg >= remaining and seg > 0:
            t = remaining / seg
            return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
        remaining -= seg
    return pts[-1]


def network_samples(g: HighwayGraph, step_m: float = 100.0) -> np.ndarray:
    """Node coordinates plus arc points densified at most ``step_m`` apart."""
    key = ("samples", float(step_m))
    if key in g._cache:
        return g._cache[key]
    out = [tuple(g.nodes[n]) for n in g.node_ids]
    for arc in g.arcs:
        pts = arc_geometry(g, arc)
        for a, b in zip(pts, pts[1:]):
            seg = geo_distance(a, b, g.coordinate_mode)
            m = max(1, math.ceil(seg / step_m))
            for t in np.arange(1, m) / m:
                out.append((a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))
            out.append(b)
    arr = np.asarray(out, dtype=float)
    g._cache[key] = arr
    return arr


def distance_to_network(p, g: HighwayGraph, step_m: float = 100.0) -> float:
    s = network_samples(g, step_m)
    return float(distances_to(p, s[:, 0], s[:, 1], g.coordinate_mode).min())


def within_buffer(p, g: HighwayGraph, radius: float, step_m: float = 100.0) -> bool:
    if radius <= 0:
        raise ValueError("buffer radius must be positive")
    return distance_to_network(p, g, step_m) <= radius


# -- demand -------------------------------------------------------------------

def aggregate_freight_demand(
    records: Iterable[FlowRecord],
    class_filter: str = "truck",
    window: Iterable[str] | None = None,
) -> list[DemandPoint]:
    """Average flow per distinct segment start over the selected records.

    ``window`` restricts to the given period labels; ``None`` keeps all.
    Demand point ids follow the (lon, lat) order of their locations so the
    result does not depend on record order.
    """
    periods = None if window is None else set(window)
    groups: dict[tuple, list[float]] = {}
    for r in records:
        if r.vehicle_class != class_filter:
            continue
        if periods is not None and r.period not in periods:
            continue
        groups.setdefault((r.segment_start[0], r.segment_start[1]), []).append(r.flow)
    if not groups:
        raise EmptySelection(
            f"no flow records match class {class_filter!r}"
            + ("" if periods is None else f" and periods {sorted(periods)}")
        )
    return [
        DemandPoint(i, GeoPoint(*loc), math.fsum(flows) / len(flows))
        for i, (loc, flows) in enumerate(sorted(groups.items()))
    ]


# -- file loaders -------------------------------------------------------------

def _float(path, line, row, key):
    try:
        v = float(row[key])
    except KeyError:
        raise MalformedFile(path, f"missing column {key!r}", line) from None
    except (TypeError, ValueError):
        raise MalformedFile(path, f"bad number in column {key!r}: {row.get(key)!r}", line) from None
    if not math.isfinite(v):
        raise MalformedFile(path, f"non-finite value in column {key!r}", line)
    return v


def _field(path, line, row, key):
    v = row.get(key)
    if v is None or str(v).strip() == "":
        raise MalformedFile(path, f"missing value for {key!r}", line)
    return str(v).strip()


def _point(path, line, x, y, mode):
    if mode == "planar":
        return GeoPoint(x, y)
    try:
        return check_wgs84((x, y))
    except InputError as exc:
        raise MalformedFile(path, str(exc), line) from None


def _parse_polyline(path, line, text, mode):
    pts = []
    for chunk in text.split(";"):
        parts = chunk.split()
        if len(parts) != 2:
            raise MalformedFile(path, f"bad polyline vertex {chunk!r}", line)
        try:
            pts.append(_point(path, line, float(parts[0]), float(parts[1]), mode))
        except ValueError:
            raise MalformedFile(path, f"bad polyline vertex {chunk!r}", line) from None
    return tuple(pts)


def _is_geojson(path: Path) -> bool:
    return path.suffix.lower() in (".geojson", ".json")


def _read_json(path: Path):
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise MalformedFile(path, f"invalid JSON: {exc.msg}", exc.lineno) from None


def _build_graph(path, nodes, arcs, mode):
    try:
        return HighwayGraph(nodes, tuple(arcs), mode)
    except DanglingArc:
        raise
    except InputError as exc:
        raise MalformedFile(path, str(exc)) from None


def load_network(path) -> HighwayGraph:
    """Read a network from sectioned delimited text or GeoJSON."""
    path = Path(path)
    if not path.exists():
        raise MalformedFile(path, "file not found")
    if _is_geojson(path):
        return _load_network_geojson(path)

    mode = "wgs84"
    sections: dict[str, list[tuple[int, list[str]]]] = {"nodes": [], "arcs": []}
    current = None
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            first = row[0].strip()
            if first.startswith("#"):
                text = ",".join(row).lstrip("#").strip()
                if ":" in text:
                    k, v = (s.strip() for s in text.split(":", 1))
                    if k == "coordinate_mode":
                        if v not in ("wgs84", "planar"):
                            raise MalformedFile(path, f"unknown coordinate_mode {v!r}", lineno)
                        mode = v
                continue
            if first.startswith("[") and first.endswith("]"):
                current = first[1:-1].strip().lower()
                if current not in sections:
                    raise MalformedFile(path, f"unknown section {first}", lineno)
                continue
            if current is None:
                raise MalformedFile(path, "data before a [nodes] or [arcs] section", lineno)
            sections[current].append((lineno, [c.strip() for c in row]))

    def rows(name, required):
        entries = sections[name]
        if not entries:
            raise MalformedFile(path, f"missing or empty [{name}] section")
        header_line, header = entries[0]
        missing = [c for c in required if c not in header]
        if missing:
            raise MalformedFile(path, f"[{name}] header lacks {missing}", header_line)
        for lineno, values in entries[1:]:
            if len(values) > len(header):
                raise MalformedFile(path, "too many fields", lineno)
            yield lineno, dict(zip(header, values))

    nodes = {}
    for lineno, row in rows("nodes", ("node_id", "lon", "lat")):
        nid = _field(path, lineno, row, "node_id")
        if nid in nodes:
            raise MalformedFile(path, f"duplicate node {nid}", lineno)
        nodes[nid] = _point(
            path, lineno, _float(path, lineno, row, "lon"), _float(path, lineno, row, "lat"), mode
        )
    arcs = []
    for lineno, row in rows("arcs", ("arc_id", "from_node", "to_node", "length_m")):
        u, v = _field(path, lineno, row, "from_node"), _field(path, lineno, row, "to_node")
        if u == v:
            raise DanglingArc(f"{path}:{lineno}: arc is a self-loop on node {u}")
        for end in (u, v):
            if end not in nodes:
                raise DanglingArc(f"{path}:{lineno}: arc references missing node {end}")
        poly = row.get("polyline") or ""
        polyline = _parse_polyline(path, lineno, poly, mode) if poly.strip() else None
        if (row.get("length_m") or "").strip():
            length = _float(path, lineno, row, "length_m")
        else:
            # blank length: measure the geometry
            pts = polyline or (nodes[u], nodes[v])
            length = sum(geo_distance(a, b, mode) for a, b in zip(pts, pts[1:]))
        if length <= 0:
            raise MalformedFile(path, f"arc length must be positive, got {length}", lineno)
        arcs.append(Arc(_field(path, lineno, row, "arc_id"), u, v, length, polyline))
    return _build_graph(path, nodes, arcs, mode)


def _load_network_geojson(path: Path) -> HighwayGraph:
    doc = _read_json(path)
    if doc.get("type") != "FeatureCollection":
        raise MalformedFile(path, "expected a GeoJSON FeatureCollection")
    mode = doc.get("coordinate_mode", "wgs84")
    if mode not in ("wgs84", "planar"):
        raise MalformedFile(path, f"unknown coordinate_mode {mode!r}")
    nodes, lines = {}, []
    for n, feat in enumerate(doc.get("features", [])):
        geom = feat.get("geometry") or {}
        props = feat.get("properties") or {}
        where = f"feature {n}"
        if geom.get("type") == "Point":
            if "node_id" not in props:
                raise MalformedFile(path, f"{where}: Point without node_id")
            x, y = geom["coordinates"][:2]
            nodes[str(props["node_id"])] = _point(path, None, float(x), float(y), mode)
        elif geom.get("type") == "LineString":
            for key in ("arc_id", "from_node", "to_node"):
                if key not in props:
                    raise MalformedFile(path, f"{where}: LineString without {key}")
            lines.append((props, geom["coordinates"]))
        else:
            raise MalformedFile(path, f"{where}: unsupported geometry {geom.get('type')!r}")
    arcs = []
    for props, coords in lines:
        u, v = str(props["from_node"]), str(props["to_node"])
        if u == v:
            raise DanglingArc(f"{path}: arc {props['arc_id']} is a self-loop on node {u}")
        for end in (u, v):
            if end not in nodes:
                raise DanglingArc(f"{path}: arc {props['arc_id']} references missing node {end}")
        polyline = tuple(_point(path, None, float(c[0]), float(c[1]), mode) for c in coords)
        if "length_m" in props:
            length = float(props["length_m"])
        else:
            length = sum(geo_distance(a, b, mode) for a, b in zip(polyline, polyline[1:]))
        if not length > 0:
            raise MalformedFile(path, f"arc {props['arc_id']} has non-positive length")
        arcs.append(Arc(str(props["arc_id"]), u, v, length, polyline))
    return _build_graph(path, nodes, arcs, mode)


def load_flows(path, mode: str = "wgs84") -> list[FlowRecord]:
    path = Path(path)
    if not path.exists():
        raise MalformedFile(path, "file not found")
    required = ("date", "period", "route_id", "lon", "lat", "flow", "speed", "vehicle_class")
    out = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in required if c not in (reader.fieldnames or [])]
        if missing:
            raise MalformedFile(path, f"header lacks {missing}", 1)
        for lineno, row in enumerate(reader, start=2):
            flow = _float(path, lineno, row, "flow")
            speed = _float(path, lineno, row, "speed")
            if flow < 0 or speed < 0:
                raise MalformedFile(path, "flow and speed must be non-negative", lineno)
            vclass = _field(path, lineno, row, "vehicle_class").lower()
            if vclass not in VEHICLE_CLASSES:
                raise MalformedFile(path, f"unknown vehicle_class {vclass!r}", lineno)
            loc = _point(
                path, lineno, _float(path, lineno, row, "lon"), _float(path, lineno, row, "lat"), mode
            )
            out.append(
                FlowRecord(
                    route_id=_field(path, lineno, row, "route_id"),
                    segment_start=loc,
                    period=_field(path, lineno, row, "period"),
                    flow=flow,
                    speed=speed,
                    vehicle_class=vclass,
                    date=row.get("date", "").strip(),
                )
            )
    return out


def load_pois(path, mode: str = "wgs84") -> list[Poi]:
    path = Path(path)
    if not path.exists():
        raise MalformedFile(path, "file not found")
    out = []
    if _is_geojson(path):
        doc = _read_json(path)
        for n, feat in enumerate(doc.get("features", [])):
            props = feat.get("properties") or {}
            geom = feat.get("geometry") or {}
            if geom.get("type") != "Point" or "id" not in props or "label" not in props:
                raise MalformedFile(path, f"feature {n}: need Point geometry with id and label")
            x, y = geom["coordinates"][:2]
            out.append(
                Poi(str(props["id"]), normalize_label(props["label"]),
                    _point(path, None, float(x), float(y), mode))
            )
        return out
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in ("id", "label", "lon", "lat") if c not in (reader.fieldnames or [])]
        if missing:
            raise MalformedFile(path, f"header lacks {missing}", 1)
        for lineno, row in enumerate(reader, start=2):
            loc = _point(
                path, lineno, _float(path, lineno, row, "lon"), _float(path, lineno, row, "lat"), mode
            )
            out.append(Poi(_field(path, lineno, row, "id"), normalize_label(row["label"]), loc))
    return out
