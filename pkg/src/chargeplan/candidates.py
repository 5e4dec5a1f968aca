"""Candidate-site screening.

Four sources feed the pool: POIs that already host (or could host) a
station, sites generated around highly ranked junctions, sites chosen by a
service provider, and supermarkets for to-go piles. Each site then gets the
freight flow of its nearest demand point.
"""

from __future__ import annotations

import csv
import json
import logging
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DuplicateSiteId, InputError, MalformedFile, NoDemandData
from .geodata import (
    DemandPoint,
    GeoPoint,
    Poi,
    _float,
    _field,
    _point,
    distances_to,
    point_along,
    within_buffer,
)
from .netgraph import CentralityReport, HighwayGraph

log = logging.getLogger(__name__)

STATION_LABELS = ("fuel_station", "truck_stop", "parking_area")
TOGO_LABELS = ("supermarket",)
SOURCES = ("existing", "network_recommended", "provider_selected", "togo_poi")


@dataclass(frozen=True)
class CandidateSite:
    site_id: str
    kind: str  # "station" | "togo"
    source: str
    location: GeoPoint
    q: float = 0.0
    initial_scale: int = 0  # stations
    initial_piles: int = 0  # to-go

    def __post_init__(self):
        if self.kind not in ("station", "togo"):
            raise InputError(f"site {self.site_id}: unknown kind {self.kind!r}")
        if self.source not in SOURCES:
            raise InputError(f"site {self.site_id}: unknown source {self.source!r}")
        if (self.kind == "togo") != (self.source == "togo_poi"):
            raise InputError(f"site {self.site_id}: kind {self.kind} inconsistent with source {self.source}")
        if self.q < 0 or self.initial_scale < 0 or self.initial_piles < 0:
            raise InputError(f"site {self.site_id}: negative flow or initial size")


@dataclass(frozen=True)
class CandidatePool:
    stations: tuple[CandidateSite, ...] = ()
    togo: tuple[CandidateSite, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "stations", tuple(self.stations))
        object.__setattr__(self, "togo", tuple(self.togo))
        dup = [k for k, c in Counter(s.site_id for s in self.sites).items() if c > 1]
        if dup:
            raise DuplicateSiteId(f"duplicate site ids: {sorted(dup)}")
        if any(s.kind != "station" for s in self.stations) or any(s.kind != "togo" for s in self.togo):
            raise InputError("site kind does not match its pool list")

    @property
    def sites(self) -> tuple[CandidateSite, ...]:
        return self.stations + self.togo

    def __len__(self):
        return len(self.stations) + len(self.togo)

    def provenance(self) -> dict[str, int]:
        counts = Counter(s.source for s in self.sites)
        return {src: counts.get(src, 0) for src in SOURCES}

    def poi_share(self) -> float:
        """Fraction of the pool that came from POI data (existing + to-go)."""
        p = self.provenance()
        return (p["existing"] + p["togo_poi"]) / len(self) if len(self) else 0.0

    @classmethod
    def from_sites(cls, sites: Iterable[CandidateSite]) -> "CandidatePool":
        sites = list(sites)
        return cls(
            tuple(s for s in sites if s.kind == "station"),
            tuple(s for s in sites if s.kind == "togo"),
        )


def select_from_pois(pois: Sequence[Poi], g: HighwayGraph, radius: float = 500.0,
                     step_m: float = 100.0) -> CandidatePool:
    sites = []
    for poi in pois:
        if poi.label in STATION_LABELS:
            kind, source = "station", "existing"
        elif poi.label in TOGO_LABELS:
            kind, source = "togo", "togo_poi"
        else:
            continue
        if not within_buffer(poi.location, g, radius, step_m):
            continue
        sites.append(CandidateSite(f"poi-{poi.id}", kind, source, GeoPoint(*poi.location)))
    if not sites:
        log.warning("no POIs within %.0f m of the network", radius)
    return CandidatePool.from_sites(sites)


def _too_close(p, others, radius, mode):
    if not others:
        return False
    arr = np.asarray(others, dtype=float)
    return bool((distances_to(p, arr[:, 0], arr[:, 1], mode) <= radius).any())


def select_from_network(
    report: CentralityReport,
    g: HighwayGraph,
    k: int = 10,
    sites_per_node: int | Mapping[str, int] | Callable[[int], int] = 1,
    offset_m: float = 200.0,
    dedupe_radius: float = 250.0,
    existing: Iterable[CandidateSite] = (),
) -> CandidatePool:
    """Station candidates at and around the ``k`` best-ranked junctions.

    Each node contributes a site on the junction itself and, when
    ``sites_per_node`` asks for more, one site ``offset_m`` along each
    incident arc in arc-id order. A site is skipped when an existing
    candidate, or one generated for another node, lies within
    ``dedupe_radius``.
    """
    if k > g.n_nodes:
        raise InputError(f"k={k} exceeds the number of nodes ({g.n_nodes})")
    taken = [tuple(s.location) for s in existing]
    sites = []
    for row in report.top(k):
        nid = row.node_id
        if callable(sites_per_node):
            want = int(sites_per_node(g.degree(nid)))
        elif isinstance(sites_per_node, Mapping):
            want = int(sites_per_node.get(nid, 1))
        else:
            want = int(sites_per_node)
        points = [tuple(g.nodes[nid])]
        for arc in g.incident_arcs(nid):
            points.append(point_along(g, arc, nid, offset_m))
        mine = []
        for j, p in enumerate(points[: max(want, 0)]):
            if _too_close(p, taken, dedupe_radius, g.coordinate_mode):
                continue
            mine.append(p)
            sites.append(CandidateSite(f"net-{nid}-{j}", "station", "network_recommended", GeoPoint(*p)))
        # a node's own arm sites may sit closer than dedupe_radius to each other
        taken.extend(mine)
    return CandidatePool.from_sites(sites)


def nearest_demand(site_loc, demand: Sequence[DemandPoint], mode: str = "wgs84") -> DemandPoint:
    """Nearest demand point; exact ties go to the lowest demand id."""
    xs = [d.location[0] for d in demand]
    ys = [d.location[1] for d in demand]
    dist = distances_to(site_loc, xs, ys, mode)
    best = dist.min()
    tied = [demand[i] for i in np.flatnonzero(dist <= best + 1e-9)]
    return min(tied, key=lambda d: d.id)


def attach_demand(pool: CandidatePool, demand: Sequence[DemandPoint], mode: str = "wgs84") -> CandidatePool:
    if not demand:
        raise NoDemandData("no demand points to attach")
    return CandidatePool(
        tuple(replace(s, q=nearest_demand(s.location, demand, mode).q) for s in pool.stations),
        tuple(replace(s, q=nearest_demand(s.location, demand, mode).q) for s in pool.togo),
    )


def merge_pool(
    parts: Sequence[CandidatePool],
    provider_sites: Sequence[CandidateSite] = (),
    layout0: Mapping[str, int] | None = None,
) -> CandidatePool:
    """Union of partial pools and provider sites, with the horizon-0 layout applied.

    ``layout0`` maps site id to its current size: station scale for
    stations, installed piles for to-go sites.
    """
    sites = [s for part in parts for s in part.sites] + list(provider_sites)
    seen = set()
    for s in sites:
        if s.site_id in seen:
            raise DuplicateSiteId(f"site id {s.site_id} appears more than once")
        seen.add(s.site_id)
    layout0 = dict(layout0 or {})
    unknown = sorted(set(layout0) - seen)
    if unknown:
        raise InputError(f"layout refers to unknown sites: {unknown}")
    out = []
    for s in sites:
        size = int(layout0.get(s.site_id, 0))
        if s.kind == "station":
            out.append(replace(s, initial_scale=size, initial_piles=0))
        else:
            out.append(replace(s, initial_piles=size, initial_scale=0))
    return CandidatePool.from_sites(out)


def build_pool(
    g: HighwayGraph,
    pois: Sequence[Poi],
    demand: Sequence[DemandPoint],
    report: CentralityReport,
    provider_sites: Sequence[CandidateSite] = (),
    layout0: Mapping[str, int] | None = None,
    radius: float = 500.0,
    top_k: int = 10,
    sites_per_node=1,
    offset_m: float = 200.0,
    dedupe_radius: float = 250.0,
    step_m: float = 100.0,
) -> CandidatePool:
    """Whole screening pipeline: POIs, network sites, provider sites, demand."""
    from_pois = select_from_pois(pois, g, radius, step_m)
    kept_provider = []
    for s in provider_sites:
        if within_buffer(s.location, g, radius, step_m):
            kept_provider.append(s)
        else:
            log.warning("provider site %s is farther than %.0f m from the network; dropped", s.site_id, radius)
    from_net = select_from_network(
        report, g, top_k, sites_per_node, offset_m, dedupe_radius,
        existing=list(from_pois.stations) + kept_provider,
    )
    pool = merge_pool([from_pois, from_net], kept_provider, layout0)
    return attach_demand(pool, demand, g.coordinate_mode)


# -- files --------------------------------------------------------------------

def load_provider_sites(path, mode: str = "wgs84") -> list[CandidateSite]:
    path = Path(path)
    if not path.exists():
        raise MalformedFile(path, "file not found")
    out = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in ("site_id", "lon", "lat") if c not in (reader.fieldnames or [])]
        if missing:
            raise MalformedFile(path, f"header lacks {missing}", 1)
        for lineno, row in enumerate(reader, start=2):
            loc = _point(path, lineno, _float(path, lineno, row, "lon"), _float(path, lineno, row, "lat"), mode)
            out.append(CandidateSite(_field(path, lineno, row, "site_id"), "station", "provider_selected", loc))
    return out


def load_layout(path) -> dict[str, int]:
    """Read ``site_id, scale`` rows describing the existing facilities."""
    path = Path(path)
    if not path.exists():
        raise MalformedFile(path, "file not found")
    out = {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or not {"site_id", "scale"} <= set(reader.fieldnames):
            raise MalformedFile(path, "header must contain site_id and scale", 1)
        for lineno, row in enumerate(reader, start=2):
            sid = _field(path, lineno, row, "site_id")
            v = _float(path, lineno, row, "scale")
            if v < 0 or v != int(v):
                raise MalformedFile(path, f"scale must be a non-negative integer, got {v}", lineno)
            if sid in out:
                raise MalformedFile(path, f"duplicate site {sid}", lineno)
            out[sid] = int(v)
    return out


def pool_to_geojson(pool: CandidatePool) -> dict:
    feats = []
    for s in pool.sites:
        feats.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [s.location[0], s.location[1]]},
            "properties": {
                "site_id": s.site_id,
                "kind": s.kind,
                "source": s.source,
                "q": round(s.q, 6),
                "initial": s.initial_scale if s.kind == "station" else s.initial_piles,
            },
        })
    return {"type": "FeatureCollection", "features": feats}


def pool_from_geojson(path) -> CandidatePool:
    path = Path(path)
    if not path.exists():
        raise MalformedFile(path, "file not found")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise MalformedFile(path, f"invalid JSON: {exc.msg}", exc.lineno) from None
    sites = []
    for n, feat in enumerate(doc.get("features", [])):
        p = feat.get("properties") or {}
        try:
            x, y = feat["geometry"]["coordinates"][:2]
            kind = p["kind"]
            init = int(p.get("initial", 0))
            sites.append(CandidateSite(
                str(p["site_id"]), kind, p["source"], GeoPoint(float(x), float(y)), float(p.get("q", 0.0)),
                initial_scale=init if kind == "station" else 0,
                initial_piles=init if kind == "togo" else 0,
            ))
        except (KeyError, TypeError, ValueError, InputError) as exc:
            raise MalformedFile(path, f"feature {n}: {exc}") from None
    return CandidatePool.from_sites(sites)


def summary_rows(pool: CandidatePool) -> list[tuple]:
    """``source, kind, count`` rows plus a total line."""
    rows = []
    for src in SOURCES:
        kind = "togo" if src == "togo_poi" else "station"
        rows.append((src, kind, sum(1 for s in pool.sites if s.source == src)))
    rows.append(("total", "all", len(pool)))
    return rows

