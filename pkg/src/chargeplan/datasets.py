"""Bundled synthetic Amsterdam-like fixture.

A 26-junction ring-and-radial motorway network with a week of hourly
freight counts, POIs, provider sites and an existing layout. The screening
pipeline turns it into 30 candidates (20 station sites, 10 to-go sites).
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .candidates import CandidatePool, build_pool, load_layout, load_provider_sites, pool_from_geojson
from .geodata import aggregate_freight_demand, load_flows, load_network, load_pois
from .netgraph import composite_rank
from .planmodel import InstanceParams, PlanningInstance

SCREENING = {
    "radius": 500.0,
    "top_k": 6,
    "sites_per_node": 1,
    "offset_m": 200.0,
    "dedupe_radius": 250.0,
    "step_m": 100.0,
}


def synthetic_dir() -> Path:
    return Path(str(resources.files("chargeplan.data").joinpath("synthetic")))


def synthetic_paths() -> dict[str, Path]:
    d = synthetic_dir()
    return {
        "network": d / "network.csv",
        "flows": d / "flows.csv",
        "pois": d / "pois.csv",
        "provider_sites": d / "provider_sites.csv",
        "layout0": d / "layout0.csv",
        "candidates": d / "candidates.geojson",
        "config": d / "config.yaml",
    }


def build_synthetic_pool(directory=None) -> CandidatePool:
    """Run the full screening pipeline on the raw fixture files."""
    d = Path(directory) if directory else synthetic_dir()
    g = load_network(d / "network.csv")
    demand = aggregate_freight_demand(load_flows(d / "flows.csv"), "truck")
    report = composite_rank(g)
    s = SCREENING
    return build_pool(
        g, load_pois(d / "pois.csv"), demand, report,
        provider_sites=load_provider_sites(d / "provider_sites.csv"),
        layout0=load_layout(d / "layout0.csv"),
        radius=s["radius"], top_k=s["top_k"], sites_per_node=s["sites_per_node"],
        offset_m=s["offset_m"], dedupe_radius=s["dedupe_radius"], step_m=s["step_m"],
    )


def synthetic_pool() -> CandidatePool:
    """The pre-built 30-site candidate pool (same as ``build_synthetic_pool()``)."""
    return pool_from_geojson(synthetic_paths()["candidates"])


def synthetic_instance(params: InstanceParams | None = None) -> PlanningInstance:
    """Planning instance on the fixture pool with the default parameters."""
    return PlanningInstance.from_pool(synthetic_pool(), params or InstanceParams.paper_defaults())
