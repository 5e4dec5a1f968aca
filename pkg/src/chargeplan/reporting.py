"""Fixed-format output tables, GeoJSON overlays and run summaries.

Every numeric field is written with a fixed number of decimals (costs with
3 in MEUR, coverage as whole veh/h) so reruns produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Mapping, Sequence

from .errors import InputError, MalformedFile
from .horizons import PlanTimeline, SweepRow
from .netgraph import CentralityReport
from .planmodel import HorizonSolution, PlanningInstance


def fmt_cost(v: float) -> str:
    return f"{v:.3f}"


def fmt_cov(v: float) -> str:
    return f"{v:.0f}"


def csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def centrality_csv(report: CentralityReport) -> str:
    rows = [
        (rank, f"{score:.6f}", f"{dc:.6f}", f"{cc:.6f}", f"{bc:.6f}", nid)
        for rank, score, dc, cc, bc, nid in report.table()
    ]
    return csv_text(["rank", "score", "dc", "cc", "bc", "node_id"], rows)


def front_csv(front: Sequence[HorizonSolution]) -> str:
    rows = [
        (
            n + 1,
            fmt_cost(s.cost),
            fmt_cov(s.coverage),
            fmt_cov(s.lookahead_coverage),
            " ".join(map(str, s.x)),
            " ".join(map(str, s.y)),
        )
        for n, s in enumerate(front)
    ]
    return csv_text(["solution_id", "cost_MEUR", "coverage_vehh", "lookahead_coverage", "x", "y"], rows)


TIMELINE_HEADER = [
    "horizon", "cost_MEUR", "coverage_vehh", "stations", "togo_sites", "piles", "new_stations", "new_togo",
    "x", "y",
]


def timeline_csv(tl: PlanTimeline) -> str:
    rows = [
        (
            e.k, fmt_cost(e.cost), fmt_cov(e.coverage), e.stations, e.togo, e.piles,
            e.new_stations, e.new_togo, " ".join(map(str, e.solution.x)), " ".join(map(str, e.solution.y)),
        )
        for e in tl.entries
    ]
    return csv_text(TIMELINE_HEADER, rows)


def timeline_rows(tl) -> list[dict]:
    """The same dicts ``read_timeline`` returns, straight from a ``PlanTimeline``."""
    return [{"horizon": e.k, "cost": e.cost, "coverage": e.coverage, "stations": e.stations,
             "togo": e.togo, "piles": e.piles} for e in tl.entries]


def read_timeline(path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise MalformedFile(path, "file not found")
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TIMELINE_HEADER:
            raise MalformedFile(path, "not a timeline table", 1)
        rows = []
        for lineno, r in enumerate(reader, start=2):
            try:
                rows.append({
                    "horizon": int(r["horizon"]),
                    "cost": float(r["cost_MEUR"]),
                    "coverage": float(r["coverage_vehh"]),
                    "stations": int(r["stations"]),
                    "togo": int(r["togo_sites"]),
                    "piles": int(r["piles"]),
                })
            except (TypeError, ValueError):
                raise MalformedFile(path, "bad number", lineno) from None
    if not rows:
        raise MalformedFile(path, "empty timeline")
    return rows


def timeline_totals(rows: Sequence[Mapping]) -> dict:
    last = rows[-1]
    return {
        "cost": sum(r["cost"] for r in rows),
        "coverage": last["coverage"],
        "stations": last["stations"],
        "togo": last["togo"],
    }


def pct(value: float, base: float) -> float:
    return 100.0 * value / base if base else float("nan")


def table3_text(named: Mapping[str, Sequence[Mapping]], baseline: Sequence[Mapping]) -> str:
    """Horizon-by-horizon summary with totals relative to ``baseline``."""
    base = timeline_totals(baseline)
    horizons = [r["horizon"] for r in next(iter(named.values())) if r["horizon"] > 0]
    head = ["", *[f"Horizon {k}" for k in horizons], "Total"]
    lines = []
    for name, rows in named.items():
        by_k = {r["horizon"]: r for r in rows}
        tot = timeline_totals(rows)
        lines.append([name] + [""] * (len(head) - 1))
        lines.append(["Construction cost (MEUR)", *[fmt_cost(by_k[k]["cost"]) for k in horizons],
                      f"{fmt_cost(tot['cost'])}({pct(tot['cost'], base['cost']):.1f}%)"])
        lines.append(["Demand coverage (veh/h)", *[fmt_cov(by_k[k]["coverage"]) for k in horizons],
                      f"{fmt_cov(tot['coverage'])}({pct(tot['coverage'], base['coverage']):.1f}%)"])
        lines.append(["Number of stations", *[str(by_k[k]["stations"]) for k in horizons], str(tot["stations"])])
        lines.append(["Number of to-go chargers", *[str(by_k[k]["togo"]) for k in horizons], str(tot["togo"])])
    widths = [max(len(row[i]) for row in [head, *lines]) for i in range(len(head))]
    out = []
    for row in [head, *lines]:
        out.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(out) + "\n"


def summary_json(named: Mapping[str, Sequence[Mapping]], baseline: Sequence[Mapping], baseline_name: str) -> str:
    base = timeline_totals(baseline)
    doc = {"baseline": baseline_name, "runs": {}}
    for name, rows in named.items():
        tot = timeline_totals(rows)
        doc["runs"][name] = {
            "total_cost_MEUR": round(tot["cost"], 3),
            "final_coverage_vehh": round(tot["coverage"]),
            "stations": tot["stations"],
            "togo_sites": tot["togo"],
            "cost_pct": round(pct(tot["cost"], base["cost"]), 1),
            "coverage_pct": round(pct(tot["coverage"], base["coverage"]), 1),
            "horizons": [
                {"horizon": r["horizon"], "cost_MEUR": round(r["cost"], 3), "coverage_vehh": round(r["coverage"])}
                for r in rows
            ],
        }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    if not rows:
        raise InputError("empty sweep")
    K = len(rows[0].coverages)
    header = ["theta", *[f"coverage_h{k}" for k in range(1, K + 1)], "total_cost_MEUR", "cost_pct", "coverage_pct"]
    out = [
        (f"{r.theta:.2f}", *[f"{c:.1f}" for c in r.coverages], fmt_cost(r.total_cost),
         f"{r.cost_pct:.1f}", f"{r.coverage_pct:.1f}")
        for r in rows
    ]
    return csv_text(header, out)


def plan_overlay(inst: PlanningInstance, timelines: Mapping[str, PlanTimeline]) -> dict:
    """GeoJSON of every candidate with what each scenario built there.

    ``built_in`` lists the scenarios that newly activated the site;
    ``shared`` marks sites built by more than one scenario.
    """
    feats = []
    sites = list(inst.stations) + list(inst.togo)
    n_st = len(inst.stations)
    for idx, site in enumerate(sites):
        is_station = idx < n_st
        j = idx if is_station else idx - n_st
        initial = site.initial_scale if is_station else site.initial_piles
        props = {"site_id": site.site_id, "kind": site.kind, "source": site.source, "initial": initial}
        built_in = []
        for name, tl in timelines.items():
            sizes = [(e.solution.x if is_station else e.solution.y)[j] for e in tl.entries]
            first = next((e.k for e, v in zip(tl.entries, sizes) if v > initial), None)
            props[f"final_{name}"] = sizes[-1]
            props[f"first_change_{name}"] = first
            if initial == 0 and sizes[-1] > 0:
                built_in.append(name)
        if initial > 0:
            status = "existing"
        elif built_in:
            status = "new"
        else:
            status = "unused"
        props.update({"status": status, "built_in": built_in, "shared": len(built_in) > 1})
        feats.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [site.location[0], site.location[1]]},
            "properties": props,
        })
    return {"type": "FeatureCollection", "features": feats}


def json_text(doc) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"
