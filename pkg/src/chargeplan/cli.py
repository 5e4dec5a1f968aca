"""Command-line entry point.

    chargeplan evaluate-network  --config run.yaml
    chargeplan select-candidates --config run.yaml
    chargeplan optimize          --config run.yaml --horizon 1
    chargeplan scenario          --config run.yaml --policy scenario1
    chargeplan sensitivity       --config run.yaml --theta 0.5 1.0 2.0
    chargeplan report RUN_DIR [--baseline OTHER_RUN_DIR_OR_TIMELINE]

Exit codes: 0 success, 2 input or config error, 3 no feasible solution,
4 internal invariant breach.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from pathlib import Path

import yaml

from . import __version__
from .candidates import build_pool, load_layout, load_provider_sites, pool_from_geojson, pool_to_geojson, summary_rows
from .config import RunConfig
from .errors import ChargePlanError, ConfigError, InputError, InvariantError, NoFeasibleSolution
from .geodata import aggregate_freight_demand, load_flows, load_network, load_pois
from .horizons import get_policy, run_horizon, run_scenario, sensitivity_sweep
from .netgraph import composite_rank
from .nsga2 import RNG_NAME
from .planmodel import PlanningInstance
from . import reporting as rep

log = logging.getLogger("chargeplan")

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_INVARIANT = 0, 2, 3, 4


# -- pipeline pieces ----------------------------------------------------------

def _network(cfg: RunConfig):
    return load_network(cfg.inputs["network"])


def _report(cfg: RunConfig, g):
    s = cfg.screening
    return composite_rank(g, weighted=bool(s["weighted"]), degree_normalization=s["degree_normalization"])


def _layout(cfg: RunConfig) -> dict[str, int]:
    if "layout0" in cfg.inputs:
        return load_layout(cfg.inputs["layout0"])
    log.warning("no layout0 given; horizon 0 starts with no facilities")
    return {}


def _screen(cfg: RunConfig, layout0=None):
    g = _network(cfg)
    mode = g.coordinate_mode
    records = load_flows(cfg.inputs["flows"], mode)
    periods = cfg.demand.get("periods")
    demand = aggregate_freight_demand(records, cfg.demand["vehicle_class"], periods)
    provider = load_provider_sites(cfg.inputs["provider_sites"], mode) if "provider_sites" in cfg.inputs else []
    s = cfg.screening
    pool = build_pool(
        g, load_pois(cfg.inputs["pois"], mode), demand, _report(cfg, g),
        provider_sites=provider, layout0=layout0,
        radius=float(s["radius_m"]), top_k=int(s["top_k"]), sites_per_node=s["sites_per_node"],
        offset_m=float(s["offset_m"]), dedupe_radius=float(s["dedupe_radius_m"]), step_m=float(s["step_m"]),
    )
    return pool, mode


def _instance(cfg: RunConfig) -> PlanningInstance:
    params = cfg.instance_params()
    layout0 = _layout(cfg)
    if "candidates" in cfg.inputs:
        pool = pool_from_geojson(cfg.inputs["candidates"])
        mode = load_network(cfg.inputs["network"]).coordinate_mode if "network" in cfg.inputs else "wgs84"
    else:
        pool, mode = _screen(cfg)
    inst = PlanningInstance.from_pool(pool, params, mode)
    for s in inst.stations:
        if layout0.get(s.site_id, 0) > params.s:
            raise InputError(f"layout0: site {s.site_id} scale {layout0[s.site_id]} exceeds s={params.s}")
    return inst.with_layout(layout0)


def _file_sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _manifest(cfg: RunConfig, command: str, run_dir: Path, outputs: dict[str, str], inst=None) -> str:
    doc = {
        "command": command,
        "run_id": run_dir.name,
        "version": __version__,
        "config_hash": cfg.digest(),
        "config": cfg.canonical(),
        "seed": cfg.seed,
        "rng": RNG_NAME,
        "inputs": {k: _file_sha(p) for k, p in sorted(cfg.inputs.items())},
        "outputs": {name: rep.sha256_text(text) for name, text in sorted(outputs.items())},
    }
    if inst is not None:
        doc["instance_digest"] = inst.digest()
        doc["algorithm"] = cfg.algorithm().manifest()
    return rep.json_text(doc)


def _write(run_dir: Path, files: dict[str, str]):
    run_dir.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (run_dir / name).write_text(text)
    log.info("wrote %d files to %s", len(files), run_dir)


def _finish(cfg, command, outputs, inst=None) -> Path:
    run_dir = cfg.run_dir(command)
    files = dict(outputs)
    files["manifest.json"] = _manifest(cfg, command, run_dir, outputs, inst)
    _write(run_dir, files)
    print(run_dir)
    return run_dir


# -- commands -----------------------------------------------------------------

def cmd_evaluate_network(cfg: RunConfig) -> Path:
    cfg.validate("evaluate-network")
    report = _report(cfg, _network(cfg))
    return _finish(cfg, "evaluate-network", {"centrality.csv": rep.centrality_csv(report)})


def cmd_select_candidates(cfg: RunConfig) -> Path:
    cfg.validate("select-candidates")
    layout0 = _layout(cfg)
    pool, _ = _screen(cfg, layout0)
    summary = rep.csv_text(["source", "kind", "count"], summary_rows(pool))
    return _finish(cfg, "select-candidates", {
        "candidates.geojson": rep.json_text(pool_to_geojson(pool)),
        "candidates_summary.csv": summary,
    })


def cmd_optimize(cfg: RunConfig) -> Path:
    """One horizon from the horizon-0 layout; writes the whole Pareto front."""
    cfg.validate("optimize")
    inst = _instance(cfg)
    k = cfg.horizon
    prev = inst.initial_solution()
    policy = get_policy(cfg.policies()[0])
    try:
        front, chosen = run_horizon(inst, prev, k, policy, cfg.seed, cfg.algorithm())
    except NoFeasibleSolution as exc:
        exc.horizon = k
        raise
    chosen_id = front.index(chosen) + 1
    outputs = {
        f"front_h{k}.csv": rep.front_csv(front),
        "selected.csv": rep.csv_text(["policy", "solution_id"], [(policy.name, chosen_id)]),
    }
    return _finish(cfg, "optimize", outputs, inst)


def cmd_scenario(cfg: RunConfig) -> Path:
    cfg.validate("scenario")
    inst = _instance(cfg)
    params = cfg.algorithm()
    timelines = {}
    outputs = {}
    for name in cfg.policies():
        tl = run_scenario(inst, None, name, cfg.seed, params)
        tl.check(inst)
        timelines[name] = tl
        outputs[f"timeline_{name}.csv"] = rep.timeline_csv(tl)
        for k, front in enumerate(tl.fronts, start=1):
            outputs[f"front_h{k}_{name}.csv"] = rep.front_csv(front)
    outputs["plan.geojson"] = rep.json_text(rep.plan_overlay(inst, timelines))
    named = {n: rep.timeline_rows(tl) for n, tl in timelines.items()}
    first = next(iter(named))
    outputs["summary.txt"] = rep.table3_text(named, named[first])
    return _finish(cfg, "scenario", outputs, inst)


def cmd_sensitivity(cfg: RunConfig) -> Path:
    cfg.validate("sensitivity")
    inst = _instance(cfg)
    outputs = {}
    for name in cfg.policies():
        rows = sensitivity_sweep(inst, None, name, cfg.thetas(), cfg.seeds(), cfg.algorithm())
        outputs[f"sweep_{name}.csv"] = rep.sweep_csv(rows)
    return _finish(cfg, "sensitivity", outputs, inst)


def _timelines_in(path: Path) -> dict[str, list[dict]]:
    path = Path(path)
    if path.is_file():
        return {path.stem.removeprefix("timeline_"): rep.read_timeline(path)}
    if not path.is_dir():
        raise InputError(f"{path}: no such run directory")
    files = sorted(path.glob("timeline_*.csv"))
    if not files:
        raise InputError(f"{path}: no timeline_*.csv artifacts (run the scenario command first)")
    return {f.stem.removeprefix("timeline_"): rep.read_timeline(f) for f in files}


def cmd_report(run_dir, baseline=None, outdir=None) -> Path:
    """Summarise a scenario run against a baseline (default: its first timeline)."""
    run_dir = Path(run_dir)
    named = _timelines_in(run_dir)
    if baseline is None:
        base_name, base_rows = next(iter(named.items()))
    else:
        base = _timelines_in(Path(baseline))
        base_key, base_rows = next(iter(base.items()))
        base_name = f"{Path(baseline).name}:{base_key}"
    horizons = {tuple(r["horizon"] for r in rows) for rows in [*named.values(), base_rows]}
    if len(horizons) != 1:
        raise InputError("timelines cover different horizons and cannot be compared")
    files = {
        "summary.txt": rep.table3_text(named, base_rows),
        "summary.json": rep.summary_json(named, base_rows, base_name),
    }
    target = Path(outdir) if outdir else run_dir
    _write(target, files)
    sys.stdout.write(files["summary.txt"])
    return target


COMMANDS = {
    "evaluate-network": cmd_evaluate_network,
    "select-candidates": cmd_select_candidates,
    "optimize": cmd_optimize,
    "scenario": cmd_scenario,
    "sensitivity": cmd_sensitivity,
}


# -- argument handling --------------------------------------------------------

def _parse_set(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = yaml.safe_load(value)
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chargeplan", description="Multi-period freight charging network planning.")
    ap.add_argument("--version", action="version", version=f"chargeplan {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML run configuration")
        p.add_argument("--outdir", help="output root; the run goes to OUTDIR/RUN_ID")
        p.add_argument("--run-id")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (dotted)")
        p.add_argument("-v", "--verbose", action="store_true")
        if name in ("optimize", "scenario", "sensitivity"):
            p.add_argument("--seed", type=int)
            p.add_argument("--policy", nargs="+", help="scenario1, scenario2 and/or scenario3")
            p.add_argument("--pop-size", type=int)
            p.add_argument("--generations", type=int)
        if name == "optimize":
            p.add_argument("--horizon", type=int)
        if name == "sensitivity":
            p.add_argument("--theta", type=float, nargs="+")
            p.add_argument("--seeds", type=int, nargs="+")
    p = sub.add_parser("report")
    p.add_argument("run_dir")
    p.add_argument("--baseline", help="run directory or timeline CSV used as the 100%% reference")
    p.add_argument("--outdir", help="where to write the summary (default: RUN_DIR)")
    p.add_argument("-v", "--verbose", action="store_true")
    return ap


def config_from_args(args) -> RunConfig:
    overrides = _parse_set(getattr(args, "set", None))
    flag_keys = {
        "outdir": "output_dir", "run_id": "run_id", "seed": "algorithm.seed",
        "pop_size": "algorithm.pop_size", "generations": "algorithm.generations",
        "horizon": "horizon", "theta": "thetas", "seeds": "seeds",
    }
    for attr, key in flag_keys.items():
        v = getattr(args, attr, None)
        if v is not None:
            overrides[key] = str(Path(v).resolve()) if attr == "outdir" else v
    if getattr(args, "policy", None):
        overrides["policies"] = list(args.policy)
    if args.config:
        return RunConfig.load(args.config, overrides)
    return RunConfig.from_mapping({}, Path.cwd(), overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "report":
            cmd_report(args.run_dir, args.baseline, args.outdir)
        else:
            COMMANDS[args.command](config_from_args(args))
    except InputError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NoFeasibleSolution as exc:
        where = f" in horizon {exc.horizon}" if getattr(exc, "horizon", None) else ""
        print(f"error: no feasible solution{where}: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InvariantError, ChargePlanError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
