"""Run configuration: one YAML document drives every command.

Relative input paths resolve against the directory holding the config
file; a relative ``output_dir`` resolves against the working directory.
``overrides`` use dotted keys (``algorithm.seed``) and win over the file.
Everything is validated before a command writes anything.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import ConfigError
from .horizons import PAPER_THETAS, POLICIES, get_policy
from .nsga2 import NSGA2Params
from .planmodel import InstanceParams

INPUT_KEYS = ("network", "flows", "pois", "provider_sites", "layout0", "candidates")

DEFAULTS: dict[str, Any] = {
    "inputs": {},
    "demand": {"vehicle_class": "truck", "periods": None},
    "screening": {
        "radius_m": 500.0,
        "top_k": 10,
        "sites_per_node": 1,
        "offset_m": 200.0,
        "dedupe_radius_m": 250.0,
        "step_m": 100.0,
        "weighted": False,
        "degree_normalization": "max_degree",
    },
    "instance": {},
    "algorithm": {"pop_size": 500, "generations": 300, "pc": 0.9, "pm": 0.1, "seed": 0, "init_density": 0.25},
    "policy": "scenario1",
    "policies": None,
    "horizon": 1,
    "thetas": list(PAPER_THETAS),
    "seeds": None,
    "output_dir": "runs",
    "run_id": None,
}

# commands -> inputs they cannot run without
REQUIRED = {
    "evaluate-network": ("network",),
    "select-candidates": ("network", "flows", "pois"),
}
PLANNING_COMMANDS = ("optimize", "scenario", "sensitivity")


def _merge(base: dict, extra: Mapping) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _set_dotted(d: dict, key: str, value):
    parts = key.split(".")
    cur = d
    for p in parts[:-1]:
        nxt = cur.setdefault(p, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"cannot set {key}: {p} is not a section")
        cur = nxt
    cur[parts[-1]] = value


@dataclass
class RunConfig:
    raw: dict
    base_dir: Path
    source: Path | None = None
    inputs: dict[str, Path] = field(default_factory=dict)

    # -- construction ---------------------------------------------------------

    @classmethod
    def from_mapping(cls, doc: Mapping | None, base_dir=".", overrides: Mapping[str, Any] | None = None,
                     source=None) -> "RunConfig":
        if doc is not None and not isinstance(doc, Mapping):
            raise ConfigError("config must be a mapping at the top level")
        unknown = sorted(set(doc or {}) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        raw = _merge(DEFAULTS, doc or {})
        for key, value in (overrides or {}).items():
            if key.split(".")[0] not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
            _set_dotted(raw, key, value)
        base = Path(base_dir)
        cfg = cls(raw=raw, base_dir=base, source=Path(source) if source else None)
        cfg._resolve_inputs()
        return cfg

    @classmethod
    def load(cls, path, overrides: Mapping[str, Any] | None = None) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"{path}: config file not found")
        try:
            doc = yaml.safe_load(path.read_text())
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f" line {mark.line + 1}" if mark is not None else ""
            raise ConfigError(f"{path}{where}: invalid YAML") from None
        return cls.from_mapping(doc, path.parent, overrides, source=path)

    def _resolve_inputs(self):
        inputs = self.raw.get("inputs") or {}
        if not isinstance(inputs, Mapping):
            raise ConfigError("inputs must be a mapping of name to path")
        bad = sorted(set(inputs) - set(INPUT_KEYS))
        if bad:
            raise ConfigError(f"unknown inputs {bad}; expected some of {list(INPUT_KEYS)}")
        self.inputs = {}
        for k, v in inputs.items():
            if v is None:
                continue
            p = Path(str(v))
            self.inputs[k] = p if p.is_absolute() else self.base_dir / p

    # -- typed views ----------------------------------------------------------

    @property
    def screening(self) -> dict:
        return self.raw["screening"]

    @property
    def demand(self) -> dict:
        return self.raw["demand"]

    def instance_params(self) -> InstanceParams:
        base = InstanceParams.paper_defaults().to_mapping()
        block = self.raw.get("instance") or {}
        if not isinstance(block, Mapping):
            raise ConfigError("instance must be a mapping")
        unknown = sorted(set(block) - set(base))
        if unknown:
            raise ConfigError(f"unknown instance parameters: {unknown}")
        merged = {**base, **block}
        if "p_k" in block and "gamma_k" not in block:
            merged.pop("gamma_k")
        return InstanceParams.from_mapping(merged)

    def algorithm(self) -> NSGA2Params:
        a = self.raw["algorithm"]
        unknown = sorted(set(a) - set(DEFAULTS["algorithm"]))
        if unknown:
            raise ConfigError(f"unknown algorithm parameters: {unknown}")
        try:
            return NSGA2Params(
                pop_size=int(a["pop_size"]), generations=int(a["generations"]),
                pc=float(a["pc"]), pm=float(a["pm"]), seed=int(a["seed"]),
                init_density=float(a["init_density"]),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"algorithm: {exc}") from None

    @property
    def seed(self) -> int:
        return int(self.raw["algorithm"]["seed"])

    def seeds(self) -> list[int]:
        s = self.raw.get("seeds")
        if s is None:
            return [self.seed]
        if not isinstance(s, list) or not s or not all(isinstance(v, int) for v in s):
            raise ConfigError("seeds must be a non-empty list of integers")
        return list(s)

    def policies(self) -> list[str]:
        names = self.raw.get("policies") or [self.raw["policy"]]
        if not isinstance(names, list):
            names = [names]
        out = []
        for name in names:
            try:
                get_policy(str(name))
            except ValueError:
                raise ConfigError(f"unknown policy {name!r}; expected one of {sorted(POLICIES)}") from None
            out.append(str(name))
        return out

    def thetas(self) -> list[float]:
        t = self.raw.get("thetas")
        try:
            out = [float(v) for v in t]
        except (TypeError, ValueError):
            raise ConfigError("thetas must be a list of numbers") from None
        if not out or any(v <= 0 for v in out):
            raise ConfigError("thetas must be a non-empty list of positive numbers")
        return out

    @property
    def horizon(self) -> int:
        return int(self.raw["horizon"])

    # -- validation and identity ----------------------------------------------

    def validate(self, command: str):
        """Check every setting the command will use; raise ``ConfigError``."""
        needed = list(REQUIRED.get(command, ()))
        if command in PLANNING_COMMANDS and "candidates" not in self.inputs:
            needed += ["network", "flows", "pois"]
        for key in needed:
            if key not in self.inputs:
                raise ConfigError(f"{command} needs inputs.{key}")
        for key, p in self.inputs.items():
            if not p.exists():
                raise ConfigError(f"inputs.{key}: file not found: {p}")
        s = self.screening
        try:
            if float(s["radius_m"]) <= 0 or float(s["step_m"]) <= 0:
                raise ConfigError("screening radius_m and step_m must be positive")
            if int(s["top_k"]) < 0 or float(s["offset_m"]) < 0 or float(s["dedupe_radius_m"]) < 0:
                raise ConfigError("screening top_k, offset_m and dedupe_radius_m must be non-negative")
        except (TypeError, ValueError):
            raise ConfigError("screening values must be numbers") from None
        if s["degree_normalization"] not in ("n_minus_1", "max_degree"):
            raise ConfigError("screening.degree_normalization must be n_minus_1 or max_degree")
        if command in PLANNING_COMMANDS:
            params = self.instance_params()
            self.algorithm()
            self.policies()
            self.seeds()
            if command == "optimize" and not 1 <= self.horizon <= params.horizons:
                raise ConfigError(f"horizon must lie in 1..{params.horizons}")
            if command == "sensitivity":
                self.thetas()

    def canonical(self) -> dict:
        """Config as it takes effect, with input paths as written."""
        doc = copy.deepcopy(self.raw)
        doc.pop("output_dir", None)
        doc.pop("run_id", None)
        return doc

    def digest(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(text.encode()).hexdigest()

    def run_dir(self, command: str) -> Path:
        run_id = self.raw.get("run_id") or f"{command}-{self.digest()[:12]}"
        return Path(str(self.raw["output_dir"])) / str(run_id)
