"""One planning horizon as pure evaluation functions.

A horizon decision is a station scale ``x_i`` in ``0..s`` per station
candidate and a pile count ``y_j`` in ``0..n`` per to-go candidate. The
objectives are the construction cost of moving from the previous layout
and the (negated) demand coverage, optionally including next-horizon
coverage of the same layout. Costs are accumulated in EUR and reported in
million EUR.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache
from importlib import resources
from typing import Mapping, Sequence

import numpy as np
import yaml

from .candidates import CandidatePool, CandidateSite
from .errors import ConfigError, DowngradeAttempt, InputError
from .geodata import pairwise_distances

log = logging.getLogger(__name__)

EUR_PER_MEUR = 1_000_000.0


def _eur(meur):
    return np.round(np.asarray(meur, dtype=float) * EUR_PER_MEUR, 2)


@dataclass(frozen=True)
class InstanceParams:
    """Scalar and per-horizon parameters, keyed like the default parameter file."""

    dist_min: float  # km
    s: int
    n: int
    c_t: float  # EUR per pile
    cap_l: tuple[float, ...]  # veh/h per station scale 0..s
    cap_t: float  # veh/h per pile
    p_k: tuple[float, ...]
    b_k: tuple[float, ...]  # MEUR
    Nmin_k: tuple[int, ...]
    Nmax_k: tuple[int, ...]
    Mmin_k: tuple[int, ...]
    Mmax_k: tuple[int, ...]
    c_s: tuple[tuple[float, ...], ...]  # MEUR, row = start scale, column = end scale
    gamma_k: tuple[float, ...] = ()

    def __post_init__(self):
        K = len(self.p_k)
        if K < 1:
            raise ConfigError("p_k must list at least one horizon")
        for name in ("b_k", "Nmin_k", "Nmax_k", "Mmin_k", "Mmax_k"):
            if len(getattr(self, name)) != K:
                raise ConfigError(f"{name} has {len(getattr(self, name))} entries, expected {K}")
        if not self.gamma_k:
            object.__setattr__(self, "gamma_k", tuple([1.0] * (K - 1) + [0.0]))
        if len(self.gamma_k) != K:
            raise ConfigError(f"gamma_k has {len(self.gamma_k)} entries, expected {K}")
        if self.gamma_k[-1] != 0:
            raise ConfigError("gamma_k must be 0 in the last horizon (no next horizon exists)")
        if self.s < 1 or self.n < 0:
            raise ConfigError("s must be >= 1 and n >= 0")
        if len(self.cap_l) != self.s + 1:
            raise ConfigError(f"cap_l needs s+1={self.s + 1} entries, got {len(self.cap_l)}")
        if self.cap_l[0] != 0:
            raise ConfigError("cap_l[0] must be 0")
        if any(b <= a for a, b in zip(self.cap_l, self.cap_l[1:])):
            raise ConfigError("cap_l must be strictly increasing")
        if any(b < a for a, b in zip(self.p_k, self.p_k[1:])):
            raise ConfigError("p_k must be non-decreasing")
        if any(not 0 <= p for p in self.p_k):
            raise ConfigError("p_k must be non-negative")
        if any(b < 0 for b in self.b_k):
            raise ConfigError("b_k must be non-negative")
        if self.dist_min < 0 or self.c_t < 0 or self.cap_t < 0:
            raise ConfigError("dist_min, c_t and cap_t must be non-negative")
        for name in ("Nmin_k", "Nmax_k", "Mmin_k", "Mmax_k"):
            if any(v < 0 for v in getattr(self, name)):
                raise ConfigError(f"{name} must be non-negative")
        if len(self.c_s) != self.s + 1 or any(len(r) != self.s + 1 for r in self.c_s):
            raise ConfigError(f"c_s must be a {self.s + 1}x{self.s + 1} table")
        for a in range(self.s + 1):
            if self.c_s[a][a] != 0:
                raise ConfigError(f"c_s[{a}][{a}] must be 0 (no change, no cost)")
            for b in range(a + 1, self.s + 1):
                if not (math.isfinite(self.c_s[a][b]) and self.c_s[a][b] >= 0):
                    raise ConfigError(f"c_s[{a}][{b}] must be a non-negative number")

    @property
    def horizons(self) -> int:
        return len(self.p_k)

    @classmethod
    def from_mapping(cls, d: Mapping) -> "InstanceParams":
        """Parse a parameter block, tolerating quirks of the default file.

        Extra trailing budget entries are dropped, a missing last cost row
        is filled with zeros, and entries below the diagonal of ``c_s``
        (downgrades) are stored as NaN.
        """
        try:
            K = len(d["p_k"])
            s = int(d["s"])
            b_k = [float(v) for v in d["b_k"]]
            if len(b_k) > K:
                log.warning("b_k has %d entries for %d horizons; using the first %d", len(b_k), K, K)
                b_k = b_k[:K]
            rows = [[float(v) for v in r] for r in d["c_s"]]
            if len(rows) == s:
                rows.append([0.0] * (s + 1))
            c_s = tuple(
                tuple(v if b >= a else math.nan for b, v in enumerate(r)) for a, r in enumerate(rows)
            )
            gamma = d.get("gamma_k") or ()
            return cls(
                dist_min=float(d["dist_min"]),
                s=s,
                n=int(d["n"]),
                c_t=float(d["c_t"]),
                cap_l=tuple(float(v) for v in d["cap_l"]),
                cap_t=float(d["cap_t"]),
                p_k=tuple(float(v) for v in d["p_k"]),
                b_k=tuple(b_k),
                Nmin_k=tuple(int(v) for v in d["Nmin_k"]),
                Nmax_k=tuple(int(v) for v in d["Nmax_k"]),
                Mmin_k=tuple(int(v) for v in d["Mmin_k"]),
                Mmax_k=tuple(int(v) for v in d["Mmax_k"]),
                c_s=c_s,
                gamma_k=tuple(float(v) for v in gamma),
            )
        except KeyError as exc:
            raise ConfigError(f"instance parameters lack key {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad instance parameter: {exc}") from None

    @classmethod
    def paper_defaults(cls) -> "InstanceParams":
        return _default_params()

    def to_mapping(self) -> dict:
        d = {
            "dist_min": self.dist_min, "s": self.s, "n": self.n, "c_t": self.c_t,
            "cap_l": list(self.cap_l), "cap_t": self.cap_t, "p_k": list(self.p_k),
            "b_k": list(self.b_k), "Nmin_k": list(self.Nmin_k), "Nmax_k": list(self.Nmax_k),
            "Mmin_k": list(self.Mmin_k), "Mmax_k": list(self.Mmax_k),
            "c_s": [[0.0 if math.isnan(v) else v for v in r] for r in self.c_s],
            "gamma_k": list(self.gamma_k),
        }
        return d


@lru_cache(maxsize=1)
def _default_params() -> InstanceParams:
    text = resources.files("chargeplan.data").joinpath("default_params.yaml").read_text()
    return InstanceParams.from_mapping(yaml.safe_load(text))


@dataclass(frozen=True)
class Violation:
    constraint: str
    magnitude: float
    detail: str = ""


@dataclass(frozen=True)
class HorizonSolution:
    k: int
    x: tuple[int, ...]
    y: tuple[int, ...]
    cost: float = 0.0  # MEUR
    coverage: float = 0.0  # D_k, veh/h
    lookahead_coverage: float = 0.0  # gamma_k * D_{k+1}, veh/h
    violations: tuple[Violation, ...] = ()

    @property
    def feasible(self) -> bool:
        return not self.violations

    @property
    def station_active(self) -> tuple[bool, ...]:
        return tuple(v > 0 for v in self.x)

    @property
    def togo_active(self) -> tuple[bool, ...]:
        return tuple(v > 0 for v in self.y)

    @property
    def objectives(self) -> tuple[float, float]:
        return (self.cost, -(self.coverage + self.lookahead_coverage))

    @property
    def genome(self) -> tuple[int, ...]:
        return self.x + self.y


@dataclass(frozen=True)
class PlanningInstance:
    stations: tuple[CandidateSite, ...]
    togo: tuple[CandidateSite, ...]
    params: InstanceParams
    coordinate_mode: str = "wgs84"

    def __post_init__(self):
        object.__setattr__(self, "stations", tuple(self.stations))
        object.__setattr__(self, "togo", tuple(self.togo))
        for st in self.stations:
            if st.kind != "station":
                raise InputError(f"{st.site_id} is not a station candidate")
            if st.initial_scale > self.params.s:
                raise InputError(f"{st.site_id}: initial scale {st.initial_scale} exceeds s={self.params.s}")
        for tg in self.togo:
            if tg.kind != "togo":
                raise InputError(f"{tg.site_id} is not a to-go candidate")
            if tg.initial_piles > self.params.n:
                raise InputError(f"{tg.site_id}: {tg.initial_piles} piles exceed n={self.params.n}")

    @classmethod
    def from_pool(cls, pool: CandidatePool, params: InstanceParams, coordinate_mode="wgs84"):
        return cls(pool.stations, pool.togo, params, coordinate_mode)

    # -- derived arrays (cached; the instance is immutable) --

    @property
    def horizons(self) -> int:
        return self.params.horizons

    @cached_property
    def q_station(self) -> np.ndarray:
        return np.array([s.q for s in self.stations], dtype=float)

    @cached_property
    def q_togo(self) -> np.ndarray:
        return np.array([s.q for s in self.togo], dtype=float)

    @cached_property
    def cap_levels(self) -> np.ndarray:
        return np.array(self.params.cap_l, dtype=float)

    @cached_property
    def station_cost_eur(self) -> np.ndarray:
        """Transition cost table in EUR; downgrades are ``inf``."""
        c = np.array(self.params.c_s, dtype=float)
        c = np.where(np.isnan(c), np.inf, c)
        return np.where(np.isinf(c), np.inf, np.round(c * EUR_PER_MEUR, 2))

    @cached_property
    def station_distance_km(self) -> np.ndarray:
        if not self.stations:
            return np.zeros((0, 0))
        return pairwise_distances([s.location for s in self.stations], self.coordinate_mode) / 1000.0

    @cached_property
    def x0(self) -> np.ndarray:
        return np.array([s.initial_scale for s in self.stations], dtype=int)

    @cached_property
    def y0(self) -> np.ndarray:
        return np.array([s.initial_piles for s in self.togo], dtype=int)

    @cached_property
    def spacing_conflicts(self) -> list[tuple[int, int, float]]:
        """Station pairs closer than ``dist_min`` that are not both pre-existing."""
        D = self.station_distance_km
        pre = self.x0 > 0
        out = []
        for i in range(len(self.stations)):
            for j in range(i + 1, len(self.stations)):
                if D[i, j] < self.params.dist_min and not (pre[i] and pre[j]):
                    out.append((i, j, float(D[i, j])))
        return out

    def budget_eur(self, k: int) -> float:
        return float(_eur(self.params.b_k[k - 1]))

    def penetration(self, k: int) -> float:
        self._check_k(k)
        return self.params.p_k[k - 1]

    def gamma(self, k: int) -> float:
        self._check_k(k)
        return self.params.gamma_k[k - 1]

    def _check_k(self, k):
        if not 1 <= k <= self.horizons:
            raise ValueError(f"horizon {k} outside 1..{self.horizons}")

    def initial_solution(self) -> HorizonSolution:
        """Existing layout as a horizon-0 solution.

        Its coverage is evaluated at the first horizon's penetration rate.
        """
        base = HorizonSolution(0, tuple(int(v) for v in self.x0), tuple(int(v) for v in self.y0))
        return replace(base, coverage=horizon_coverage(base, self, 1))

    def with_layout(self, layout: Mapping[str, int]) -> "PlanningInstance":
        ids = {s.site_id for s in self.stations + self.togo}
        unknown = sorted(set(layout) - ids)
        if unknown:
            raise InputError(f"layout refers to unknown sites: {unknown}")
        st = tuple(replace(s, initial_scale=int(layout.get(s.site_id, 0))) for s in self.stations)
        tg = tuple(replace(s, initial_piles=int(layout.get(s.site_id, 0))) for s in self.togo)
        return replace(self, stations=st, togo=tg)

    def with_budget_factor(self, theta: float) -> "PlanningInstance":
        if theta < 0:
            raise ValueError("budget factor must be non-negative")
        b = tuple(float(np.round(v * theta, 9)) for v in self.params.b_k)
        return replace(self, params=replace(self.params, b_k=b))

    def with_params(self, **changes) -> "PlanningInstance":
        return replace(self, params=replace(self.params, **changes))

    def to_mapping(self) -> dict:
        def site(s):
            return {"site_id": s.site_id, "kind": s.kind, "source": s.source,
                    "lon": s.location[0], "lat": s.location[1], "q": s.q,
                    "initial": s.initial_scale if s.kind == "station" else s.initial_piles}
        return {
            "coordinate_mode": self.coordinate_mode,
            "params": self.params.to_mapping(),
            "stations": [site(s) for s in self.stations],
            "togo": [site(s) for s in self.togo],
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_mapping(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _xy(sol):
    if isinstance(sol, HorizonSolution):
        return np.asarray(sol.x, dtype=int), np.asarray(sol.y, dtype=int)
    x, y = sol
    return np.asarray(x, dtype=int), np.asarray(y, dtype=int)


# -- objectives ---------------------------------------------------------------

def horizon_cost_eur(prev, cur, inst: PlanningInstance) -> float:
    px, py = _xy(prev)
    cx, cy = _xy(cur)
    if (cx < px).any() or (cy < py).any():
        bad = [inst.stations[i].site_id for i in np.flatnonzero(cx < px)]
        bad += [inst.togo[j].site_id for j in np.flatnonzero(cy < py)]
        raise DowngradeAttempt(f"facilities cannot shrink between horizons: {bad}")
    station = inst.station_cost_eur[px, cx].sum() if len(px) else 0.0
    piles = float((cy - py).sum()) * inst.params.c_t
    return float(station + piles)


def horizon_cost(prev, cur, inst: PlanningInstance) -> float:
    """Construction cost (MEUR) of moving from ``prev`` to ``cur``."""
    return horizon_cost_eur(prev, cur, inst) / EUR_PER_MEUR


def horizon_coverage(sol, inst: PlanningInstance, k: int, p: float | None = None) -> float:
    """Covered freight flow (veh/h): each site serves min(scaled flow, capacity)."""
    if p is None:
        p = inst.penetration(k)
    x, y = _xy(sol)
    st = np.minimum(inst.q_station * p, inst.cap_levels[x]).sum() if len(x) else 0.0
    tg = np.minimum(inst.q_togo * p, inst.params.cap_t * y).sum() if len(y) else 0.0
    return float(st + tg)


def lookahead_term(sol, inst: PlanningInstance, k: int, gamma: float | None = None) -> float:
    g = inst.gamma(k) if gamma is None else gamma
    if g == 0:
        return 0.0
    if k >= inst.horizons:
        raise ValueError("look-ahead weight must be 0 in the last horizon")
    return g * horizon_coverage(sol, inst, k + 1)


def objective_pair(sol, prev, inst: PlanningInstance, k: int, gamma: float | None = None):
    """``(Z1, Z2)``: cost in MEUR and negated (current + weighted next) coverage.

    The next-horizon coverage is that of the same decision at the next
    penetration rate.
    """
    z1 = horizon_cost(prev, sol, inst)
    z2 = -(horizon_coverage(sol, inst, k) + lookahead_term(sol, inst, k, gamma))
    return z1, z2


# -- constraints --------------------------------------------------------------

def check_constraints(sol, prev, inst: PlanningInstance, k: int) -> list[Violation]:
    """Every violated constraint with its magnitude; empty means feasible."""
    P = inst.params
    x, y = _xy(sol)
    px, py = _xy(prev)
    out: list[Violation] = []

    over = x[(x < 0) | (x > P.s)]
    if len(over):
        out.append(Violation("station_bounds", float(np.abs(np.clip(x, 0, P.s) - x).sum()),
                             f"scales must lie in 0..{P.s}"))
    over = y[(y < 0) | (y > P.n)]
    if len(over):
        out.append(Violation("togo_bounds", float(np.abs(np.clip(y, 0, P.n) - y).sum()),
                             f"pile counts must lie in 0..{P.n}"))
    down = np.clip(px - x, 0, None)
    if down.any():
        out.append(Violation("station_downgrade", float(down.sum()),
                             f"{int((down > 0).sum())} stations shrink"))
    down = np.clip(py - y, 0, None)
    if down.any():
        out.append(Violation("togo_downgrade", float(down.sum()),
                             f"{int((down > 0).sum())} to-go sites lose piles"))

    if not any(v.constraint.endswith("downgrade") or v.constraint.endswith("bounds") for v in out):
        cost = horizon_cost_eur(prev, sol, inst)
        budget = inst.budget_eur(k)
        if cost > budget + 1e-6:
            out.append(Violation("budget", (cost - budget) / EUR_PER_MEUR,
                                 f"cost {cost / EUR_PER_MEUR:.3f} MEUR exceeds {budget / EUR_PER_MEUR:.3f}"))

    for i, j, d in inst.spacing_conflicts:
        if x[i] > 0 and x[j] > 0:
            out.append(Violation("spacing", P.dist_min - d,
                                 f"{inst.stations[i].site_id}-{inst.stations[j].site_id} {d:.3f} km apart"))

    new_st = int(((px == 0) & (x > 0)).sum())
    new_tg = int(((py == 0) & (y > 0)).sum())
    for name, count, lo, hi in (
        ("station_count", new_st, P.Nmin_k[k - 1], P.Nmax_k[k - 1]),
        ("togo_count", new_tg, P.Mmin_k[k - 1], P.Mmax_k[k - 1]),
    ):
        if count > hi:
            out.append(Violation(f"{name}_max", float(count - hi), f"{count} new sites > {hi}"))
        if count < lo:
            out.append(Violation(f"{name}_min", float(lo - count), f"{count} new sites < {lo}"))
    return out


def violation_scalar(violations: Sequence[Violation], inst: PlanningInstance, k: int) -> float:
    """Sum of violation magnitudes, each scaled to its own bound."""
    P = inst.params
    scale = {
        "budget": P.b_k[k - 1] if P.b_k[k - 1] > 0 else 1.0,
        "spacing": P.dist_min if P.dist_min > 0 else 1.0,
        "station_count_max": max(P.Nmax_k[k - 1], 1),
        "station_count_min": max(P.Nmin_k[k - 1], 1),
        "togo_count_max": max(P.Mmax_k[k - 1], 1),
        "togo_count_min": max(P.Mmin_k[k - 1], 1),
        "station_bounds": P.s,
        "togo_bounds": max(P.n, 1),
        "station_downgrade": P.s,
        "togo_downgrade": max(P.n, 1),
    }
    return float(sum(v.magnitude / scale[v.constraint] for v in violations))


def evaluate(sol, prev, inst: PlanningInstance, k: int, gamma: float | None = None) -> HorizonSolution:
    """Fully evaluated ``HorizonSolution`` for decision ``sol`` in horizon ``k``."""
    x, y = _xy(sol)
    violations = tuple(check_constraints((x, y), prev, inst, k))
    downgrade = any(v.constraint.endswith(("downgrade", "bounds")) for v in violations)
    cost = math.inf if downgrade else horizon_cost(prev, (x, y), inst)
    xs = np.clip(x, 0, inst.params.s)
    ys = np.clip(y, 0, inst.params.n)
    return HorizonSolution(
        k=k,
        x=tuple(int(v) for v in x),
        y=tuple(int(v) for v in y),
        cost=cost,
        coverage=horizon_coverage((xs, ys), inst, k),
        lookahead_coverage=lookahead_term((xs, ys), inst, k, gamma),
        violations=violations,
    )


# -- vectorised evaluation for the optimiser -----------------------------------

@dataclass
class BatchEvaluator:
    """Evaluates many genomes ``[x | y]`` at once for horizon ``k``.

    Genomes must respect the monotone bounds (``prev <= gene <= max``), as
    produced by the optimiser; bound and downgrade checks are skipped here.
    """

    inst: PlanningInstance
    prev: HorizonSolution
    k: int
    gamma: float | None = None
    _spacing: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        inst = self.inst
        if self.gamma is None:
            self.gamma = inst.gamma(self.k)
        if self.gamma and self.k >= inst.horizons:
            raise ValueError("look-ahead weight must be 0 in the last horizon")
        self.px, self.py = _xy(self.prev)
        self.n_st = len(inst.stations)
        self.p = inst.penetration(self.k)
        self.p_next = inst.penetration(self.k + 1) if self.gamma else 0.0
        P = inst.params
        W = np.zeros((self.n_st, self.n_st))
        dmin = P.dist_min if P.dist_min > 0 else 1.0
        for i, j, d in inst.spacing_conflicts:
            W[i, j] = (P.dist_min - d) / dmin
        self._spacing = W
        k = self.k
        self.budget = inst.budget_eur(k)
        self.budget_scale = P.b_k[k - 1] * EUR_PER_MEUR if P.b_k[k - 1] > 0 else EUR_PER_MEUR
        self.bounds = (P.Nmin_k[k - 1], P.Nmax_k[k - 1], P.Mmin_k[k - 1], P.Mmax_k[k - 1])

    @property
    def lower(self) -> np.ndarray:
        return np.concatenate([self.px, self.py]).astype(int)

    @property
    def upper(self) -> np.ndarray:
        P = self.inst.params
        return np.concatenate([np.full(self.n_st, P.s), np.full(len(self.py), P.n)]).astype(int)

    def coverage(self, X, Y, p):
        inst = self.inst
        st = np.minimum(inst.q_station * p, inst.cap_levels[X]).sum(axis=1)
        tg = np.minimum(inst.q_togo * p, inst.params.cap_t * Y).sum(axis=1)
        return st + tg

    def __call__(self, G: np.ndarray):
        """Returns ``(F, cv, cost_eur, D, lookahead)`` for genome matrix ``G``."""
        inst = self.inst
        G = np.asarray(G, dtype=int)
        X, Y = G[:, : self.n_st], G[:, self.n_st:]
        cost = inst.station_cost_eur[self.px[None, :], X].sum(axis=1)
        cost = cost + (Y - self.py[None, :]).sum(axis=1) * inst.params.c_t
        D = self.coverage(X, Y, self.p)
        look = self.gamma * self.coverage(X, Y, self.p_next) if self.gamma else np.zeros(len(G))

        cv = np.maximum(cost - self.budget - 1e-6, 0.0)
        cv = np.where(cv > 0, (cost - self.budget) / self.budget_scale, 0.0)
        A = (X > 0).astype(float)
        cv = cv + np.einsum("pi,ij,pj->p", A, self._spacing, A)
        nmin, nmax, mmin, mmax = self.bounds
        new_st = ((self.px == 0) & (X > 0)).sum(axis=1)
        new_tg = ((self.py == 0) & (Y > 0)).sum(axis=1)
        cv = cv + np.maximum(new_st - nmax, 0) / max(nmax, 1) + np.maximum(nmin - new_st, 0) / max(nmin, 1)
        cv = cv + np.maximum(new_tg - mmax, 0) / max(mmax, 1) + np.maximum(mmin - new_tg, 0) / max(mmin, 1)
        F = np.column_stack([cost / EUR_PER_MEUR, -(D + look)])
        return F, cv, cost, D, look
