"""Rolling multi-horizon planning, scenario selection policies and budget sweeps."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import InvariantError, NoFeasibleSolution
from .nsga2 import NSGA2Params, evolve
from .planmodel import HorizonSolution, PlanningInstance, horizon_cost, horizon_coverage

log = logging.getLogger(__name__)

PAPER_THETAS = (0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6)


@dataclass(frozen=True)
class ScenarioPolicy:
    name: str
    selection: str  # "max" | "median"
    myopic: bool  # ignore next-horizon coverage in the objective

    def gammas(self, inst: PlanningInstance) -> tuple[float, ...]:
        if self.myopic:
            return tuple(0.0 for _ in range(inst.horizons))
        return inst.params.gamma_k


MAX_COVERAGE_LOOKAHEAD = ScenarioPolicy("max_coverage_lookahead", "max", False)
MEDIAN_COVERAGE_LOOKAHEAD = ScenarioPolicy("median_coverage_lookahead", "median", False)
MAX_COVERAGE_MYOPIC = ScenarioPolicy("max_coverage_myopic", "max", True)

POLICIES = {
    "scenario1": MAX_COVERAGE_LOOKAHEAD,
    "scenario2": MEDIAN_COVERAGE_LOOKAHEAD,
    "scenario3": MAX_COVERAGE_MYOPIC,
}


def get_policy(name: str | ScenarioPolicy) -> ScenarioPolicy:
    if isinstance(name, ScenarioPolicy):
        return name
    for key, pol in POLICIES.items():
        if name in (key, pol.name):
            return pol
    raise ValueError(f"unknown policy {name!r}; expected one of {sorted(POLICIES)}")


def select_solution(front: Sequence[HorizonSolution], policy: ScenarioPolicy) -> HorizonSolution:
    """Pick one layout from a Pareto set by current-horizon coverage.

    ``max`` takes the largest coverage (ties: larger look-ahead term, then
    lower cost). ``median`` takes the middle element by coverage, the lower
    of the two middles for even-sized fronts.
    """
    if not front:
        raise NoFeasibleSolution("empty Pareto set")
    if policy.selection == "max":
        return min(front, key=lambda s: (-s.coverage, -s.lookahead_coverage, s.cost, s.genome))
    if policy.selection == "median":
        ordered = sorted(front, key=lambda s: (s.coverage, s.cost, s.genome))
        return ordered[(len(ordered) - 1) // 2]
    raise ValueError(f"unknown selection rule {policy.selection!r}")


def run_horizon(inst, prev, k, policy, seed, params: NSGA2Params | None = None):
    """Optimise horizon ``k`` from ``prev``; returns ``(front, selected)``."""
    policy = get_policy(policy)
    params = replace(params or NSGA2Params(), seed=seed)
    gamma = policy.gammas(inst)[k - 1]
    front = evolve(inst, prev, params, k, gamma)
    return front, select_solution(front, policy)


@dataclass(frozen=True)
class TimelineEntry:
    k: int
    solution: HorizonSolution
    cost: float  # MEUR
    coverage: float  # veh/h at this horizon's penetration
    stations: int  # active stations
    togo: int  # active to-go sites
    piles: int
    new_stations: int
    new_togo: int


@dataclass(frozen=True)
class PlanTimeline:
    policy: str
    seed: int
    entries: tuple[TimelineEntry, ...]  # horizon 0 first
    fronts: tuple[tuple[HorizonSolution, ...], ...]  # one per horizon 1..K

    @property
    def total_cost(self) -> float:
        return float(sum(e.cost for e in self.entries))

    @property
    def final_coverage(self) -> float:
        return self.entries[-1].coverage

    @property
    def coverages(self) -> list[float]:
        return [e.coverage for e in self.entries[1:]]

    @property
    def costs(self) -> list[float]:
        return [e.cost for e in self.entries[1:]]

    def check(self, inst: PlanningInstance, theta: float = 1.0):
        """Raise ``InvariantError`` if the timeline breaks build monotonicity or budgets."""
        for a, b in zip(self.entries, self.entries[1:]):
            if any(v < u for u, v in zip(a.solution.x, b.solution.x)) or any(
                v < u for u, v in zip(a.solution.y, b.solution.y)
            ):
                raise InvariantError(f"horizon {b.k} shrinks a facility")
            if b.cost > inst.params.b_k[b.k - 1] + 1e-9:
                raise InvariantError(f"horizon {b.k} cost {b.cost} exceeds its budget")
        if self.entries[0].cost != 0:
            raise InvariantError("horizon 0 must have zero cost")


def _entry(k, sol, prev, inst):
    x, y = np.asarray(sol.x), np.asarray(sol.y)
    px, py = np.asarray(prev.x), np.asarray(prev.y)
    return TimelineEntry(
        k=k,
        solution=sol,
        cost=0.0 if k == 0 else horizon_cost(prev, sol, inst),
        coverage=horizon_coverage(sol, inst, max(k, 1)),
        stations=int((x > 0).sum()),
        togo=int((y > 0).sum()),
        piles=int(y.sum()),
        new_stations=int(((px == 0) & (x > 0)).sum()),
        new_togo=int(((py == 0) & (y > 0)).sum()),
    )


def run_scenario(
    inst: PlanningInstance,
    layout0: Mapping[str, int] | None = None,
    policy="scenario1",
    seed: int = 0,
    params: NSGA2Params | None = None,
) -> PlanTimeline:
    """Optimise horizons 1..K in sequence; horizon ``k`` uses seed ``seed + k``."""
    policy = get_policy(policy)
    if layout0 is not None:
        inst = inst.with_layout(layout0)
    prev = inst.initial_solution()
    entries = [_entry(0, prev, prev, inst)]
    fronts = []
    for k in range(1, inst.horizons + 1):
        try:
            front, chosen = run_horizon(inst, prev, k, policy, seed + k, params)
        except NoFeasibleSolution as exc:
            exc.horizon = k
            raise
        entries.append(_entry(k, chosen, prev, inst))
        fronts.append(tuple(front))
        prev = chosen
    return PlanTimeline(policy.name, seed, tuple(entries), tuple(fronts))


def scenario_ensemble(inst, policy, seeds: Sequence[int], params=None, layout0=None) -> list[PlanTimeline]:
    return [run_scenario(inst, layout0, policy, s, params) for s in seeds]


@dataclass(frozen=True)
class SweepRow:
    theta: float
    coverages: tuple[float, ...]  # mean per horizon
    total_cost: float  # mean, MEUR
    cost_pct: float  # relative to theta = 1.0
    coverage_pct: float  # final-horizon coverage relative to theta = 1.0


def sensitivity_sweep(
    inst: PlanningInstance,
    layout0: Mapping[str, int] | None = None,
    policy="scenario1",
    thetas: Sequence[float] = PAPER_THETAS,
    seed: int | Sequence[int] = 0,
    params: NSGA2Params | None = None,
) -> list[SweepRow]:
    """Re-run a scenario with every budget multiplied by each ``theta``.

    With several seeds the per-horizon coverage and total cost are averaged.
    Percentages are relative to ``theta = 1.0`` (or the first theta when
    1.0 is not in the list).
    """
    if any(t < 0 for t in thetas):
        raise ValueError("budget factors must be non-negative")
    seeds = [seed] if isinstance(seed, (int, np.integer)) else list(seed)
    raw = []
    for t in thetas:
        runs = scenario_ensemble(inst.with_budget_factor(t), policy, seeds, params, layout0)
        cov = tuple(float(np.mean([r.coverages[h] for r in runs])) for h in range(inst.horizons))
        raw.append((float(t), cov, float(np.mean([r.total_cost for r in runs]))))
    ref = next((r for r in raw if abs(r[0] - 1.0) < 1e-12), raw[0])
    rows = []
    for t, cov, cost in raw:
        rows.append(SweepRow(
            t, cov, cost,
            100.0 * cost / ref[2] if ref[2] > 0 else float("nan"),
            100.0 * cov[-1] / ref[1][-1] if ref[1][-1] > 0 else float("nan"),
        ))
    return rows
