"""Constrained NSGA-II over bounded integer genomes.

Feasible individuals always beat infeasible ones, infeasible ones compare by
their violation scalar, and feasible ones by Pareto dominance with both
objectives minimised. Crossover is uniform per gene; mutation resets a gene
to a uniform value within its bounds. All randomness comes from one
``numpy.random.Generator`` (PCG64) seeded by the caller.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InvariantError, NoFeasibleSolution
from .planmodel import BatchEvaluator, HorizonSolution, PlanningInstance, evaluate

RNG_NAME = "numpy.random.Generator(PCG64)"


@dataclass(frozen=True)
class NSGA2Params:
    pop_size: int = 500
    generations: int = 300
    pc: float = 0.9
    pm: float = 0.1
    seed: int = 0
    init_density: float = 0.25  # upper bound of the per-gene change rate in random initial genomes

    def __post_init__(self):
        if self.pop_size < 2:
            raise ValueError("pop_size must be at least 2")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")
        for name in ("pc", "pm", "init_density"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    def manifest(self) -> dict:
        return {**asdict(self), "rng": RNG_NAME}


def dominates(a: Sequence[float], b: Sequence[float], cv_a: float = 0.0, cv_b: float = 0.0) -> bool:
    """Constrained domination of objective vector ``a`` over ``b``."""
    feas_a, feas_b = cv_a <= 0, cv_b <= 0
    if feas_a != feas_b:
        return feas_a
    if not feas_a:
        return cv_a < cv_b
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def domination_matrix(F: np.ndarray, cv: np.ndarray | None = None) -> np.ndarray:
    """``M[i, j]`` is True when individual ``i`` dominates ``j``."""
    F = np.asarray(F, dtype=float)
    n, m = F.shape
    cv = np.zeros(n) if cv is None else np.asarray(cv, dtype=float)
    le = np.ones((n, n), dtype=bool)
    lt = np.zeros((n, n), dtype=bool)
    for j in range(m):
        a, b = F[:, j, None], F[None, :, j]
        le &= a <= b
        lt |= a < b
    feas = cv <= 0
    fi, fj = feas[:, None], feas[None, :]
    return (fi & ~fj) | (fi & fj & le & lt) | (~fi & ~fj & (cv[:, None] < cv[None, :]))


def fast_nondominated_sort(F, cv=None) -> list[np.ndarray]:
    """Partition indices into successive non-dominated fronts."""
    M = domination_matrix(F, cv)
    count = M.sum(axis=0)
    remaining = np.ones(len(count), dtype=bool)
    fronts = []
    while remaining.any():
        front = np.flatnonzero(remaining & (count == 0))
        if len(front) == 0:  # pragma: no cover - domination is acyclic
            raise InvariantError("cyclic domination relation")
        fronts.append(front)
        remaining[front] = False
        count = count - M[front].sum(axis=0)
    return fronts


def crowding_distance(F) -> np.ndarray:
    """Crowding distance within one front; boundary points get ``inf``."""
    F = np.asarray(F, dtype=float)
    n, m = F.shape
    d = np.zeros(n)
    if n <= 2:
        d[:] = np.inf
        return d
    for j in range(m):
        order = np.argsort(F[:, j], kind="stable")
        vals = F[order, j]
        d[order[0]] = d[order[-1]] = np.inf
        span = vals[-1] - vals[0]
        if span <= 0:
            continue
        d[order[1:-1]] += (vals[2:] - vals[:-2]) / span
    return d


def rank_and_crowd(F, cv):
    n = len(F)
    rank = np.empty(n, dtype=int)
    crowd = np.empty(n)
    fronts = fast_nondominated_sort(F, cv)
    for r, front in enumerate(fronts):
        rank[front] = r
        crowd[front] = crowding_distance(F[front])
    return rank, crowd, fronts


def _first_occurrence(G: np.ndarray) -> np.ndarray:
    _, idx = np.unique(G, axis=0, return_index=True)
    mask = np.zeros(len(G), dtype=bool)
    mask[idx] = True
    return mask


def _select_survivors(G, F, cv, size):
    """Elitist truncation of the merged population to ``size`` members.

    Returns the chosen indices with their front rank and crowding distance
    from the merged sort. Duplicate genomes only pad the population when
    there are fewer than ``size`` distinct ones.
    """
    primary = np.flatnonzero(_first_occurrence(G))
    chosen, ranks, crowds = [], [], []
    rank, crowd, fronts = rank_and_crowd(F[primary], cv[primary])
    for front in fronts:
        need = size - len(chosen)
        if len(front) > need:
            front = front[np.argsort(-crowd[front], kind="stable")[:need]]
        chosen.extend(primary[front].tolist())
        ranks.extend(rank[front].tolist())
        crowds.extend(crowd[front].tolist())
        if len(chosen) >= size:
            break
    if len(chosen) < size:
        taken = set(chosen)
        extra = [i for i in range(len(G)) if i not in taken][: size - len(chosen)]
        chosen.extend(extra)
        ranks.extend([len(fronts)] * len(extra))
        crowds.extend([0.0] * len(extra))
    return np.asarray(chosen, dtype=int), np.asarray(ranks, dtype=int), np.asarray(crowds)


def _tournament(rng, rank, crowd, n_out):
    a = rng.integers(0, len(rank), n_out)
    b = rng.integers(0, len(rank), n_out)
    a_wins = (rank[a] < rank[b]) | ((rank[a] == rank[b]) & (crowd[a] >= crowd[b]))
    return np.where(a_wins, a, b)


def _variation(rng, parents, lower, upper, pc, pm):
    n, g = parents.shape
    kids = parents.copy()
    for i in range(0, n - 1, 2):
        if rng.random() < pc:
            swap = rng.random(g) < 0.5
            a, b = kids[i].copy(), kids[i + 1].copy()
            kids[i, swap], kids[i + 1, swap] = b[swap], a[swap]
    mutate = rng.random((n, g)) < pm
    resets = rng.integers(lower, upper + 1, size=(n, g))
    return np.where(mutate, resets, kids)


def initial_population(rng, lower, upper, size, density=0.25, seeds=()):
    """Seed genomes first, then sparse random monotone genomes.

    Each random genome changes every gene with its own rate drawn from
    ``U(0, density)``, so the population spans small and large plans.
    """
    g = len(lower)
    rows = [np.asarray(s, dtype=int) for s in seeds][:size]
    n_rand = size - len(rows)
    rates = rng.uniform(0.0, density, size=(n_rand, 1))
    change = rng.random((n_rand, g)) < rates
    vals = rng.integers(lower, upper + 1, size=(n_rand, g))
    rand = np.where(change, vals, lower[None, :])
    pop = np.vstack(rows + [rand]) if rows else rand
    return pop.astype(int)


@dataclass
class Population:
    G: np.ndarray
    F: np.ndarray
    cv: np.ndarray
    rank: np.ndarray
    crowd: np.ndarray

    def front(self, feasible_only=True) -> np.ndarray:
        idx = np.flatnonzero(self.rank == 0)
        if feasible_only:
            idx = idx[self.cv[idx] <= 0]
        return idx


def nsga2(
    evaluate_batch: Callable[[np.ndarray], tuple],
    lower: np.ndarray,
    upper: np.ndarray,
    params: NSGA2Params,
    seeds: Sequence[Sequence[int]] = (),
    callback: Callable[[int, Population], None] | None = None,
) -> Population:
    """Run NSGA-II and return the final population.

    ``evaluate_batch(G)`` must return ``(F, cv, ...)`` for a genome matrix.
    ``callback(generation, population)`` is invoked after initialisation
    (generation 0) and after every generation.
    """
    lower = np.asarray(lower, dtype=int)
    upper = np.asarray(upper, dtype=int)
    if (upper < lower).any():
        raise ValueError("gene upper bound below lower bound")
    rng = np.random.default_rng(params.seed)
    N = params.pop_size
    G = initial_population(rng, lower, upper, N, params.init_density, seeds)
    F, cv = evaluate_batch(G)[:2]
    rank, crowd, _ = rank_and_crowd(F, cv)
    pop = Population(G, F, cv, rank, crowd)
    if callback:
        callback(0, pop)
    for gen in range(1, params.generations + 1):
        parents = pop.G[_tournament(rng, pop.rank, pop.crowd, N)]
        kids = _variation(rng, parents, lower, upper, params.pc, params.pm)
        kF, kcv = evaluate_batch(kids)[:2]
        G = np.vstack([pop.G, kids])
        F = np.vstack([pop.F, kF])
        cv = np.concatenate([pop.cv, kcv])
        keep, rank, crowd = _select_survivors(G, F, cv, N)
        pop = Population(G[keep], F[keep], cv[keep], rank, crowd)
        if callback:
            callback(gen, pop)
    return pop


def evolve(
    inst: PlanningInstance,
    prev: HorizonSolution,
    params: NSGA2Params,
    k: int = 1,
    gamma: float | None = None,
    callback=None,
) -> list[HorizonSolution]:
    """Pareto set of feasible layouts for horizon ``k`` starting from ``prev``.

    Gene bounds start at the previous layout so no genome can shrink a
    facility. The previous layout itself (zero cost) seeds the population.
    Returned solutions are unique by genome and sorted by cost, then by
    decreasing coverage.
    """
    ev = BatchEvaluator(inst, prev, k, gamma)
    lower, upper = ev.lower, ev.upper
    pop = nsga2(ev, lower, upper, params, seeds=[lower], callback=callback)
    idx = pop.front(feasible_only=True)
    if len(idx) == 0:
        raise NoFeasibleSolution(
            f"horizon {k}: no feasible layout found (best violation {pop.cv.min():.4g})", horizon=k
        )
    genomes = np.unique(pop.G[idx], axis=0)
    n_st = len(inst.stations)
    out = []
    for g in genomes:
        sol = evaluate((g[:n_st], g[n_st:]), prev, inst, k, ev.gamma)
        if not sol.feasible:
            raise InvariantError(f"optimiser returned an infeasible layout: {sol.violations}")
        out.append(sol)
    out.sort(key=lambda s: (s.cost, -s.coverage - s.lookahead_coverage, s.genome))
    return out
