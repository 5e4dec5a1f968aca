"""Slow, obviously-correct reference implementations used by the tests.

Nothing here imports the library's algorithms; each function recomputes a
quantity from its definition.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


# -- graphs -------------------------------------------------------------------

def random_connected_edges(rng, n, extra, weighted=False, integer_lengths=False):
    """Random spanning tree plus ``extra`` chords; returns ``(u, v, length)`` tuples."""
    edges = {}
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges[(u, v)] = None
    tries = 0
    while len(edges) < n - 1 + extra and tries < 50 * n:
        tries += 1
        u, v = sorted(int(a) for a in rng.choice(n, 2, replace=False))
        edges.setdefault((u, v), None)
    out = []
    for u, v in sorted(edges):
        if not weighted:
            w = 1.0
        elif integer_lengths:
            w = float(rng.integers(1, 4))
        else:
            w = float(rng.uniform(0.5, 5.0))
        out.append((u, v, w))
    return out


def floyd_warshall(n, edges, weighted=True):
    D = np.full((n, n), math.inf)
    np.fill_diagonal(D, 0.0)
    for u, v, w in edges:
        w = w if weighted else 1.0
        D[u, v] = min(D[u, v], w)
        D[v, u] = min(D[v, u], w)
    for k in range(n):
        D = np.minimum(D, D[:, k : k + 1] + D[k : k + 1, :])
    return D


def _close(a, b):
    return abs(a - b) <= 1e-9 * max(1.0, abs(a), abs(b))


def all_shortest_paths(n, edges, s, t, D, weighted=True):
    """Every shortest s-t path, found by depth-first enumeration."""
    nbrs = {i: [] for i in range(n)}
    for u, v, w in edges:
        w = w if weighted else 1.0
        nbrs[u].append((v, w))
        nbrs[v].append((u, w))
    paths = []

    def walk(path, dist):
        u = path[-1]
        if u == t:
            paths.append(tuple(path))
            return
        for v, w in nbrs[u]:
            if v in path:
                continue
            if _close(dist + w + D[v, t], D[s, t]):
                walk(path + [v], dist + w)

    walk([s], 0.0)
    return paths


def betweenness_by_enumeration(n, edges, weighted=True, normalized=True):
    D = floyd_warshall(n, edges, weighted)
    bc = np.zeros(n)
    for s, t in itertools.combinations(range(n), 2):
        paths = all_shortest_paths(n, edges, s, t, D, weighted)
        for p in paths:
            for v in p[1:-1]:
                bc[v] += 1.0 / len(paths)
    if normalized and n > 2:
        bc /= (n - 1) * (n - 2) / 2
    return bc


def closeness_oracle(n, edges, weighted=True):
    D = floyd_warshall(n, edges, weighted)
    return (n - 1) / D.sum(axis=1)


def degree_oracle(n, edges, by="n_minus_1"):
    deg = np.zeros(n)
    for u, v, _ in edges:
        deg[u] += 1
        deg[v] += 1
    return deg / (n - 1 if by == "n_minus_1" else deg.max())


# -- geometry -----------------------------------------------------------------

def point_segment_distance(p, a, b):
    """Planar distance from ``p`` to segment ``ab``."""
    p, a, b = (np.asarray(v, dtype=float) for v in (p, a, b))
    ab = b - a
    L = ab @ ab
    t = 0.0 if L == 0 else min(1.0, max(0.0, (p - a) @ ab / L))
    return float(np.linalg.norm(p - (a + t * ab)))


def haversine_m(a, b):
    lon1, lat1, lon2, lat2 = map(math.radians, (a[0], a[1], b[0], b[1]))
    h = math.sin((lat2 - lat1) / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    return 2 * 6_371_000.0 * math.asin(math.sqrt(h))


# -- planning model -----------------------------------------------------------

def cost_meur(prev_x, prev_y, x, y, c_s, c_t_eur):
    """Station upgrade table lookups plus per-pile cost, in MEUR."""
    total = 0.0
    for a, b in zip(prev_x, x):
        total += c_s[a][b]
    for a, b in zip(prev_y, y):
        total += (b - a) * c_t_eur / 1e6
    return total


def coverage(x, y, q_st, q_tg, p, cap_l, cap_t):
    total = 0.0
    for i in range(len(x)):
        total += min(q_st[i] * p, cap_l[x[i]])
    for j in range(len(y)):
        total += min(q_tg[j] * p, cap_t * y[j])
    return total


# -- Pareto sets --------------------------------------------------------------

def nondominated_mask(F):
    """Minimisation; a point survives if nothing is at least as good everywhere and better somewhere."""
    F = np.asarray(F, dtype=float)
    keep = np.ones(len(F), dtype=bool)
    for i in range(len(F)):
        for j in range(len(F)):
            if i != j and np.all(F[j] <= F[i]) and np.any(F[j] < F[i]):
                keep[i] = False
                break
    return keep


def front_layers(F):
    """Peel non-dominated layers one at a time; returns a rank per row (0 = best)."""
    F = np.asarray(F, dtype=float)
    rank = np.full(len(F), -1)
    left = np.arange(len(F))
    r = 0
    while len(left):
        mask = nondominated_mask(F[left])
        rank[left[mask]] = r
        left = left[~mask]
        r += 1
    return rank


def crowding_oracle(F):
    """Textbook crowding distance, one objective at a time."""
    F = np.asarray(F, dtype=float)
    n, m = F.shape
    d = np.zeros(n)
    if n <= 2:
        return np.full(n, math.inf)
    for k in range(m):
        order = sorted(range(n), key=lambda i: (F[i, k], i))
        lo, hi = F[order[0], k], F[order[-1], k]
        d[order[0]] = d[order[-1]] = math.inf
        if hi == lo:
            continue
        for a in range(1, n - 1):
            d[order[a]] += (F[order[a + 1], k] - F[order[a - 1], k]) / (hi - lo)
    return d


def small_instance(rng, max_stations=6, max_togo=2):
    """One-horizon instance with binary station scales, small enough to enumerate."""
    from chargeplan.candidates import CandidateSite
    from chargeplan.geodata import GeoPoint
    from chargeplan.planmodel import InstanceParams, PlanningInstance

    n_st = int(rng.integers(2, max_stations + 1))
    n_tg = int(rng.integers(0, max_togo + 1))
    n_piles = 3
    params = InstanceParams(
        dist_min=3.0, s=1, n=n_piles, c_t=float(rng.choice([2000, 20000, 50000])),
        cap_l=(0.0, 30.0), cap_t=2.0, p_k=(float(rng.uniform(0.2, 1.0)),),
        b_k=(float(np.round(rng.uniform(0.6, 2.5), 3)),),
        Nmin_k=(0,), Nmax_k=(int(rng.integers(2, n_st + 1)),), Mmin_k=(0,), Mmax_k=(2,),
        c_s=((0.0, float(np.round(rng.uniform(0.3, 0.7), 2))), (math.nan, 0.0)),
        gamma_k=(0.0,),
    )
    stations = tuple(
        CandidateSite(f"s{i}", "station", "existing",
                      GeoPoint(*map(float, rng.uniform(0, 8000, 2))), float(rng.uniform(20, 200)))
        for i in range(n_st)
    )
    togo = tuple(
        CandidateSite(f"t{j}", "togo", "togo_poi", GeoPoint(0.0, -1e5 * (j + 1)), float(rng.uniform(5, 60)))
        for j in range(n_tg)
    )
    return PlanningInstance(stations, togo, params, "planar")


def enumerate_pareto(inst, prev, k=1, gamma=0.0):
    """Objective vectors (cost, -coverage) of the exact feasible Pareto front."""
    from chargeplan.planmodel import evaluate

    P = inst.params
    ranges = [range(a, P.s + 1) for a in prev.x] + [range(b, P.n + 1) for b in prev.y]
    n = len(prev.x)
    pts = []
    for g in itertools.product(*ranges):
        sol = evaluate((g[:n], g[n:]), prev, inst, k, gamma)
        if sol.feasible:
            pts.append(sol.objectives)
    pts = np.unique(np.asarray(pts), axis=0)
    return pts[nondominated_mask(pts)]
