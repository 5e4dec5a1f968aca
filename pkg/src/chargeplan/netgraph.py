"""Highway graph container and node centrality indicators.

Degree, closeness and betweenness are computed on the junction graph and
summed into a composite score used to rank junctions for candidate
generation. Betweenness uses Brandes' accumulation, so every shortest path
is counted with its multiplicity.
"""

from __future__ import annotations

import heapq
import math
import re
from collections import deque
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DanglingArc, DisconnectedGraph, InputError, TooFewNodes

_NUMERIC = re.compile(r"^-?\d+$")


def node_sort_key(node_id):
    """Natural ordering for node ids: numeric ids numerically, then strings."""
    s = str(node_id)
    if _NUMERIC.match(s):
        return (0, int(s), s)
    return (1, 0, s)


@dataclass(frozen=True)
class Arc:
    arc_id: str
    u: str
    v: str
    length_m: float
    polyline: tuple | None = None  # ((x, y), ...) from u to v, endpoints included

    def other(self, node):
        return self.v if node == self.u else self.u


@dataclass(frozen=True, eq=False)
class HighwayGraph:
    """Undirected simple graph of highway junctions.

    ``nodes`` maps node id to an ``(x, y)`` pair; in ``wgs84`` mode that is
    (lon, lat) in degrees, in ``planar`` mode it is metres.
    """

    nodes: Mapping[str, tuple]
    arcs: tuple[Arc, ...]
    coordinate_mode: str = "wgs84"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.coordinate_mode not in ("wgs84", "planar"):
            raise InputError(f"unknown coordinate_mode {self.coordinate_mode!r}")
        object.__setattr__(self, "nodes", MappingProxyType(dict(self.nodes)))
        object.__setattr__(self, "arcs", tuple(self.arcs))
        seen = set()
        for arc in self.arcs:
            if arc.u == arc.v:
                raise DanglingArc(f"arc {arc.arc_id} is a self-loop on node {arc.u}")
            for end in (arc.u, arc.v):
                if end not in self.nodes:
                    raise DanglingArc(f"arc {arc.arc_id} references missing node {end}")
            if not (arc.length_m > 0 and math.isfinite(arc.length_m)):
                raise InputError(f"arc {arc.arc_id} has non-positive length {arc.length_m}")
            key = frozenset((arc.u, arc.v))
            if key in seen:
                raise InputError(f"duplicate arc between {arc.u} and {arc.v}")
            seen.add(key)

    @property
    def node_ids(self) -> list[str]:
        if "ids" not in self._cache:
            self._cache["ids"] = sorted(self.nodes, key=node_sort_key)
        return list(self._cache["ids"])

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_arcs(self) -> int:
        return len(self.arcs)

    def index(self) -> dict[str, int]:
        return {nid: i for i, nid in enumerate(self.node_ids)}

    def adjacency(self, weighted=False) -> list[list[tuple[int, float]]]:
        """Index-based adjacency lists, neighbours sorted by index."""
        key = ("adj", weighted)
        if key not in self._cache:
            idx = self.index()
            adj = [[] for _ in idx]
            for arc in self.arcs:
                w = arc.length_m if weighted else 1.0
                adj[idx[arc.u]].append((idx[arc.v], w))
                adj[idx[arc.v]].append((idx[arc.u], w))
            for row in adj:
                row.sort()
            self._cache[key] = adj
        return self._cache[key]

    def degree(self, node_id) -> int:
        return len(self.adjacency()[self.index()[node_id]])

    def incident_arcs(self, node_id) -> list[Arc]:
        return sorted(
            (a for a in self.arcs if node_id in (a.u, a.v)), key=lambda a: node_sort_key(a.arc_id)
        )

    def components(self) -> list[list[str]]:
        ids = self.node_ids
        adj = self.adjacency()
        seen = [False] * len(ids)
        comps = []
        for s in range(len(ids)):
            if seen[s]:
                continue
            seen[s] = True
            comp, queue = [], deque([s])
            while queue:
                u = queue.popleft()
                comp.append(ids[u])
                for v, _ in adj[u]:
                    if not seen[v]:
                        seen[v] = True
                        queue.append(v)
            comps.append(sorted(comp, key=node_sort_key))
        return comps

    def is_connected(self) -> bool:
        return len(self.components()) <= 1

    def relabel(self, mapping: Mapping[str, str]) -> "HighwayGraph":
        nodes = {mapping[k]: v for k, v in self.nodes.items()}
        arcs = tuple(
            Arc(a.arc_id, mapping[a.u], mapping[a.v], a.length_m, a.polyline) for a in self.arcs
        )
        return HighwayGraph(nodes, arcs, self.coordinate_mode)

    def scaled(self, factor: float) -> "HighwayGraph":
        arcs = tuple(
            Arc(a.arc_id, a.u, a.v, a.length_m * factor, a.polyline) for a in self.arcs
        )
        return HighwayGraph(dict(self.nodes), arcs, self.coordinate_mode)


def graph_from_edges(edges: Iterable[Sequence], coords=None, mode="planar") -> HighwayGraph:
    """Build a graph from ``(u, v)`` or ``(u, v, length)`` tuples.

    Handy for tests and notebooks; coordinates default to the origin.
    """
    edges = list(edges)
    nodes = {}
    arcs = []
    for n, e in enumerate(edges):
        u, v = str(e[0]), str(e[1])
        length = float(e[2]) if len(e) > 2 else 1.0
        nodes.setdefault(u, (0.0, 0.0))
        nodes.setdefault(v, (0.0, 0.0))
        arcs.append(Arc(str(n), u, v, length))
    if coords:
        for k, xy in coords.items():
            nodes[str(k)] = tuple(xy)
    return HighwayGraph(nodes, tuple(arcs), mode)


# -- shortest paths -----------------------------------------------------------

def _close(a, b):
    return abs(a - b) <= 1e-9 * max(1.0, abs(a), abs(b))


def _sssp(adj, s, weighted):
    """Single-source shortest paths with path counts.

    Returns (order, dist, sigma, preds) where ``order`` lists settled nodes
    by non-decreasing distance.
    """
    n = len(adj)
    dist = [math.inf] * n
    sigma = [0.0] * n
    preds = [[] for _ in range(n)]
    order = []
    dist[s] = 0.0
    sigma[s] = 1.0
    if not weighted:
        queue = deque([s])
        while queue:
            u = queue.popleft()
            order.append(u)
            for v, _ in adj[u]:
                if dist[v] == math.inf:
                    dist[v] = dist[u] + 1.0
                    queue.append(v)
                if dist[v] == dist[u] + 1.0:
                    sigma[v] += sigma[u]
                    preds[v].append(u)
        return order, dist, sigma, preds

    done = [False] * n
    heap = [(0.0, s, s)]
    while heap:
        d, _, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        order.append(u)
        for v, w in adj[u]:
            nd = d + w
            if done[v]:
                continue
            if dist[v] == math.inf or (nd < dist[v] and not _close(nd, dist[v])):
                dist[v] = nd
                sigma[v] = sigma[u]
                preds[v] = [u]
                heapq.heappush(heap, (nd, v, v))
            elif _close(nd, dist[v]):
                sigma[v] += sigma[u]
                preds[v].append(u)
    return order, dist, sigma, preds


def _require_connected(g: HighwayGraph):
    comps = g.components()
    if len(comps) > 1:
        raise DisconnectedGraph(comps)


def shortest_path_lengths(g: HighwayGraph, weighted: bool = False):
    """All-pairs shortest path lengths.

    Returns ``(node_ids, D)`` where ``D[i, j]`` is the hop count (or summed
    arc length when ``weighted``) between ``node_ids[i]`` and ``node_ids[j]``.
    """
    _require_connected(g)
    adj = g.adjacency(weighted)
    n = len(adj)
    D = np.zeros((n, n))
    for s in range(n):
        _, dist, _, _ = _sssp(adj, s, weighted)
        D[s] = dist
    # Dijkstra sums in different orders per source; keep the matrix exactly symmetric.
    D = np.minimum(D, D.T)
    return g.node_ids, D


# -- indicators ---------------------------------------------------------------

def degree_centrality(g: HighwayGraph, normalization: str = "n_minus_1") -> dict[str, float]:
    """Degree divided by ``N - 1`` or, with ``"max_degree"``, by the largest degree."""
    if g.n_nodes < 2:
        raise TooFewNodes(f"degree centrality needs at least 2 nodes, got {g.n_nodes}")
    adj = g.adjacency()
    degs = [len(row) for row in adj]
    if normalization == "n_minus_1":
        denom = g.n_nodes - 1
    elif normalization == "max_degree":
        denom = max(degs) or 1
    else:
        raise ValueError(f"unknown degree normalization {normalization!r}")
    return {nid: degs[i] / denom for i, nid in enumerate(g.node_ids)}


def closeness_centrality(g: HighwayGraph, weighted: bool = False, normalized: bool = True):
    """Inverse total distance to every other node.

    ``normalized`` multiplies by ``N - 1`` so a node adjacent to all others
    scores 1 on the hop metric.
    """
    if g.n_nodes < 2:
        raise TooFewNodes(f"closeness needs at least 2 nodes, got {g.n_nodes}")
    ids, D = shortest_path_lengths(g, weighted)
    totals = D.sum(axis=1)
    scale = (g.n_nodes - 1) if normalized else 1.0
    return {nid: scale / totals[i] for i, nid in enumerate(ids)}


def betweenness_centrality(g: HighwayGraph, weighted: bool = False, normalized: bool = True):
    """Share of shortest paths between other node pairs that pass through each node.

    Raw values sum over unordered pairs; normalization divides by
    ``(N - 1)(N - 2) / 2``.
    """
    _require_connected(g)
    adj = g.adjacency(weighted)
    n = len(adj)
    bc = [0.0] * n
    for s in range(n):
        order, _, sigma, preds = _sssp(adj, s, weighted)
        delta = [0.0] * n
        for w in reversed(order):
            coeff = (1.0 + delta[w]) / sigma[w]
            for v in preds[w]:
                delta[v] += sigma[v] * coeff
            if w != s:
                bc[w] += delta[w]
    # each unordered pair was visited from both ends
    bc = [b / 2.0 for b in bc]
    if normalized:
        denom = (n - 1) * (n - 2) / 2.0
        bc = [b / denom if denom > 0 else 0.0 for b in bc]
    return {nid: bc[i] for i, nid in enumerate(g.node_ids)}


# -- composite ranking --------------------------------------------------------

@dataclass(frozen=True)
class CentralityRow:
    node_id: str
    dc: float
    cc: float
    bc: float
    score: float
    rank: int


@dataclass(frozen=True)
class CentralityReport:
    rows: tuple[CentralityRow, ...]  # ordered by rank

    def top(self, k: int) -> list[CentralityRow]:
        return list(self.rows[:k])

    def by_node(self) -> dict[str, CentralityRow]:
        return {r.node_id: r for r in self.rows}

    def table(self) -> list[tuple]:
        """Rows in ``rank, score, dc, cc, bc, node_id`` column order."""
        return [(r.rank, r.score, r.dc, r.cc, r.bc, r.node_id) for r in self.rows]


def rank_scores(indicators: Mapping[str, Sequence[float]]) -> CentralityReport:
    """Rank nodes by ``dc + cc + bc``, highest first, ties by node id."""
    scored = []
    for nid, (dc, cc, bc) in indicators.items():
        scored.append((nid, float(dc), float(cc), float(bc), float(dc) + float(cc) + float(bc)))
    scored.sort(key=lambda t: (-t[4], node_sort_key(t[0])))
    rows = tuple(
        CentralityRow(nid, dc, cc, bc, score, rank)
        for rank, (nid, dc, cc, bc, score) in enumerate(scored, start=1)
    )
    return CentralityReport(rows)


def composite_rank(
    g: HighwayGraph,
    weighted: bool = False,
    degree_normalization: str = "max_degree",
    raw_closeness: bool = False,
) -> CentralityReport:
    dc = degree_centrality(g, degree_normalization)
    cc = closeness_centrality(g, weighted, normalized=not raw_closeness)
    bc = betweenness_centrality(g, weighted)
    return rank_scores({nid: (dc[nid], cc[nid], bc[nid]) for nid in g.node_ids})
