"""Polynomial-time route construction.

All searches run on a node-split directed graph: each demand node ``v``
becomes an arc ``(v, "in") -> (v, "out")`` carrying the node length, and
every undirected edge ``{a, b}`` becomes two zero-length arcs
``a_out -> b_in`` and ``b_out -> a_in``.  Ties between equal-length routes
go to fewer hops, then to the lexicographically smaller node-id sequence.
"""
from __future__ import annotations

import heapq
import logging
import math
from collections import deque
from dataclasses import dataclass, field

from .analytic import transform_probabilities, transformed_node_probability
from .model import DisconnectedError, Network, Path, PathPair

log = logging.getLogger(__name__)

# p~ at or above this is a sure failure (length +inf)
SURE_FAILURE = 1.0 - 1e-15
# stand-in for +inf in the pair search, where lengths get negated
_BIG_LENGTH = 1e9

IN, OUT = "in", "out"


@dataclass
class LengthedGraph:
    """Node-split directed graph ``G'``."""

    arcs: dict[tuple, dict[tuple, float]] = field(default_factory=dict)
    node_length: dict[str, float] = field(default_factory=dict)

    def add_arc(self, a: tuple, b: tuple, length: float) -> None:
        self.arcs.setdefault(a, {})[b] = length
        self.arcs.setdefault(b, {})

    def remove_arc(self, a: tuple, b: tuple) -> None:
        del self.arcs[a][b]

    def split(self, v: str) -> tuple[tuple, tuple]:
        return (v, IN), (v, OUT)


def node_lengths(net: Network) -> dict[str, float]:
    """-ln(1 - p~(v)) for every demand node; terminals get 0."""
    pt = transform_probabilities(net)
    out = {}
    for v in sorted(net.demand_nodes):
        q = transformed_node_probability(net, v, pt)
        out[v] = math.inf if q >= SURE_FAILURE else -math.log1p(-q)
    return out


def build_split_graph(
    net: Network, lengths: dict[str, float], skip_direct: bool = False
) -> LengthedGraph:
    g = LengthedGraph(node_length=dict(lengths))
    for v in sorted(net.demand_nodes):
        vin, vout = g.split(v)
        g.add_arc(vin, vout, lengths[v])
    for a, b in sorted(net.edges):
        if a not in net.demand_nodes or b not in net.demand_nodes or a == b:
            continue
        if skip_direct and net.terminals is not None and {a, b} == set(net.terminals):
            continue
        g.add_arc((a, OUT), (b, IN), 0.0)
        g.add_arc((b, OUT), (a, IN), 0.0)
    return g


def _route_nodes(arc_path: list[tuple]) -> tuple[str, ...]:
    out: list[str] = []
    for v, _ in arc_path:
        if not out or out[-1] != v:
            out.append(v)
    return tuple(out)


def path_length(lengths: dict[str, float], path: Path) -> float:
    return math.fsum(lengths[v] for v in path)


# -- max capacity ------------------------------------------------------------


def max_capacity_path(net: Network) -> tuple[Path, float]:
    """s-t path maximizing the smallest interior supply count.

    Returns ``(path, k)``; ``k`` is ``math.inf`` when the best path has no
    interior node (direct s-t edge).
    """
    s, t = net.s, net.t

    def cap(v: str) -> float:
        return math.inf if net.is_terminal(v) else len(net.supplies(v))

    # widest-path label setting on node capacities
    best = {s: math.inf}
    heap = [(-math.inf, s)]
    done = set()
    while heap:
        c, v = heapq.heappop(heap)
        c = -c
        if v in done:
            continue
        done.add(v)
        if v == t:
            break
        for w in net.neighbors(v):
            if w in done:
                continue
            nc = min(c, cap(w))
            if nc > best.get(w, -1):
                best[w] = nc
                heapq.heappush(heap, (-nc, w))
    if t not in done:
        raise DisconnectedError(f"no path between {s} and {t}")
    k = best[t]
    allowed = {v for v in net.demand_nodes if cap(v) >= k}
    return _fewest_hops_lex(net, allowed), k


def _fewest_hops_lex(net: Network, allowed: set[str]) -> Path:
    """Lexicographically smallest among the fewest-hop s-t paths in ``allowed``."""
    s, t = net.s, net.t
    dist = {t: 0}
    q = deque([t])
    while q:
        v = q.popleft()
        for w in net.neighbors(v):
            if w in allowed and w not in dist:
                dist[w] = dist[v] + 1
                q.append(w)
    if s not in dist:
        raise DisconnectedError(f"no path between {s} and {t}")
    out = [s]
    while out[-1] != t:
        v = out[-1]
        out.append(min(w for w in net.neighbors(v) if dist.get(w) == dist[v] - 1))
    return Path(out)


# -- single reliable path ----------------------------------------------------


def shortest_node_path(net: Network, lengths: dict[str, float]) -> Path:
    """Minimum summed node length s-t path (nonnegative lengths).

    Labels are ``(length, hops, node sequence)``; length is recomputed with
    ``fsum`` so that it does not depend on the order nodes were added.
    """
    s, t = net.s, net.t
    heap = [(lengths[s], 0, (s,))]
    settled: set[str] = set()
    while heap:
        L, h, seq = heapq.heappop(heap)
        v = seq[-1]
        if v in settled:
            continue
        settled.add(v)
        if v == t:
            return Path(seq)
        for w in net.neighbors(v):
            if w in settled:
                continue
            nseq = seq + (w,)
            heapq.heappush(heap, (math.fsum(lengths[x] for x in nseq), h + 1, nseq))
    raise DisconnectedError(f"no path between {s} and {t}")


def approx_reliable_path(net: Network) -> Path:
    """Shortest path under independent-failure surrogate lengths -ln(1 - p~(v)).

    Its failure probability is within n_d^n_s of the most reliable path.
    """
    lengths = node_lengths(net)
    path = shortest_node_path(net, lengths)
    if math.isinf(path_length(lengths, path)):
        log.warning("every s-t path contains a surely failing node: failure probability 1")
    return path


# -- disjoint pair -----------------------------------------------------------


def _dijkstra(g: LengthedGraph, src: tuple, dst: tuple) -> list[tuple]:
    heap = [(0.0, 0, (src,))]
    settled = set()
    while heap:
        L, h, seq = heapq.heappop(heap)
        v = seq[-1]
        if v in settled:
            continue
        settled.add(v)
        if v == dst:
            return list(seq)
        for w, ln in sorted(g.arcs[v].items()):
            if w not in settled:
                heapq.heappush(heap, (L + ln, h + 1, seq + (w,)))
    raise DisconnectedError("no s-t path")


def _bellman_ford(g: LengthedGraph, src: tuple, dst: tuple) -> list[tuple]:
    """Label-correcting shortest path; raises if a negative cycle exists."""
    nodes = sorted(g.arcs)
    dist = {v: math.inf for v in nodes}
    pred: dict[tuple, tuple] = {}
    dist[src] = 0.0
    for _ in range(len(nodes)):
        changed = False
        for v in nodes:
            if dist[v] == math.inf:
                continue
            for w, ln in sorted(g.arcs[v].items()):
                nd = dist[v] + ln
                if nd < dist[w] - 1e-12:
                    dist[w] = nd
                    pred[w] = v
                    changed = True
        if not changed:
            break
    else:
        raise AssertionError("negative cycle in residual graph")
    if dist[dst] == math.inf:
        raise DisconnectedError("no disjoint pair exists")
    seq = [dst]
    while seq[-1] != src:
        seq.append(pred[seq[-1]])
    return seq[::-1]


def _decompose(arcs: set[tuple[tuple, tuple]], src: tuple, dst: tuple) -> list[list[tuple]]:
    succ: dict[tuple, list[tuple]] = {}
    for a, b in sorted(arcs):
        succ.setdefault(a, []).append(b)
    out = []
    for _ in range(len(succ.get(src, []))):
        seq = [src]
        while seq[-1] != dst:
            seq.append(succ[seq[-1]].pop(0))
        out.append(seq)
    return out


def reliable_pair_heuristic(net: Network) -> PathPair:
    """Two node-disjoint s-t paths of minimum total surrogate length.

    Shortest augmenting path on the node-split graph: route one shortest
    path, reverse and negate its arcs, route a second path in the residual
    graph, then cancel arcs used in opposite directions.  The direct s-t
    edge, if present, is not used.
    """
    lengths = node_lengths(net)
    finite = {v: (_BIG_LENGTH if math.isinf(x) else x) for v, x in lengths.items()}
    g = build_split_graph(net, finite, skip_direct=True)
    src, dst = (net.s, OUT), (net.t, IN)
    try:
        p1 = _dijkstra(g, src, dst)
    except DisconnectedError:
        raise DisconnectedError("no disjoint pair exists") from None
    arcs1 = list(zip(p1, p1[1:]))
    for a, b in arcs1:
        ln = g.arcs[a][b]
        g.remove_arc(a, b)
        g.add_arc(b, a, -ln)
    p2 = _bellman_ford(g, src, dst)
    arcs2 = list(zip(p2, p2[1:]))
    used = set(arcs1)
    for a, b in arcs2:
        if (b, a) in used:
            used.discard((b, a))
        else:
            used.add((a, b))
    routes = [Path(_route_nodes(seq)) for seq in _decompose(used, src, dst)]
    if len(routes) != 2:
        raise DisconnectedError("no disjoint pair exists")
    routes.sort(key=lambda p: (path_length(lengths, p), len(p), p.nodes))
    pair = PathPair(routes[0], routes[1], True)
    net.check_pair(pair)
    return pair


def pair_length(net: Network, pair: PathPair, lengths: dict[str, float] | None = None) -> float:
    lengths = node_lengths(net) if lengths is None else lengths
    return path_length(lengths, pair.first) + path_length(lengths, pair.second)
