"""Interdependent-network data model.

A demand node fails when every one of its supply nodes has failed; supply
nodes fail independently.  The source/destination terminals never fail.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Iterable, Mapping, Sequence


class UnknownNodeError(KeyError):
    pass


class DisconnectedError(RuntimeError):
    """No route between the terminals (or no disjoint pair)."""


@dataclass(frozen=True)
class SupplyNode:
    id: str
    p_fail: float
    coord: tuple[float, float] | None = None


@dataclass(frozen=True)
class DemandNode:
    id: str
    supplies: frozenset[str]
    coord: tuple[float, float] | None = None


@dataclass(frozen=True)
class Path:
    nodes: tuple[str, ...]

    def __init__(self, nodes: Iterable[str]):
        object.__setattr__(self, "nodes", tuple(nodes))

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)

    def reversed(self) -> "Path":
        return Path(self.nodes[::-1])

    def __str__(self) -> str:
        return ",".join(self.nodes)


@dataclass(frozen=True)
class PathPair:
    first: Path
    second: Path
    require_node_disjoint: bool = True


def _fmt_set(s: Iterable[str]) -> str:
    return "{" + ",".join(sorted(s)) + "}"


class Network:
    """Immutable demand graph with supply assignment.

    Edges are undirected and stored as sorted id pairs.  Derived quantities
    (adjacency, supply multiplicity n_d) are computed once at construction.
    """

    def __init__(
        self,
        supply_nodes: Iterable[SupplyNode],
        demand_nodes: Iterable[DemandNode],
        edges: Iterable[tuple[str, str]],
        terminals: tuple[str, str] | None = None,
    ):
        self.supply_nodes: dict[str, SupplyNode] = {}
        self._dup_supply: list[str] = []
        for u in supply_nodes:
            if u.id in self.supply_nodes:
                self._dup_supply.append(u.id)
            self.supply_nodes[u.id] = u
        self.demand_nodes: dict[str, DemandNode] = {}
        self._dup_demand: list[str] = []
        for v in demand_nodes:
            if not isinstance(v.supplies, frozenset):
                v = DemandNode(v.id, frozenset(v.supplies), v.coord)
            if v.id in self.demand_nodes:
                self._dup_demand.append(v.id)
            self.demand_nodes[v.id] = v
        es = set()
        for a, b in edges:
            es.add((a, b) if a <= b else (b, a))
        self.edges: frozenset[tuple[str, str]] = frozenset(es)
        self.terminals = tuple(terminals) if terminals is not None else None

        adj: dict[str, set[str]] = {v: set() for v in self.demand_nodes}
        for a, b in self.edges:
            if a in adj and b in adj and a != b:
                adj[a].add(b)
                adj[b].add(a)
        self._adj = {v: tuple(sorted(ns)) for v, ns in adj.items()}

        nd: dict[str, int] = {u: 0 for u in self.supply_nodes}
        for v in self.demand_nodes.values():
            if self.is_terminal(v.id):
                continue
            for u in v.supplies:
                if u in nd:
                    nd[u] += 1
        self._nd = nd

    # -- basic accessors -------------------------------------------------

    @property
    def s(self) -> str:
        if self.terminals is None:
            raise ValueError("network has no terminals")
        return self.terminals[0]

    @property
    def t(self) -> str:
        if self.terminals is None:
            raise ValueError("network has no terminals")
        return self.terminals[1]

    def is_terminal(self, v: str) -> bool:
        return self.terminals is not None and v in self.terminals

    def neighbors(self, v: str) -> tuple[str, ...]:
        try:
            return self._adj[v]
        except KeyError:
            raise UnknownNodeError(v) from None

    def supplies(self, v: str) -> frozenset[str]:
        try:
            return self.demand_nodes[v].supplies
        except KeyError:
            raise UnknownNodeError(v) from None

    def p(self, u: str) -> float:
        return self.supply_nodes[u].p_fail

    def n_d_of(self, u: str) -> int:
        """Number of non-terminal demand nodes listing supply ``u``."""
        return self._nd[u]

    @property
    def n_d(self) -> int:
        return max(self._nd.values(), default=0)

    @property
    def n_s(self) -> int:
        return max(
            (len(v.supplies) for v in self.demand_nodes.values() if not self.is_terminal(v.id)),
            default=0,
        )

    def interior(self, path: Path | Sequence[str]) -> list[str]:
        """Path nodes that can fail, i.e. everything but the terminals."""
        return [v for v in path if not self.is_terminal(v)]

    def with_probabilities(self, p: Mapping[str, float] | float) -> "Network":
        """Copy of the network with replaced supply failure probabilities."""
        if isinstance(p, Mapping):
            sups = [SupplyNode(u.id, p.get(u.id, u.p_fail), u.coord) for u in self.supply_nodes.values()]
        else:
            sups = [SupplyNode(u.id, float(p), u.coord) for u in self.supply_nodes.values()]
        return Network(sups, self.demand_nodes.values(), self.edges, self.terminals)

    def with_terminals(self, s: str, t: str) -> "Network":
        return Network(self.supply_nodes.values(), self.demand_nodes.values(), self.edges, (s, t))

    def without_edge(self, a: str, b: str) -> "Network":
        e = (a, b) if a <= b else (b, a)
        return Network(self.supply_nodes.values(), self.demand_nodes.values(), self.edges - {e}, self.terminals)

    # -- path predicates -------------------------------------------------

    def is_valid_path(self, path: Path | Sequence[str]) -> bool:
        nodes = list(path)
        if not nodes or len(set(nodes)) != len(nodes):
            return False
        if any(v not in self.demand_nodes for v in nodes):
            return False
        return all(b in self._adj[a] for a, b in zip(nodes, nodes[1:]))

    def check_path(self, path: Path | Sequence[str]) -> None:
        nodes = list(path)
        for v in nodes:
            if v not in self.demand_nodes:
                raise UnknownNodeError(v)
        if not self.is_valid_path(nodes):
            raise ValueError(f"not a simple path in the network: {','.join(nodes)}")

    def is_st_path(self, path: Path | Sequence[str]) -> bool:
        nodes = list(path)
        return self.is_valid_path(nodes) and nodes[0] == self.s and nodes[-1] == self.t

    def check_pair(self, pair: PathPair) -> None:
        self.check_path(pair.first)
        self.check_path(pair.second)
        a, b = pair.first.nodes, pair.second.nodes
        if {a[0], a[-1]} != {b[0], b[-1]}:
            raise ValueError("paths of a pair must share their endpoints")
        if pair.require_node_disjoint:
            common = set(self.interior(a)) & set(self.interior(b))
            if common:
                raise ValueError(f"paths share interior nodes {_fmt_set(common)}")

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        def xy(c):
            return {} if c is None else {"x": c[0], "y": c[1]}

        out = {
            "supply_nodes": [
                {"id": u.id, "p_fail": u.p_fail, **xy(u.coord)}
                for u in sorted(self.supply_nodes.values(), key=lambda u: u.id)
            ],
            "demand_nodes": [
                {"id": v.id, "supplies": sorted(v.supplies), **xy(v.coord)}
                for v in sorted(self.demand_nodes.values(), key=lambda v: v.id)
            ],
            "edges": [list(e) for e in sorted(self.edges)],
        }
        if self.terminals is not None:
            out["terminals"] = {"s": self.terminals[0], "t": self.terminals[1]}
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "Network":
        def coord(rec):
            if "x" in rec and "y" in rec:
                return (float(rec["x"]), float(rec["y"]))
            return None

        sups = [SupplyNode(str(r["id"]), float(r["p_fail"]), coord(r)) for r in d.get("supply_nodes", [])]
        dems = [
            DemandNode(str(r["id"]), frozenset(str(u) for u in r.get("supplies", [])), coord(r))
            for r in d.get("demand_nodes", [])
        ]
        edges = [(str(a), str(b)) for a, b in d.get("edges", [])]
        term = d.get("terminals")
        terminals = (str(term["s"]), str(term["t"])) if term else None
        return cls(sups, dems, edges, terminals)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path: str | FsPath) -> None:
        FsPath(path).write_text(self.dumps())

    @classmethod
    def load(cls, path: str | FsPath) -> "Network":
        return cls.from_dict(json.loads(FsPath(path).read_text()))

    def __repr__(self) -> str:
        return (
            f"Network({len(self.demand_nodes)} demand, {len(self.supply_nodes)} supply, "
            f"{len(self.edges)} edges, terminals={self.terminals})"
        )


def build_network(
    supply_sets: Mapping[str, Iterable[str]],
    edges: Iterable[tuple[str, str]],
    p: Mapping[str, float] | float = 0.1,
    terminals: tuple[str, str] | None = None,
) -> Network:
    """Convenience constructor from ``{demand_id: supply ids}``.

    Supply nodes are created for every referenced id; ``p`` is either a
    per-supply mapping or one probability for all.
    """
    sets = {v: frozenset(str(u) for u in us) for v, us in supply_sets.items()}
    sids = sorted(set().union(*sets.values())) if sets else []
    if isinstance(p, Mapping):
        sups = [SupplyNode(u, float(p[u])) for u in sids]
    else:
        sups = [SupplyNode(u, float(p)) for u in sids]
    dems = [DemandNode(v, s) for v, s in sets.items()]
    return Network(sups, dems, edges, terminals)


def line_network(
    supply_sets: Sequence[Iterable],
    p: Mapping[str, float] | float = 0.5,
) -> tuple[Network, Path]:
    """Network that is a single path s - v1 - ... - vm - t.

    Handy for path-level computations; supply ids are stringified.
    """
    names = [f"v{i + 1}" for i in range(len(supply_sets))]
    sets = {n: [str(u) for u in us] for n, us in zip(names, supply_sets)}
    sets["s"] = []
    sets["t"] = []
    order = ["s", *names, "t"]
    edges = list(zip(order, order[1:]))
    if isinstance(p, Mapping):
        p = {str(k): v for k, v in p.items()}
    return build_network(sets, edges, p, ("s", "t")), Path(order)


# ---------------------------------------------------------------------------


def validate_network(net: Network) -> list[str]:
    """Return human-readable invariant violations; empty when well formed."""
    out: list[str] = []
    for u in net._dup_supply:
        out.append(f"supply node {u!r}: duplicate id")
    for v in net._dup_demand:
        out.append(f"demand node {v!r}: duplicate id")
    for u in net.supply_nodes.values():
        if not (0.0 <= u.p_fail <= 1.0) or math.isnan(u.p_fail):
            out.append(f"supply node {u.id!r}: p_fail {u.p_fail} outside [0,1]")
    for v in net.demand_nodes.values():
        missing = [u for u in sorted(v.supplies) if u not in net.supply_nodes]
        if missing:
            out.append(f"demand node {v.id!r}: unknown supplies {missing}")
        if not v.supplies and not net.is_terminal(v.id):
            out.append(f"demand node {v.id!r}: no supply nodes")
    for a, b in sorted(net.edges):
        if a == b:
            out.append(f"edge ({a!r},{b!r}): self-loop")
        for x in (a, b):
            if x not in net.demand_nodes:
                out.append(f"edge ({a!r},{b!r}): unknown node {x!r}")
    if net.terminals is not None:
        s, t = net.terminals
        for x in (s, t):
            if x not in net.demand_nodes:
                out.append(f"terminal {x!r}: unknown node")
        if s == t:
            out.append(f"terminals: s and t are both {s!r}")
    return out


def log_product(values: Sequence[float]) -> float:
    """Product of probabilities; summed in log space beyond 30 factors."""
    if len(values) <= 30:
        out = 1.0
        for x in values:
            out *= x
        return out
    if any(x == 0.0 for x in values):
        return 0.0
    return math.exp(math.fsum(math.log(x) for x in values))


def survival_complement(fail_probs: Sequence[float]) -> float:
    """1 - prod(1 - q) computed stably."""
    if len(fail_probs) <= 30:
        return 1.0 - log_product([1.0 - q for q in fail_probs])
    if any(q >= 1.0 for q in fail_probs):
        return 1.0
    return -math.expm1(math.fsum(math.log1p(-q) for q in fail_probs))


def node_failure_probability(net: Network, v: str) -> float:
    sups = net.supplies(v)
    if net.is_terminal(v):
        return 0.0
    return log_product([net.p(u) for u in sorted(sups)])


def reduce_redundant(net: Network, path: Path | Sequence[str]) -> list[str]:
    """Drop interior nodes whose failure is implied by another path node.

    Scans in path order; a node is dropped when a retained node's supply set
    is contained in its own.  A retained node that is itself a strict
    superset of a later node is evicted when that later node is kept.
    """
    kept: list[str] = []
    for v in net.interior(path):
        sv = net.supplies(v)
        if any(net.supplies(w) <= sv for w in kept):
            continue
        kept = [w for w in kept if not sv < net.supplies(w)]
        kept.append(v)
    return kept
