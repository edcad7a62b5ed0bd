"""Integer programs for reliable single paths and path pairs.

Three models are built over a bidirected copy of the demand graph:

``min_mbar``      fewest distinct size-k supply sets along a path, after
                  pruning nodes with fewer than k supplies (k = best
                  bottleneck from the max-capacity path).
``max_d``         two node-disjoint paths maximizing the resilience level d.
``min_weighted``  two node-disjoint paths minimizing sum w(|U|) h(U) over
                  cross-pair supply unions U, with w(l)/w(l+1) >= |V|^2/2 so
                  that larger d always dominates, then fewer minimal unions.

Each model is kept both as generic linear rows (for LP export and for
feasibility checks) and as graph structure, which ``solve_exact`` uses to
branch on arc variables path by path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .model import DisconnectedError, Network, Path, PathPair
from .routing import max_capacity_path

DEFAULT_BUDGET = 10_000_000

MIN_MBAR = "min_mbar"
MAX_D = "max_d"
MIN_WEIGHTED = "min_weighted"


class InconsistentAssignmentError(ValueError):
    pass


@dataclass(frozen=True)
class Var:
    name: str
    kind: str = "binary"  # binary | integer | continuous
    lb: float = 0
    ub: float = 1


@dataclass(frozen=True)
class Row:
    name: str
    terms: dict[str, int]
    sense: str  # "<=", ">=", "="
    rhs: int


@dataclass
class IlpModel:
    kind: str
    sense: str
    s: str
    t: str
    nodes: list[str]
    arcs: list[tuple[str, str]]
    supply_sets: dict[str, frozenset[str]]
    n_paths: int = 1
    node_disjoint: bool = True
    variables: dict[str, Var] = field(default_factory=dict)
    objective: dict[str, int] = field(default_factory=dict)
    constraints: list[Row] = field(default_factory=list)
    big_M: int | None = None
    weights: dict[int, int] = field(default_factory=dict)
    set_ids: dict[frozenset[str], int] = field(default_factory=dict)
    k: float | None = None
    d_cap: int | None = None
    # arc variable names touching each node, per path copy
    touch: dict[int, dict[str, list[str]]] = field(default_factory=dict, repr=False)

    def index(self, v: str) -> int:
        return self._index[v]

    def __post_init__(self) -> None:
        self._index = {v: i for i, v in enumerate(self.nodes)}
        succ: dict[str, list[str]] = {v: [] for v in self.nodes}
        for a, b in self.arcs:
            succ[a].append(b)
        self.succ = {v: sorted(ws) for v, ws in succ.items()}

    def x(self, k: int, a: str, b: str) -> str:
        return f"x_{k}_{self._index[a]}_{self._index[b]}"

    def b(self, k: int, v: str) -> str:
        return f"b_{k}_{self._index[v]}"

    def h(self, sset: frozenset[str]) -> str:
        return f"h_{self.set_ids[sset]}"

    def interior(self) -> list[str]:
        return [v for v in self.nodes if v not in (self.s, self.t)]

    def add_var(self, name: str, kind: str = "binary", lb: float = 0, ub: float = 1) -> None:
        self.variables[name] = Var(name, kind, lb, ub)

    def add_row(self, name: str, terms: dict[str, int], sense: str, rhs: int) -> None:
        self.constraints.append(Row(name, {k: v for k, v in terms.items() if v != 0}, sense, rhs))


@dataclass
class IlpSolution:
    status: str  # optimal | infeasible | budget-exceeded
    objective: int | None
    route: Path | PathPair | None
    assignment: dict[str, int]
    branch_nodes: int = 0
    extras: dict = field(default_factory=dict)


def _set_key(sset: frozenset[str]) -> tuple:
    return (len(sset), tuple(sorted(sset)))


def _flow_rows(model: IlpModel, k: int) -> None:
    out_arcs: dict[str, list[str]] = {v: [] for v in model.nodes}
    in_arcs: dict[str, list[str]] = {v: [] for v in model.nodes}
    for a, b in model.arcs:
        name = model.x(k, a, b)
        model.add_var(name)
        out_arcs[a].append(name)
        in_arcs[b].append(name)
    for v in model.nodes:
        terms = {n: 1 for n in out_arcs[v]}
        for n in in_arcs[v]:
            terms[n] = terms.get(n, 0) - 1
        rhs = 1 if v == model.s else -1 if v == model.t else 0
        model.add_row(f"flow_{k}_{model.index(v)}", terms, "=", rhs)
    model.touch[k] = {v: out_arcs[v] + in_arcs[v] for v in model.nodes}


def _pair_arcs(net: Network, nodes: list[str], skip_direct: bool) -> list[tuple[str, str]]:
    keep = set(nodes)
    arcs = []
    for a, b in sorted(net.edges):
        if a not in keep or b not in keep or a == b:
            continue
        if skip_direct and {a, b} == {net.s, net.t}:
            continue
        arcs += [(a, b), (b, a)]
    return sorted(arcs)


def _has_st_path(nodes: list[str], arcs: list[tuple[str, str]], s: str, t: str) -> bool:
    succ: dict[str, list[str]] = {}
    for a, b in arcs:
        succ.setdefault(a, []).append(b)
    seen, stack = {s}, [s]
    while stack:
        v = stack.pop()
        for w in succ.get(v, []):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return t in seen


def build_min_mbar(net: Network) -> IlpModel:
    _, k = max_capacity_path(net)
    s, t = net.s, net.t
    nodes = sorted(
        v for v in net.demand_nodes if net.is_terminal(v) or len(net.supplies(v)) >= k
    )
    arcs = _pair_arcs(net, nodes, skip_direct=False)
    if not _has_st_path(nodes, arcs, s, t):
        raise DisconnectedError("terminals disconnected after pruning")
    sets = {v: net.supplies(v) for v in nodes}
    tight = [v for v in nodes if not net.is_terminal(v) and len(sets[v]) == k]
    distinct = sorted({sets[v] for v in tight}, key=_set_key)
    model = IlpModel(MIN_MBAR, "min", s, t, nodes, arcs, sets, k=k)
    model.set_ids = {ss: i for i, ss in enumerate(distinct)}
    _flow_rows(model, 1)
    for ss in distinct:
        model.add_var(model.h(ss))
        model.objective[model.h(ss)] = 1
    for v in tight:
        terms = {n: 1 for n in model.touch[1][v]}
        terms[model.h(sets[v])] = -2
        model.add_row(f"link_{model.index(v)}", terms, "<=", 0)
    return model


def _pair_base(net: Network, kind: str, sense: str, node_disjoint: bool) -> IlpModel:
    s, t = net.s, net.t
    nodes = sorted(net.demand_nodes)
    arcs = _pair_arcs(net, nodes, skip_direct=True)
    sets = {v: (frozenset() if net.is_terminal(v) else net.supplies(v)) for v in nodes}
    model = IlpModel(kind, sense, s, t, nodes, arcs, sets, n_paths=2, node_disjoint=node_disjoint)
    for k in (1, 2):
        _flow_rows(model, k)
        for v in nodes:
            model.add_var(model.b(k, v))
            terms = {n: 1 for n in model.touch[k][v]}
            terms[model.b(k, v)] = -2
            model.add_row(f"use_{k}_{model.index(v)}", terms, "<=", 0)
    if node_disjoint:
        for v in model.interior():
            model.add_row(f"disj_{model.index(v)}", {model.b(1, v): 1, model.b(2, v): 1}, "<=", 1)
    return model


def _cross_pairs(model: IlpModel) -> Iterator[tuple[str, str]]:
    inner = model.interior()
    for i in inner:
        for j in inner:
            if i != j or not model.node_disjoint:
                yield i, j


def build_max_d(net: Network, node_disjoint: bool = True) -> IlpModel:
    model = _pair_base(net, MAX_D, "max", node_disjoint)
    sets = model.supply_sets
    unions = {(i, j): len(sets[i] | sets[j]) for i, j in _cross_pairs(model)}
    biggest = max(unions.values(), default=0)
    model.big_M = 2 * biggest + 1
    model.d_cap = biggest
    model.add_var("d", "integer", 0, biggest)
    model.objective["d"] = 1
    M = model.big_M
    for (i, j), size in unions.items():
        model.add_row(
            f"res_{model.index(i)}_{model.index(j)}",
            {"d": 1, model.b(1, i): M, model.b(2, j): M},
            "<=",
            size - 1 + 2 * M,
        )
    return model


def weight_ratio(n_nodes: int) -> int:
    return math.ceil(n_nodes * n_nodes / 2)


def build_min_weighted(net: Network, node_disjoint: bool = True) -> IlpModel:
    model = _pair_base(net, MIN_WEIGHTED, "min", node_disjoint)
    sets = model.supply_sets
    pairs = {(i, j): sets[i] | sets[j] for i, j in _cross_pairs(model)}
    distinct = sorted(set(pairs.values()), key=_set_key)
    model.set_ids = {u: n for n, u in enumerate(distinct)}
    top = max((len(u) for u in distinct), default=0)
    ratio = weight_ratio(len(model.nodes))
    model.weights = {l: ratio ** (top - l) for l in range(1, top + 1)}
    for u in distinct:
        model.add_var(model.h(u))
        model.objective[model.h(u)] = model.weights[len(u)]
    for (i, j), u in pairs.items():
        model.add_row(
            f"hit_{model.index(i)}_{model.index(j)}",
            {model.h(u): 1, model.b(1, i): -1, model.b(2, j): -1},
            ">=",
            -1,
        )
    return model


# -- evaluation --------------------------------------------------------------


def violated_rows(model: IlpModel, assignment: dict[str, int]) -> list[str]:
    bad = []
    for name, var in model.variables.items():
        val = assignment.get(name, 0)
        if val < var.lb or val > var.ub or (var.kind != "continuous" and val != int(val)):
            bad.append(name)
    for row in model.constraints:
        lhs = sum(c * assignment.get(n, 0) for n, c in row.terms.items())
        ok = lhs <= row.rhs if row.sense == "<=" else lhs >= row.rhs if row.sense == ">=" else lhs == row.rhs
        if not ok:
            bad.append(row.name)
    return bad


def objective_value(model: IlpModel, assignment: dict[str, int]) -> int:
    return sum(c * assignment.get(n, 0) for n, c in model.objective.items())


def _inner(model: IlpModel, path: tuple[str, ...]) -> list[str]:
    return [v for v in path if v not in (model.s, model.t)]


def route_objective(model: IlpModel, route: Path | PathPair) -> int:
    """Objective of the assignment induced by ``route`` alone."""
    sets = model.supply_sets
    if model.kind == MIN_MBAR:
        return len({sets[v] for v in _inner(model, route.nodes) if len(sets[v]) == model.k})
    a, b = _inner(model, route.first.nodes), _inner(model, route.second.nodes)
    unions = [sets[i] | sets[j] for i in a for j in b if i != j or not model.node_disjoint]
    if model.kind == MAX_D:
        return min([len(u) - 1 for u in unions] + [model.d_cap])
    return sum(model.weights[len(u)] for u in set(unions))


def route_assignment(model: IlpModel, route: Path | PathPair) -> dict[str, int]:
    asg = {n: 0 for n in model.variables}
    paths = [route] if isinstance(route, Path) else [route.first, route.second]
    sets = model.supply_sets
    for k, p in enumerate(paths, start=1):
        for a, b in zip(p.nodes, p.nodes[1:]):
            asg[model.x(k, a, b)] = 1
        if model.n_paths == 2:
            for v in p.nodes:
                asg[model.b(k, v)] = 1
    if model.kind == MIN_MBAR:
        for v in _inner(model, route.nodes):
            if len(sets[v]) == model.k:
                asg[model.h(sets[v])] = 1
    elif model.kind == MAX_D:
        asg["d"] = route_objective(model, route)
    else:
        a, b = _inner(model, route.first.nodes), _inner(model, route.second.nodes)
        for i in a:
            for j in b:
                if i != j or not model.node_disjoint:
                    asg[model.h(sets[i] | sets[j])] = 1
    return asg


# -- branch and bound --------------------------------------------------------


class _Budget(Exception):
    pass


class _Search:
    """Depth-first branch and bound over arc variables, one path at a time.

    Every branch fixes one more arc variable x_{k,v,w} = 1 out of the
    current path end; b, h and d follow from the arcs chosen.  Bounds: the
    h-weight already committed (minimization) or the smallest cross union
    committed so far (max d).  Only simple path flows are enumerated:
    extra flow cycles can only raise committed h and lower d.
    """

    def __init__(self, model: IlpModel, budget: int):
        self.m = model
        self.budget = budget
        self.count = 0
        self.best: tuple | None = None
        self.best_val = None
        self.sets = model.supply_sets

    def tick(self) -> None:
        self.count += 1
        if self.count > self.budget:
            raise _Budget

    def better(self, val) -> bool:
        if self.best_val is None:
            return True
        return val > self.best_val if self.m.sense == "max" else val < self.best_val

    def paths(self, banned: set[str], lower: tuple[str, ...] | None = None):
        """Yield simple s-t paths (as tuples) avoiding ``banned``.

        With ``lower`` set, only paths lexicographically greater than it.
        Yields (path, extend_callback) style via generator protocol:
        the consumer may ``send(False)`` to prune the current prefix.
        """
        m = self.m
        stack = [m.s]
        on = {m.s}

        def rec(greater: bool):
            v = stack[-1]
            for w in m.succ[v]:
                if w in on or w in banned:
                    continue
                pos = len(stack)
                g = greater
                if lower is not None and not g:
                    ref = lower[pos] if pos < len(lower) else None
                    if ref is None or w < ref:
                        continue
                    g = w > ref
                self.tick()
                stack.append(w)
                on.add(w)
                keep = yield tuple(stack)
                if keep is not False and w != m.t:
                    yield from rec(g)
                stack.pop()
                on.discard(w)

        return rec(False)

    # single path ---------------------------------------------------------

    def run_single(self) -> None:
        m = self.m
        committed: list[set] = [set()]
        gen = self.paths(set())
        send = None
        while True:
            try:
                path = gen.send(send)
            except StopIteration:
                break
            # rebuild committed cost for this prefix
            tight = {self.sets[v] for v in path if v not in (m.s, m.t) and len(self.sets[v]) == m.k}
            cost = len(tight)
            if self.best_val is not None and cost >= self.best_val:
                send = False
                continue
            send = None
            if path[-1] == m.t:
                self.best, self.best_val = (path,), cost

    # path pairs ----------------------------------------------------------

    def run_pair(self) -> None:
        m = self.m
        for p1 in self._complete_paths(self.paths(set())):
            inner1 = [v for v in p1 if v not in (m.s, m.t)]
            banned = set(inner1) if m.node_disjoint else set()
            lower = p1
            gen = self.paths(banned, lower)
            send = None
            # incremental state keyed by prefix length
            state = {1: self._init_state()}
            while True:
                try:
                    prefix = gen.send(send)
                except StopIteration:
                    break
                prev = state[len(prefix) - 1]
                st = self._extend(prev, inner1, prefix[-1])
                if not self._promising(st):
                    send = False
                    continue
                send = None
                state[len(prefix)] = st
                if prefix[-1] == m.t:
                    val = self._value(st)
                    if self.better(val):
                        self.best, self.best_val = (p1, prefix), val

    def _complete_paths(self, gen):
        send = None
        while True:
            try:
                path = gen.send(send)
            except StopIteration:
                return
            send = None
            if path[-1] == self.m.t:
                yield path

    def _init_state(self):
        if self.m.kind == MAX_D:
            return self.m.d_cap
        return (frozenset(), 0)

    def _extend(self, st, inner1: list[str], w: str):
        m = self.m
        if w in (m.s, m.t):
            return st
        sw = self.sets[w]
        if m.kind == MAX_D:
            for i in inner1:
                if i != w or not m.node_disjoint:
                    st = min(st, len(self.sets[i] | sw) - 1)
            return st
        seen, cost = st
        new = set()
        for i in inner1:
            if i != w or not m.node_disjoint:
                u = self.sets[i] | sw
                if u not in seen and u not in new:
                    new.add(u)
                    cost += m.weights[len(u)]
        return (seen | new, cost) if new else st

    def _value(self, st):
        return st if self.m.kind == MAX_D else st[1]

    def _promising(self, st) -> bool:
        if self.best_val is None:
            return True
        return self.better(self._value(st))


def solve_exact(model: IlpModel, budget: int = DEFAULT_BUDGET) -> IlpSolution:
    """Proven optimum of ``model`` by branch and bound, or the incumbent.

    The assignment returned is checked against every linear row.
    """
    search = _Search(model, budget)
    status = "optimal"
    try:
        if model.n_paths == 1:
            search.run_single()
        else:
            search.run_pair()
    except _Budget:
        status = "budget-exceeded"
    if search.best is None:
        return IlpSolution("infeasible" if status == "optimal" else status, None, None, {}, search.count)
    if model.n_paths == 1:
        route: Path | PathPair = Path(search.best[0])
    else:
        route = PathPair(Path(search.best[0]), Path(search.best[1]), model.node_disjoint)
    asg = route_assignment(model, route)
    bad = violated_rows(model, asg)
    if bad:
        raise AssertionError(f"solver produced infeasible assignment: {bad[:5]}")
    obj = objective_value(model, asg)
    extras = {}
    if model.n_paths == 2:
        extras = _pair_extras(model, route)
    return IlpSolution(status, obj, route, asg, search.count, extras)


def _pair_extras(model: IlpModel, pair: PathPair) -> dict:
    sets = model.supply_sets
    a, b = _inner(model, pair.first.nodes), _inner(model, pair.second.nodes)
    unions = [sets[i] | sets[j] for i in a for j in b if i != j or not model.node_disjoint]
    if not unions:
        return {}
    smallest = min(len(u) for u in unions)
    return {"d": smallest - 1, "m_bar": len({u for u in unions if len(u) == smallest})}


# -- extraction --------------------------------------------------------------


def _trace(model: IlpModel, used: list[tuple[str, str]]) -> Path:
    succ: dict[str, list[str]] = {}
    for a, b in sorted(used):
        succ.setdefault(a, []).append(b)
    # drop opposite-arc 2-cycles first
    for a, b in list(used):
        if a in succ.get(b, []) and b in succ.get(a, []):
            succ[a].remove(b)
            succ[b].remove(a)
    # depth-first walk on used arcs, shortcutting revisits
    seen = {model.s}
    stack = [(model.s, iter(succ.get(model.s, [])))]
    order = [model.s]
    while stack:
        v, it = stack[-1]
        if v == model.t:
            return Path(order)
        w = next((w for w in it if w not in seen), None)
        if w is None:
            stack.pop()
            order.pop()
            continue
        seen.add(w)
        order.append(w)
        stack.append((w, iter(succ.get(w, []))))
    raise InconsistentAssignmentError("assignment carries no s-t flow")


def extract_route(model: IlpModel, assignment: dict[str, int]) -> Path | PathPair:
    """Decompose the flow(s) of an assignment into a simple path (pair)."""
    paths = []
    for k in range(1, model.n_paths + 1):
        used = [(a, b) for a, b in model.arcs if assignment.get(model.x(k, a, b), 0) > 0.5]
        paths.append(_trace(model, used))
    if model.n_paths == 1:
        route: Path | PathPair = paths[0]
    else:
        route = PathPair(paths[0], paths[1], model.node_disjoint)
        if model.node_disjoint and set(_inner(model, paths[0].nodes)) & set(_inner(model, paths[1].nodes)):
            raise InconsistentAssignmentError("extracted paths are not node-disjoint")
    claimed = objective_value(model, assignment)
    got = route_objective(model, route)
    if (model.sense == "min" and got > claimed) or (model.sense == "max" and got < claimed):
        raise InconsistentAssignmentError(f"extracted route objective {got} worse than {claimed}")
    return route


# -- LP export ---------------------------------------------------------------


def _fmt_num(c) -> str:
    if isinstance(c, Fraction):
        c = float(c)
    if isinstance(c, float) and c.is_integer():
        c = int(c)
    return str(c)


def _fmt_terms(terms: dict[str, int], per_line: int = 8) -> str:
    parts = []
    for n, (name, c) in enumerate(terms.items()):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        body = name if mag == 1 else f"{_fmt_num(mag)} {name}"
        if n == 0:
            parts.append(f"- {body}" if c < 0 else body)
        else:
            parts.append(f"{sign} {body}")
    if not parts:
        return "0"
    lines = [" ".join(parts[i:i + per_line]) for i in range(0, len(parts), per_line)]
    return "\n   ".join(lines)


def export_lp(model: IlpModel) -> str:
    """CPLEX-LP text for the model; output is byte-stable."""
    out = [f"\\ interdep_route model: {model.kind}"]
    for i, v in enumerate(model.nodes):
        out.append(f"\\ node {i} = {v}")
    for u, i in sorted(model.set_ids.items(), key=lambda kv: kv[1]):
        out.append(f"\\ set {i} = {{{','.join(sorted(u))}}}")
    out.append("Maximize" if model.sense == "max" else "Minimize")
    out.append(f" obj: {_fmt_terms(model.objective)}")
    if model.constraints:
        out.append("Subject To")
        sense = {"<=": "<=", ">=": ">=", "=": "="}
        for row in model.constraints:
            out.append(f" {row.name}: {_fmt_terms(row.terms)} {sense[row.sense]} {_fmt_num(row.rhs)}")
    nonbinary = [v for v in model.variables.values() if v.kind != "binary"]
    if nonbinary:
        out.append("Bounds")
        for v in nonbinary:
            out.append(f" {_fmt_num(v.lb)} <= {v.name} <= {_fmt_num(v.ub)}")
    binary = [v.name for v in model.variables.values() if v.kind == "binary"]
    if binary:
        out.append("Binary")
        out += [f" {n}" for n in binary]
    general = [v.name for v in model.variables.values() if v.kind == "integer"]
    if general:
        out.append("General")
        out += [f" {n}" for n in general]
    out.append("End")
    return "\n".join(out) + "\n"
