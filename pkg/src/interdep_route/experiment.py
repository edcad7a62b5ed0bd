"""Scenario generation and experiment orchestration."""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import analytic, oracle, routing, sampler
from .model import DemandNode, Network, Path, PathPair, SupplyNode
from .optimize import build_min_mbar, build_min_weighted, solve_exact

# lon/lat box roughly covering the continental US
US_BOX = (-125.0, 24.0, -66.0, 50.0)


@dataclass
class Scenario:
    topology: Network | None = None
    n_demand: int = 20
    degree: int = 2
    supply_count: int = 36
    assign: str = "nearest"  # nearest | uniform | range
    k: int = 2
    k_range: tuple[int, int] = (1, 3)
    p_rule: str = "constant"  # constant | uniform
    p: float = 0.01
    p_range: tuple[float, float] = (0.005, 0.015)
    box: tuple[float, float, float, float] = US_BOX
    seed: int = 0
    terminals: tuple[str, str] | None = None
    two_connected: bool = False  # add shortest links until no cut vertex remains

    def __post_init__(self) -> None:
        if self.k < 1 or self.k_range[0] < 1 or self.k_range[0] > self.k_range[1]:
            raise ValueError("supplies per node must be >= 1")
        lo, hi = self.p_range
        if not (0.0 <= lo <= hi <= 1.0) or not (0.0 <= self.p <= 1.0):
            raise ValueError("failure probabilities must lie in [0, 1]")
        if self.assign not in ("nearest", "uniform", "range"):
            raise ValueError(f"unknown assignment rule {self.assign!r}")
        if self.p_rule not in ("constant", "uniform"):
            raise ValueError(f"unknown probability rule {self.p_rule!r}")


def derive_seed(seed: int, *keys: int) -> int:
    """Independent child seed for (seed, keys) via SeedSequence."""
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1, dtype=np.uint64)[0] >> 1)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _mst_edges(pts: np.ndarray) -> list[tuple[int, int]]:
    n = len(pts)
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    inside = {0}
    best = d[0].copy()
    parent = np.zeros(n, dtype=int)
    edges = []
    while len(inside) < n:
        cand = [(best[j], j) for j in range(n) if j not in inside]
        _, j = min(cand)
        edges.append((int(parent[j]), j))
        inside.add(j)
        closer = d[j] < best
        parent[closer] = j
        best = np.minimum(best, d[j])
    return edges


def random_topology(n: int, degree: int, box, rng: np.random.Generator) -> tuple[list[str], np.ndarray, set]:
    x0, y0, x1, y1 = box
    pts = np.column_stack([rng.uniform(x0, x1, n), rng.uniform(y0, y1, n)]).round(6)
    names = [f"v{i:02d}" for i in range(n)]
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    edges = set()
    for i in range(n):
        for j in np.argsort(d[i], kind="stable")[1:degree + 1]:
            edges.add(tuple(sorted((names[i], names[int(j)]))))
    for i, j in _mst_edges(pts):
        edges.add(tuple(sorted((names[i], names[j]))))
    return names, pts, edges


def _components(names: list[str], edges: set, removed: str) -> list[set[str]]:
    adj: dict[str, list[str]] = {v: [] for v in names if v != removed}
    for a, b in edges:
        if removed not in (a, b):
            adj[a].append(b)
            adj[b].append(a)
    seen: set[str] = set()
    comps = []
    for v in adj:
        if v in seen:
            continue
        comp, stack = {v}, [v]
        while stack:
            for w in adj[stack.pop()]:
                if w not in comp:
                    comp.add(w)
                    stack.append(w)
        seen |= comp
        comps.append(comp)
    return comps


def make_two_connected(names: list[str], pts: np.ndarray, edges: set) -> set:
    """Add shortest links across cut vertices until none is left."""
    edges = set(edges)
    pos = {v: pts[i] for i, v in enumerate(names)}
    if len(names) < 3:
        return edges
    changed = True
    while changed:
        changed = False
        for v in names:
            comps = _components(names, edges, v)
            if len(comps) < 2:
                continue
            a, b = comps[0], set().union(*comps[1:])
            _, x, y = min((float(np.linalg.norm(pos[x] - pos[y])), x, y) for x in sorted(a) for y in sorted(b))
            edges.add(tuple(sorted((x, y))))
            changed = True
    return edges


def gen_scenario(sc: Scenario) -> Network:
    """Random supply placement and assignment on a (given or random) topology."""
    rng = _rng(sc.seed)
    if sc.topology is None:
        names, pts, edges = random_topology(sc.n_demand, sc.degree, sc.box, rng)
        if sc.two_connected:
            edges = make_two_connected(names, pts, edges)
        coords = {v: tuple(map(float, pts[i])) for i, v in enumerate(names)}
    else:
        names = sorted(sc.topology.demand_nodes)
        edges = set(sc.topology.edges)
        coords = {v: sc.topology.demand_nodes[v].coord for v in names}
    x0, y0, x1, y1 = sc.box
    spts = np.column_stack(
        [rng.uniform(x0, x1, sc.supply_count), rng.uniform(y0, y1, sc.supply_count)]
    ).round(6)
    sids = [f"u{i:02d}" for i in range(sc.supply_count)]
    if sc.p_rule == "constant":
        probs = [sc.p] * sc.supply_count
    else:
        probs = [round(float(q), 12) for q in rng.uniform(*sc.p_range, sc.supply_count)]
    sups = [SupplyNode(u, probs[i], tuple(map(float, spts[i]))) for i, u in enumerate(sids)]

    dems = []
    for v in names:
        if sc.assign == "nearest":
            c = coords[v]
            if c is None:
                raise ValueError(f"nearest-k assignment needs coordinates for {v!r}")
            dist = np.hypot(spts[:, 0] - c[0], spts[:, 1] - c[1])
            order = sorted(range(sc.supply_count), key=lambda i: (dist[i], sids[i]))
            chosen = order[: sc.k]
        else:
            kk = sc.k if sc.assign == "uniform" else int(rng.integers(sc.k_range[0], sc.k_range[1] + 1))
            chosen = sorted(rng.choice(sc.supply_count, size=min(kk, sc.supply_count), replace=False))
        dems.append(DemandNode(v, frozenset(sids[i] for i in chosen), coords[v]))

    terminals = sc.terminals
    if terminals is None:
        if sc.topology is not None and sc.topology.terminals is not None:
            terminals = sc.topology.terminals
        else:
            terminals = _farthest_pair(names, coords)
    return Network(sups, dems, edges, terminals)


def _farthest_pair(names: list[str], coords: dict) -> tuple[str, str]:
    if any(coords[v] is None for v in names):
        return names[0], names[-1]
    best = None
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            d = math.dist(coords[a], coords[b])
            if best is None or d > best[0]:
                best = (d, a, b)
    return best[1], best[2]


# -- experiments -------------------------------------------------------------

ROUTE_METHODS = ("path-approx", "path-maxcap", "path-ilp", "pair-heuristic", "pair-ilp")
EVALUATORS = ("sampling", "naive", "oracle", "bounds", "indicators")


@dataclass
class ExperimentSpec:
    routes: tuple[str, ...] = ("path-approx", "pair-heuristic")
    evaluators: tuple[str, ...] = ("sampling", "bounds")
    epsilon: float = 0.05
    delta: float = 0.05
    naive_trials: int = 100_000
    seed: int = 0
    trials: int = 1
    oracle_cap: int = oracle.DEFAULT_SUPPLY_CAP
    timings: bool = False
    scenario: Scenario | None = None

    def __post_init__(self) -> None:
        for r in self.routes:
            if r not in ROUTE_METHODS:
                raise ValueError(f"unknown route method {r!r}")
        for e in self.evaluators:
            if e not in EVALUATORS:
                raise ValueError(f"unknown evaluator {e!r}")


@dataclass
class Record:
    trial: int
    route_method: str
    evaluator: str
    route: str
    value: float | None = None
    lower: float | None = None
    upper: float | None = None
    error: str | None = None
    runtime: float | None = None


@dataclass
class ExperimentReport:
    records: list[Record] = field(default_factory=list)

    def aggregates(self) -> dict[str, dict[str, float]]:
        groups: dict[str, list[float]] = {}
        for r in self.records:
            key = f"{r.route_method}/{r.evaluator}"
            if r.value is not None:
                groups.setdefault(key, []).append(r.value)
            elif r.lower is not None:
                groups.setdefault(key + ".lower", []).append(r.lower)
                groups.setdefault(key + ".upper", []).append(r.upper)
        return {
            k: {"n": len(v), "mean": math.fsum(v) / len(v), "min": min(v), "max": max(v)}
            for k, v in sorted(groups.items())
        }

    def to_dict(self, timings: bool = False) -> dict:
        recs = []
        for r in self.records:
            d = asdict(r)
            if not timings:
                d.pop("runtime")
            recs.append(d)
        return {"records": recs, "aggregates": self.aggregates()}

    def table(self) -> str:
        lines = [f"{'route/evaluator':32s} {'n':>3s} {'mean':>12s} {'min':>12s} {'max':>12s}"]
        for k, a in self.aggregates().items():
            lines.append(f"{k:32s} {a['n']:3d} {a['mean']:12.5e} {a['min']:12.5e} {a['max']:12.5e}")
        errs = [r for r in self.records if r.error]
        for r in errs:
            lines.append(f"! trial {r.trial} {r.route_method}/{r.evaluator}: {r.error}")
        return "\n".join(lines)

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "route_method", "evaluator", "value", "lower", "upper", "error"])
        for r in self.records:
            w.writerow([r.trial, r.route_method, r.evaluator, r.value, r.lower, r.upper, r.error or ""])
        return buf.getvalue()


def _route_str(route) -> str:
    if isinstance(route, PathPair):
        return f"{route.first};{route.second}"
    return str(route)


def find_route(net: Network, method: str):
    if method == "path-approx":
        return routing.approx_reliable_path(net)
    if method == "path-maxcap":
        return routing.max_capacity_path(net)[0]
    if method == "path-ilp":
        sol = solve_exact(build_min_mbar(net))
        return sol.route
    if method == "pair-heuristic":
        return routing.reliable_pair_heuristic(net)
    if method == "pair-ilp":
        sol = solve_exact(build_min_weighted(net))
        if sol.route is None:
            raise routing.DisconnectedError("no disjoint pair exists")
        return sol.route
    raise ValueError(method)


def evaluate(net: Network, route, evaluator: str, spec: ExperimentSpec, seed: int) -> dict:
    pair = isinstance(route, PathPair)
    if evaluator == "sampling":
        f = sampler.estimate_pair_failure if pair else sampler.estimate_path_failure
        return {"value": f(net, route, spec.epsilon, spec.delta, seed).value}
    if evaluator == "naive":
        return {"value": sampler.naive_monte_carlo(net, route, spec.naive_trials, seed).value}
    if evaluator == "oracle":
        f = oracle.exact_pair_failure if pair else oracle.exact_path_failure
        return {"value": float(f(net, route, spec.oracle_cap).probability)}
    if evaluator == "bounds":
        if pair:
            raise ValueError("bounds are defined for single paths")
        b = analytic.bounds_single(net, route)
        return {"lower": b.lower, "upper": b.upper}
    if evaluator == "indicators":
        ps = {u.p_fail for u in net.supply_nodes.values()}
        if len(ps) != 1:
            raise ValueError("indicator interval needs identical supply failure probabilities")
        (p,) = ps
        if pair:
            ind = analytic.indicators_pair(net, route)
            lo, hi = analytic.approx_pair(ind, p, spec.epsilon)
            return {"value": float(ind.m_bar * p ** (ind.d + 1)), "lower": lo, "upper": hi}
        ind = analytic.indicators_single(net, route, spec.epsilon)
        lo, hi = analytic.approx_single(ind, p, spec.epsilon)
        return {"value": float(ind.m_bar * p**ind.n_s_min), "lower": lo, "upper": hi}
    raise ValueError(evaluator)


def run_experiment(net: Network | None, spec: ExperimentSpec) -> ExperimentReport:
    """Run every route method and evaluator, once per trial.

    With a scenario in ``spec`` each trial draws a fresh network from a
    derived seed; otherwise ``net`` is reused and only sampling seeds vary.
    Errors are recorded per method and the run continues.
    """
    report = ExperimentReport()
    for trial in range(spec.trials):
        if spec.scenario is not None:
            sc = spec.scenario
            sc = Scenario(**{**asdict_shallow(sc), "seed": derive_seed(sc.seed, trial)})
            tnet = gen_scenario(sc)
        else:
            tnet = net
        for r_i, method in enumerate(spec.routes):
            t0 = time.perf_counter()
            try:
                route = find_route(tnet, method)
            except Exception as exc:  # noqa: BLE001 - recorded, run continues
                report.records.append(
                    Record(trial, method, "route", "", error=f"{type(exc).__name__}: {exc}",
                           runtime=time.perf_counter() - t0)
                )
                continue
            report.records.append(
                Record(trial, method, "route", _route_str(route), runtime=time.perf_counter() - t0)
            )
            for e_i, ev in enumerate(spec.evaluators):
                t0 = time.perf_counter()
                rec = Record(trial, method, ev, _route_str(route))
                try:
                    out = evaluate(tnet, route, ev, spec, derive_seed(spec.seed, trial, r_i, e_i))
                    rec.value = out.get("value")
                    rec.lower = out.get("lower")
                    rec.upper = out.get("upper")
                except Exception as exc:  # noqa: BLE001
                    rec.error = f"{type(exc).__name__}: {exc}"
                rec.runtime = time.perf_counter() - t0
                report.records.append(rec)
    return report


def asdict_shallow(obj) -> dict:
    return {f: getattr(obj, f) for f in obj.__dataclass_fields__}
