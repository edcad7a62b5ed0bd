import itertools
import math
from pathlib import Path as FsPath

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from instances import random_network
from interdep_route.model import DisconnectedError, Path, PathPair, build_network
from interdep_route.optimize import (
    IlpModel,
    InconsistentAssignmentError,
    build_max_d,
    build_min_mbar,
    build_min_weighted,
    export_lp,
    extract_route,
    objective_value,
    route_assignment,
    solve_exact,
    violated_rows,
    weight_ratio,
)
from interdep_route.oracle import exact_resilience

DATA = FsPath(__file__).parent / "data"


def toy_min_mbar():
    sets = {"s": [], "t": [], "a": ["1", "2"], "b": ["2", "3"], "c": ["1", "2"], "d": ["4"]}
    edges = [("s", "a"), ("a", "b"), ("b", "t"), ("s", "c"), ("c", "t"), ("s", "d"), ("d", "t")]
    return build_network(sets, edges, 0.1, ("s", "t"))


def _ring(a_sets, b_sets, extra=()):
    a = [f"a{i}" for i in range(len(a_sets))]
    b = [f"b{i}" for i in range(len(b_sets))]
    sets = {"s": [], "t": [], **dict(zip(a, a_sets)), **dict(zip(b, b_sets))}
    pa, pb = ["s", *a, "t"], ["s", *b, "t"]
    edges = list(zip(pa, pa[1:])) + list(zip(pb, pb[1:])) + list(extra)
    return build_network(sets, edges, 0.1, ("s", "t")), PathPair(Path(pa), Path(pb))


def brute_min_mbar(net):
    g = nx.Graph(list(net.edges))
    paths = [p for p in nx.all_simple_paths(g, net.s, net.t)]
    cap = lambda p: min((len(net.supplies(v)) for v in p[1:-1]), default=math.inf)  # noqa: E731
    k = max(cap(p) for p in paths)
    return k, min(len({net.supplies(v) for v in p[1:-1] if len(net.supplies(v)) == k}) for p in paths if cap(p) == k)


def disjoint_pairs(net):
    g = nx.Graph([e for e in net.edges if set(e) != {net.s, net.t}])
    if net.s not in g or net.t not in g:
        return []
    paths = [Path(p) for p in nx.all_simple_paths(g, net.s, net.t)]
    return [
        PathPair(p, q) for p, q in itertools.combinations(paths, 2)
        if not set(net.interior(p)) & set(net.interior(q))
    ]


def d_mbar(net, pair):
    unions = [net.supplies(i) | net.supplies(j) for i in net.interior(pair.first) for j in net.interior(pair.second)]
    small = min(map(len, unions))
    return small - 1, len({u for u in unions if len(u) == small})


# -- min_mbar ------------------------------------------------------------------


def test_min_mbar_three_distinct_sets():
    sets = {"s": [], "t": [], "a": ["1", "2"], "b": ["3", "4"], "c": ["5", "6"], "d": ["9"]}
    edges = [("s", "a"), ("a", "b"), ("b", "c"), ("c", "t"), ("s", "d"), ("d", "t")]
    sol = solve_exact(build_min_mbar(build_network(sets, edges, 0.1, ("s", "t"))))
    assert sol.status == "optimal" and sol.objective == 3
    assert sol.route == Path(["s", "a", "b", "c", "t"])


def test_min_mbar_single_path_graph():
    sets = {"s": [], "t": [], "a": ["1", "2"], "b": ["1", "2"], "c": ["1", "2", "3"]}
    net = build_network(sets, [("s", "a"), ("a", "b"), ("b", "c"), ("c", "t")], 0.1, ("s", "t"))
    sol = solve_exact(build_min_mbar(net))
    assert sol.route == Path(["s", "a", "b", "c", "t"]) and sol.objective == 1


def test_min_mbar_toy():
    model = build_min_mbar(toy_min_mbar())
    assert model.k == 2 and "d" not in model.nodes
    sol = solve_exact(model)
    assert sol.objective == 1 and sol.route == Path(["s", "c", "t"])


@given(st.integers(0, 10**6), st.integers(4, 10))
@settings(max_examples=40)
def test_min_mbar_matches_brute_force(seed, n):
    net = random_network(seed, n=n, supplies=5, k_max=3)
    sol = solve_exact(build_min_mbar(net))
    k, best = brute_min_mbar(net)
    assert sol.status == "optimal" and sol.objective == best
    assert net.is_st_path(sol.route)


# -- max_d ---------------------------------------------------------------------


def test_max_d_unions_of_size_two():
    net, pair = _ring([["1"], ["2"]], [["3"]])
    sol = solve_exact(build_max_d(net))
    assert sol.objective == 1 and sol.extras["d"] == 1


def test_max_d_three():
    net, pair = _ring([["1", "2"], ["3", "4"]], [["5", "6"], ["7", "8"]])
    sol = solve_exact(build_max_d(net))
    assert sol.objective == 3 == exact_resilience(net, sol.route)


def test_max_d_prefers_resilient_pair():
    # routes via a and via b both contain a node fed by {1,2}
    sets = {"s": [], "t": [], "a": ["1", "2"], "b": ["1", "2"], "c": ["1", "3", "4"], "d": ["2", "5", "6"]}
    edges = [("s", "a"), ("a", "t"), ("s", "b"), ("b", "t"), ("s", "c"), ("c", "d"), ("d", "t")]
    net = build_network(sets, edges, 0.1, ("s", "t"))
    sol = solve_exact(build_max_d(net))
    assert sol.objective >= 2
    assert Path(["s", "c", "d", "t"]) in (sol.route.first, sol.route.second)


def test_max_d_infeasible():
    net = build_network({"s": [], "t": [], "a": ["1"]}, [("s", "a"), ("a", "t")], 0.1, ("s", "t"))
    sol = solve_exact(build_max_d(net))
    assert sol.status == "infeasible" and sol.route is None


def test_big_m():
    net, _ = _ring([["1", "2"]], [["3", "4", "5"]])
    model = build_max_d(net)
    assert model.big_M == 2 * 5 + 1 and model.d_cap == 5


@given(st.integers(0, 10**6), st.integers(5, 9))
@settings(max_examples=40)
def test_max_d_matches_brute_force(seed, n):
    net = random_network(seed, n=n, supplies=6, extra_edges=7)
    pairs = disjoint_pairs(net)
    sol = solve_exact(build_max_d(net))
    if not pairs:
        assert sol.status == "infeasible"
        return
    assert sol.objective == max(exact_resilience(net, p) for p in pairs)
    net.check_pair(sol.route)


# -- min_weighted --------------------------------------------------------------


def test_weight_ratio_invariant():
    net = random_network(3, n=9, supplies=6, extra_edges=8, k_max=3)
    model = build_min_weighted(net)
    R = weight_ratio(len(model.nodes))
    assert R == math.ceil(len(model.nodes) ** 2 / 2)
    for l in range(1, max(model.weights)):
        assert model.weights[l] // model.weights[l + 1] == R
        assert model.weights[l] >= R * model.weights[l + 1]


def test_min_weighted_unique_pair():
    net, pair = _ring([["1", "2"], ["3"]], [["1", "2"]])
    sol = solve_exact(build_min_weighted(net))
    assert {sol.route.first, sol.route.second} == {pair.first, pair.second}


def test_min_weighted_fewer_minimal_unions():
    # every pair has d = 1; the route through b and b2 brings two minimal
    # unions with either partner, so only (a, c) has m_bar = 1
    sets = {"s": [], "t": [], "a": ["1"], "b": ["2"], "b2": ["4"], "c": ["3"]}
    edges = [("s", "a"), ("a", "t"), ("s", "b"), ("b", "b2"), ("b2", "t"), ("s", "c"), ("c", "t")]
    net = build_network(sets, edges, 0.1, ("s", "t"))
    sol = solve_exact(build_min_weighted(net))
    assert (sol.extras["d"], sol.extras["m_bar"]) == (1, 1)
    assert {sol.route.first.nodes, sol.route.second.nodes} == {("s", "a", "t"), ("s", "c", "t")}


@given(st.integers(0, 10**6), st.integers(5, 9))
@settings(max_examples=40)
def test_min_weighted_lexicographic(seed, n):
    net = random_network(seed, n=n, supplies=6, extra_edges=7)
    pairs = disjoint_pairs(net)
    sol = solve_exact(build_min_weighted(net))
    if not pairs:
        assert sol.status == "infeasible"
        return
    best = min((-d, m) for d, m in (d_mbar(net, p) for p in pairs))
    got = d_mbar(net, sol.route)
    assert (-got[0], got[1]) == best
    assert (sol.extras["d"], sol.extras["m_bar"]) == got


# -- solver plumbing -----------------------------------------------------------


def test_budget_exceeded_carries_incumbent():
    net = random_network(11, n=10, supplies=6, extra_edges=10)
    sol = solve_exact(build_min_weighted(net), budget=5)
    assert sol.status == "budget-exceeded"
    if sol.route is not None:
        net.check_pair(sol.route)


def test_solution_is_deterministic():
    net = random_network(12, n=9, extra_edges=8)
    a = solve_exact(build_min_weighted(net))
    b = solve_exact(build_min_weighted(net))
    assert a == b


def test_assignment_satisfies_rows():
    net = random_network(13, n=9, extra_edges=8)
    for build in (build_min_mbar, build_max_d, build_min_weighted):
        model = build(net)
        sol = solve_exact(model)
        assert violated_rows(model, sol.assignment) == []
        assert objective_value(model, sol.assignment) == sol.objective


def test_extract_pure_path():
    model = build_min_mbar(toy_min_mbar())
    route = Path(["s", "a", "b", "t"])
    assert extract_route(model, route_assignment(model, route)) == route


def test_extract_drops_disjoint_cycle():
    sets = {"s": [], "t": [], "a": ["1"], "x": ["2"], "y": ["3"], "z": ["4"]}
    edges = [("s", "a"), ("a", "t"), ("x", "y"), ("y", "z"), ("x", "z")]
    net = build_network(sets, edges, 0.1, ("s", "t"))
    model = build_min_mbar(net)
    route = Path(["s", "a", "t"])
    asg = route_assignment(model, route)
    for a, b in (("x", "y"), ("y", "z"), ("z", "x")):
        asg[model.x(1, a, b)] = 1
        asg[model.h(net.supplies(a))] = 1
    assert violated_rows(model, asg) == []
    assert extract_route(model, asg) == route


def test_extract_pair():
    net, pair = _ring([["1"], ["2"]], [["3"]])
    model = build_max_d(net)
    got = extract_route(model, route_assignment(model, pair))
    net.check_pair(got)
    assert got == pair


def test_extract_inconsistent():
    model = build_min_mbar(toy_min_mbar())
    with pytest.raises(InconsistentAssignmentError):
        extract_route(model, {})
    # claimed objective 0 but the path needs one set
    asg = route_assignment(model, Path(["s", "c", "t"]))
    asg["h_0"] = 0
    with pytest.raises(InconsistentAssignmentError):
        extract_route(model, asg)


def test_min_mbar_disconnected_after_pruning():
    net = build_network({"s": [], "t": []}, [], 0.1, ("s", "t"))
    with pytest.raises(DisconnectedError):
        build_min_mbar(net)


# -- LP export -----------------------------------------------------------------


def test_export_empty_model():
    model = IlpModel("min_mbar", "min", "s", "t", [], [], {})
    assert export_lp(model) == "\\ interdep_route model: min_mbar\nMinimize\n obj: 0\nEnd\n"


def test_export_golden():
    assert export_lp(build_min_mbar(toy_min_mbar())) == (DATA / "min_mbar_toy.lp").read_text()


def test_export_byte_stable():
    net = random_network(5, n=8, extra_edges=6)
    for build in (build_min_mbar, build_max_d, build_min_weighted):
        assert export_lp(build(net)) == export_lp(build(net))


def test_export_sections():
    text = export_lp(build_max_d(_ring([["1"]], [["2", "3"]])[0]))
    lines = text.splitlines()
    order = [lines.index(h) for h in ("Maximize", "Subject To", "Bounds", "Binary", "General", "End")]
    assert order == sorted(order)
    assert " 0 <= d <= 3" in lines


highspy = pytest.importorskip("highspy")


def _highs_optimum(text, tmp_path):
    f = tmp_path / "m.lp"
    f.write_text(text)
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.readModel(str(f))
    h.run()
    assert h.modelStatusToString(h.getModelStatus()) == "Optimal"
    return h.getInfo().objective_function_value


@pytest.mark.parametrize(
    "net, build",
    [
        (toy_min_mbar(), build_min_mbar),
        (_ring([["1", "2"], ["3", "4"]], [["1", "5"], ["6"]], extra=[("a0", "b1")])[0], build_max_d),
        (_ring([["1"], ["2", "3"]], [["1", "3"]], extra=[("a0", "b0")])[0], build_min_weighted),
    ],
)
def test_external_solver_agrees(net, build, tmp_path):
    model = build(net)
    assert _highs_optimum(export_lp(model), tmp_path) == pytest.approx(solve_exact(model).objective)
