import math
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from instances import random_network, random_pair_instance, random_path_instance, supply_paths
from interdep_route.analytic import (
    PairIndicators,
    PathIndicators,
    SandwichPreconditionError,
    approx_pair,
    approx_single,
    bounds_single,
    indicators_pair,
    indicators_single,
    transform_probabilities,
    transformed_node_probability,
)
from interdep_route.model import Path, PathPair, build_network, line_network, node_failure_probability
from interdep_route.oracle import exact_pair_failure, exact_path_failure, exact_resilience


@pytest.mark.parametrize(
    "sets, expect",
    [
        ([{1, 2}, {3, 4}, {5, 6}], (2, 3)),
        ([{1, 2}, {1, 2}, {3, 4}, {5}], (1, 1)),
        ([{1}, {1, 2}], (1, 1)),
    ],
)
def test_indicators_single_examples(sets, expect):
    net, path = line_network(sets, 0.01)
    ind = indicators_single(net, path)
    assert (ind.n_s_min, ind.m_bar) == expect
    assert ind.m == len(sets)


def test_corollary_interval():
    lo, hi = approx_single(PathIndicators(2, 8, 0.01, m=8, uniform_ns=True), 1e-2, 0.04)
    assert lo == pytest.approx(7.68e-4, abs=1e-10)
    assert hi == pytest.approx(8.00e-4, abs=1e-10)


def test_single_interval_trivial_case():
    eps, m = 0.2, 4
    p = eps / m
    lo, hi = approx_single(PathIndicators(1, 1, p, m=m), p, eps)
    assert lo <= p <= hi


def test_single_precondition():
    ind = PathIndicators(1, 2, 0.05, m=2)
    with pytest.raises(SandwichPreconditionError, match="too large"):
        approx_single(ind, 0.06, 0.1)
    # the threshold itself is admissible
    approx_single(ind, 0.1 / 2, 0.1)


def test_valid_p_max():
    net, path = line_network([{1, 2}, {3}, {4, 5}], 0.01)
    assert indicators_single(net, path, 0.3).valid_p_max == pytest.approx(0.1)
    net, path = line_network([{1, 2}, {3, 4}], 0.01)
    assert indicators_single(net, path, 0.3).valid_p_max == pytest.approx(0.3)


@given(supply_paths(max_nodes=5, max_supplies=8, p=0.5), st.floats(0.01, 0.3), st.floats(0.0, 1.0))
def test_single_sandwich_contains_oracle(inst, eps, frac):
    net, path = inst
    m = len(net.interior(path))
    p = eps / m * max(frac, 1e-3)
    net = net.with_probabilities(p)
    ind = indicators_single(net, path, eps)
    lo, hi = approx_single(ind, p, eps)
    exact = exact_path_failure(net, path).probability
    assert lo * (1 - 1e-12) <= exact <= hi * (1 + 1e-12)


def test_transform_examples():
    net = build_network({"s": [], "a": ["u"], "b": ["u"], "t": []}, [("s", "a"), ("a", "b"), ("b", "t")],
                        0.19, ("s", "t"))
    assert transform_probabilities(net)["u"] == pytest.approx(0.1, rel=1e-12)
    net3 = build_network({"s": [], "a": ["u"], "b": ["u"], "c": ["u"], "t": []},
                         [("s", "a"), ("a", "b"), ("b", "c"), ("c", "t")], 0.271, ("s", "t"))
    assert transform_probabilities(net3)["u"] == pytest.approx(0.1, rel=1e-12)
    one, _ = line_network([{1}, {2}], 0.37)
    assert transform_probabilities(one) == {"1": 0.37, "2": 0.37}


def test_transform_counts_whole_network():
    # the shared supply feeds a node off the path as well
    net = build_network(
        {"s": [], "a": ["u"], "x": ["u"], "t": []},
        [("s", "a"), ("a", "t"), ("s", "x")], 0.19, ("s", "t"),
    )
    assert transform_probabilities(net)["u"] == pytest.approx(0.1)


def test_bounds_examples():
    net, path = line_network([{1}, {2}], {1: 0.1, 2: 0.2})
    b = bounds_single(net, path)
    assert b.lower == pytest.approx(0.28) and b.upper == pytest.approx(0.28)
    assert b.ratio_cap == 1
    shared = build_network({"s": [], "a": ["u"], "b": ["u"], "t": []}, [("s", "a"), ("a", "b"), ("b", "t")],
                           0.19, ("s", "t"))
    path = Path(["s", "a", "b", "t"])
    b = bounds_single(shared, path)
    assert b.lower == pytest.approx(0.19, rel=1e-12)
    assert b.upper == pytest.approx(0.3439, rel=1e-12)
    assert exact_path_failure(shared, path).probability == pytest.approx(0.19)
    assert b.upper / b.lower == pytest.approx(1.81)
    assert b.ratio_cap == 2


@given(st.integers(0, 10**6))
def test_bounds_contain_oracle(seed):
    net, path = random_path_instance(seed)
    b = bounds_single(net, path)
    exact = exact_path_failure(net, path).probability
    assert b.lower <= exact * (1 + 1e-12) + 1e-15
    assert exact <= b.upper * (1 + 1e-12) + 1e-15
    assert b.upper <= b.ratio_cap * b.lower * (1 + 1e-12) + 1e-15


def test_product_inequality():
    r = random.Random(0)
    for _ in range(2000):
        p1, p2 = r.uniform(1e-6, 1 - 1e-6), r.uniform(1e-6, 1 - 1e-6)
        a, b = r.uniform(1e-3, 1), r.uniform(1e-3, 1)
        lhs = -math.expm1(a * b * math.log1p(-p1 * p2))
        rhs = -math.expm1(a * math.log1p(-p1)) * -math.expm1(b * math.log1p(-p2))
        assert rhs - lhs >= -1e-12


@given(st.integers(0, 10**6))
def test_node_survival_inequality(seed):
    # 1 - p(v) >= (1 - p~(v))^(n_d^n_s) for every interior node
    net = random_network(seed, n=8, supplies=4, p=(0.01, 0.99))
    pt = transform_probabilities(net)
    power = max(net.n_d, 1) ** net.n_s
    for v in net.demand_nodes:
        if net.is_terminal(v):
            continue
        lhs = 1 - node_failure_probability(net, v)
        rhs = (1 - transformed_node_probability(net, v, pt)) ** power
        assert lhs - rhs >= -1e-12


def test_transformed_probability_terminal():
    net = random_network(0)
    pt = transform_probabilities(net)
    assert transformed_node_probability(net, net.s, pt) == 0.0


# -- pairs ---------------------------------------------------------------------


def _ring(a_sets, b_sets, p=0.1):
    a = [f"a{i}" for i in range(len(a_sets))]
    b = [f"b{i}" for i in range(len(b_sets))]
    sets = {"s": [], "t": [], **dict(zip(a, a_sets)), **dict(zip(b, b_sets))}
    pa, pb = ["s", *a, "t"], ["s", *b, "t"]
    net = build_network(sets, list(zip(pa, pa[1:])) + list(zip(pb, pb[1:])), p, ("s", "t"))
    return net, PathPair(Path(pa), Path(pb))


def test_indicators_pair_examples():
    net, pair = _ring([[1, 2], [5]], [[1, 2], [6, 7]])
    assert indicators_pair(net, pair).d == 1
    net, pair = _ring([[1, 2], [3, 4]], [[5, 6], [7, 8]])
    ind = indicators_pair(net, pair)
    assert (ind.d, ind.m_bar) == (3, 4)
    assert exact_resilience(net, pair) == 3
    net, pair = _ring([[1], [2]], [[3], [4]])
    ind = indicators_pair(net, pair)
    assert (ind.d, ind.m_bar, ind.m1, ind.m2) == (1, 4, 2, 2)


def test_pair_m_bar_counts_distinct_unions():
    # a0/b0 and a1/b0 produce the same union {1,2,3}
    net, pair = _ring([[1, 2], [1, 3]], [[2, 3]])
    ind = indicators_pair(net, pair)
    assert (ind.d, ind.m_bar) == (2, 1)


def test_approx_pair_formula():
    lo, hi = approx_pair(PairIndicators(1, 1, 1, 1), 1e-3, 0.1)
    assert lo == pytest.approx(0.9e-6, rel=1e-12) and hi == pytest.approx(1.1e-6, rel=1e-12)
    with pytest.raises(SandwichPreconditionError):
        approx_pair(PairIndicators(1, 1, 2, 2), 0.1, 0.1)


def test_identical_paths_pair_reduces_to_single():
    net, path = line_network([{1, 2}, {3, 4}], 0.01)
    pair = PathPair(path, path, require_node_disjoint=False)
    ind = indicators_pair(net, pair)
    single = indicators_single(net, path)
    # cross unions of a path with itself: the diagonal gives the node sets
    assert ind.d + 1 == single.n_s_min
    assert ind.m_bar == single.m_bar


def test_pair_d3_interval_contains_oracle():
    net, pair = _ring([[1, 2], [3, 4]], [[5, 6], [7, 8]])
    eps = 0.1
    p = eps / 4
    net = net.with_probabilities(p)
    lo, hi = approx_pair(indicators_pair(net, pair), p, eps)
    assert lo <= exact_pair_failure(net, pair).probability <= hi


@given(st.integers(0, 10**6), st.floats(0.0, 1.0))
def test_pair_sandwich_contains_oracle(seed, frac):
    net, pair = random_pair_instance(seed, p=0.5)
    ind = indicators_pair(net, pair)
    eps = 0.1
    p = eps / (ind.m1 * ind.m2) * max(frac, 1e-3)
    net = net.with_probabilities(p)
    lo, hi = approx_pair(ind, p, eps)
    exact = exact_pair_failure(net, pair).probability
    assert lo * (1 - 1e-12) <= exact <= hi * (1 + 1e-12)


@given(st.integers(0, 10**6))
def test_pair_d_equals_resilience(seed):
    net, pair = random_pair_instance(seed)
    assert indicators_pair(net, pair).d == exact_resilience(net, pair)


@given(st.integers(0, 10**6))
def test_pair_leading_term(seed):
    # Pr(both fail) / (m_bar p^(d+1)) -> 1 as p -> 0
    net, pair = random_pair_instance(seed)
    ind = indicators_pair(net, pair)
    p = Fraction(1, 10**4)
    net = net.with_probabilities(float(p))
    exact = exact_pair_failure(net, pair, exact=True).probability
    ratio = exact / (ind.m_bar * Fraction(net.p(next(iter(net.supply_nodes)))) ** (ind.d + 1))
    assert abs(ratio - 1) < Fraction(1, 100)
