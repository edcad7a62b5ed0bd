"""Exact reference computations by exhaustive enumeration.

Everything here is exponential on purpose; these functions are the ground
truth the estimators, bounds and optimizers are tested against.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import DisconnectedError, Network, Path, PathPair

DEFAULT_SUPPLY_CAP = 22
DEFAULT_PATH_BUDGET = 100_000


class OracleLimitError(RuntimeError):
    """Instance too large for the oracle."""


@dataclass(frozen=True)
class ExactResult:
    probability: float | Fraction
    enumerated_supply_count: int
    enumeration_size: int


def _supply_index(net: Network, node_lists: list[list[str]], cap: int) -> list[str]:
    us = sorted(set().union(*(net.supplies(v) for nodes in node_lists for v in nodes)))
    if len(us) > cap:
        raise OracleLimitError(f"instance too large for oracle: {len(us)} supplies > cap {cap}")
    return us


def _masks(net: Network, nodes: list[str], index: dict[str, int]) -> list[int]:
    out = []
    for v in nodes:
        m = 0
        for u in net.supplies(v):
            m |= 1 << index[u]
        out.append(m)
    return out


def _subset_probs(p: list[float]) -> np.ndarray:
    # entry k is Pr(exactly the supplies in bitmask k fail); bit i <-> p[i]
    probs = np.ones(1)
    for q in p:
        probs = np.concatenate([probs * (1.0 - q), probs * q])
    return probs


def _fails(subsets: np.ndarray, masks: list[int]) -> np.ndarray:
    hit = np.zeros(subsets.shape, dtype=bool)
    for m in masks:
        hit |= (subsets & m) == m
    return hit


def _enumerate(net: Network, groups: list[list[str]], cap: int, exact: bool) -> ExactResult:
    """Pr(every group has at least one node whose supplies all failed)."""
    us = _supply_index(net, groups, cap)
    index = {u: i for i, u in enumerate(us)}
    group_masks = [_masks(net, g, index) for g in groups]
    n = len(us)
    size = 1 << n
    if any(not g for g in group_masks):
        return ExactResult(Fraction(0) if exact else 0.0, n, size)
    if exact:
        ps = [Fraction(net.p(u)) for u in us]
        total = Fraction(0)
        for k in range(size):
            if all(any(k & m == m for m in ms) for ms in group_masks):
                w = Fraction(1)
                for i, q in enumerate(ps):
                    w *= q if k >> i & 1 else 1 - q
                total += w
        return ExactResult(total, n, size)
    subsets = np.arange(size, dtype=np.int64)
    ok = np.ones(size, dtype=bool)
    for ms in group_masks:
        ok &= _fails(subsets, ms)
    probs = _subset_probs([net.p(u) for u in us])
    return ExactResult(float(np.sum(probs[ok])), n, size)


def exact_path_failure(
    net: Network, path: Path, cap: int = DEFAULT_SUPPLY_CAP, exact: bool = False
) -> ExactResult:
    """Exact failure probability of ``path``.

    With ``exact=True`` the sum is carried out in rational arithmetic over
    the exact binary values of the float probabilities.
    """
    net.check_path(path)
    return _enumerate(net, [net.interior(path)], cap, exact)


def exact_pair_failure(
    net: Network, pair: PathPair, cap: int = DEFAULT_SUPPLY_CAP, exact: bool = False
) -> ExactResult:
    net.check_pair(pair)
    return _enumerate(net, [net.interior(pair.first), net.interior(pair.second)], cap, exact)


def exact_node_list_failure(
    net: Network, nodes: list[str], cap: int = DEFAULT_SUPPLY_CAP, exact: bool = False
) -> ExactResult:
    """Failure probability of an arbitrary node list (need not be a path)."""
    return _enumerate(net, [[v for v in nodes if not net.is_terminal(v)]], cap, exact)


def exact_resilience(net: Network, pair: PathPair, cap: int = DEFAULT_SUPPLY_CAP) -> int:
    """Largest d such that removing any d supplies leaves one path alive."""
    net.check_pair(pair)
    a, b = net.interior(pair.first), net.interior(pair.second)
    if not a or not b:
        raise ValueError("resilience undefined: a path has no failing nodes")
    us = _supply_index(net, [a, b], cap)
    index = {u: i for i, u in enumerate(us)}
    ma, mb = _masks(net, a, index), _masks(net, b, index)
    for c in range(len(us) + 1):
        for combo in itertools.combinations(range(len(us)), c):
            k = 0
            for i in combo:
                k |= 1 << i
            if any(k & m == m for m in ma) and any(k & m == m for m in mb):
                return c - 1
    raise AssertionError("removing every supply must disconnect both paths")


# -- path enumeration --------------------------------------------------------


def simple_paths(net: Network, budget: int = DEFAULT_PATH_BUDGET, skip_direct: bool = False) -> list[Path]:
    """All simple s-t paths by depth-first search, in lexicographic order."""
    s, t = net.s, net.t
    out: list[Path] = []
    stack = [s]
    on = {s}

    def dfs(v: str) -> None:
        for w in net.neighbors(v):
            if w in on:
                continue
            if w == t:
                if skip_direct and v == s:
                    continue
                out.append(Path(stack + [t]))
                if len(out) > budget:
                    raise OracleLimitError(f"more than {budget} simple s-t paths")
                continue
            on.add(w)
            stack.append(w)
            dfs(w)
            stack.pop()
            on.discard(w)

    dfs(s)
    return sorted(out, key=lambda p: p.nodes)


def exact_best_path(
    net: Network, budget: int = DEFAULT_PATH_BUDGET, cap: int = DEFAULT_SUPPLY_CAP
) -> tuple[Path, ExactResult]:
    paths = simple_paths(net, budget)
    if not paths:
        raise DisconnectedError(f"no path between {net.s} and {net.t}")
    best = None
    for p in paths:  # already in lexicographic order; strict < keeps the first
        r = exact_path_failure(net, p, cap)
        if best is None or r.probability < best[1].probability:
            best = (p, r)
    return best


def pair_candidates(net: Network, require_node_disjoint: bool, budget: int = DEFAULT_PATH_BUDGET):
    """Unordered pairs (P, Q), P <= Q lexicographically, of simple s-t paths.

    The direct s-t edge is never used: a link between the terminals cannot
    fail, which would make every pair containing it trivially perfect.
    """
    paths = simple_paths(net, budget, skip_direct=True)
    count = 0
    for i, p in enumerate(paths):
        ip = set(net.interior(p))
        for q in paths[i if not require_node_disjoint else i + 1:]:
            if require_node_disjoint and ip & set(net.interior(q)):
                continue
            count += 1
            if count > budget:
                raise OracleLimitError(f"more than {budget} path pairs")
            yield PathPair(p, q, require_node_disjoint)


def exact_best_pair(
    net: Network,
    require_node_disjoint: bool = True,
    budget: int = DEFAULT_PATH_BUDGET,
    cap: int = DEFAULT_SUPPLY_CAP,
) -> tuple[PathPair, ExactResult]:
    best = None
    for pair in pair_candidates(net, require_node_disjoint, budget):
        r = exact_pair_failure(net, pair, cap)
        if best is None or r.probability < best[1].probability:
            best = (pair, r)
    if best is None:
        raise DisconnectedError("no two node-disjoint s-t paths" if require_node_disjoint else "no s-t path pair")
    return best
