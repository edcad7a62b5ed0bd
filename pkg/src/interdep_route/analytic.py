"""Closed-form reliability indicators, small-p sandwich intervals and bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .model import (
    Network,
    Path,
    PathPair,
    log_product,
    node_failure_probability,
    reduce_redundant,
    survival_complement,
)

# relative slack on the p <= threshold preconditions, for thresholds hit exactly
_P_SLACK = 1e-12


class SandwichPreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class PathIndicators:
    n_s_min: int
    m_bar: int
    valid_p_max: float
    m: int = 0
    uniform_ns: bool = False


@dataclass(frozen=True)
class PairIndicators:
    d: int
    m_bar: int
    m1: int = 0
    m2: int = 0


@dataclass(frozen=True)
class Bounds:
    lower: float
    upper: float
    ratio_cap: int


def indicators_single(net: Network, path: Path, epsilon: float = 0.1) -> PathIndicators:
    """(n_s_min, m_bar) of a path.

    ``valid_p_max`` is the largest uniform supply failure probability for
    which the sandwich interval is guaranteed at this ``epsilon``.
    """
    net.check_path(path)
    nodes = net.interior(path)
    if not nodes:
        raise ValueError("path has no failing nodes")
    sizes = [len(net.supplies(v)) for v in nodes]
    k = min(sizes)
    if k < 1:
        raise ValueError("a path node has no supply nodes")
    kept = reduce_redundant(net, path)
    m_bar = sum(1 for v in kept if len(net.supplies(v)) == k)
    uniform = len(set(sizes)) == 1
    p_max = 2 * epsilon / m_bar if uniform else epsilon / len(nodes)
    return PathIndicators(k, m_bar, p_max, len(nodes), uniform)


def _check_p(p: float, limit: float) -> None:
    if p > limit * (1 + _P_SLACK):
        raise SandwichPreconditionError(f"p={p} too large for sandwich guarantee (need p <= {limit})")


def _clamp(x: float) -> float:
    return min(1.0, max(0.0, x))


def approx_single(
    ind: PathIndicators, p: float, epsilon: float, m: int | None = None, uniform_ns: bool | None = None
) -> tuple[float, float]:
    """Interval guaranteed to hold the failure probability at uniform ``p``.

    General case needs p <= epsilon/m; when every path node has the same
    number of supplies the tighter [(1-eps) m_bar p^k, m_bar p^k] holds for
    p <= 2 epsilon / m_bar.
    """
    m = ind.m if m is None else m
    uniform_ns = ind.uniform_ns if uniform_ns is None else uniform_ns
    lead = ind.m_bar * p**ind.n_s_min
    if uniform_ns:
        _check_p(p, 2 * epsilon / ind.m_bar)
        return _clamp((1 - epsilon) * lead), _clamp(lead)
    _check_p(p, epsilon / m)
    return _clamp((1 - epsilon) * lead), _clamp((1 + epsilon) * lead)


def transform_probabilities(net: Network) -> dict[str, float]:
    """Per-supply p~ = 1 - (1 - p)^(1/n_d) that decouples shared supplies."""
    out = {}
    for u in sorted(net.supply_nodes):
        p, nd = net.p(u), net.n_d_of(u)
        if nd <= 1:
            out[u] = p
        else:
            out[u] = -math.expm1(math.log1p(-p) / nd) if p < 1.0 else 1.0
    return out


def transformed_node_probability(net: Network, v: str, pt: dict[str, float]) -> float:
    if net.is_terminal(v):
        return 0.0
    return log_product([pt[u] for u in sorted(net.supplies(v))])


def bounds_single(net: Network, path: Path, pt: dict[str, float] | None = None) -> Bounds:
    net.check_path(path)
    pt = transform_probabilities(net) if pt is None else pt
    nodes = net.interior(path)
    upper = survival_complement([node_failure_probability(net, v) for v in nodes])
    lower = survival_complement([transformed_node_probability(net, v, pt) for v in nodes])
    return Bounds(lower, upper, max(net.n_d, 1) ** net.n_s)


def cross_unions(net: Network, pair: PathPair) -> list[frozenset[str]]:
    a, b = net.interior(pair.first), net.interior(pair.second)
    return [net.supplies(i) | net.supplies(j) for i in a for j in b]


def indicators_pair(net: Network, pair: PathPair) -> PairIndicators:
    net.check_pair(pair)
    a, b = net.interior(pair.first), net.interior(pair.second)
    if not a or not b:
        raise ValueError("each path of the pair needs at least one failing node")
    unions = cross_unions(net, pair)
    smallest = min(len(u) for u in unions)
    # unions of the minimum size cannot strictly contain another union
    m_bar = len({u for u in unions if len(u) == smallest})
    return PairIndicators(smallest - 1, m_bar, len(a), len(b))


def approx_pair(
    ind: PairIndicators, p: float, epsilon: float, m1: int | None = None, m2: int | None = None
) -> tuple[float, float]:
    m1 = ind.m1 if m1 is None else m1
    m2 = ind.m2 if m2 is None else m2
    _check_p(p, epsilon / (m1 * m2))
    lead = ind.m_bar * p ** (ind.d + 1)
    return _clamp((1 - epsilon) * lead), _clamp((1 + epsilon) * lead)
