"""(epsilon, delta) estimation of path and path-pair failure probabilities.

The path failure event is a monotone DNF: one clause per failing path node
(literals = its supplies), or one clause per cross pair of nodes for a pair
of paths (literals = the union of both supply sets).  The estimator is the
Karp-Luby-style importance sampler: draw a clause with probability
proportional to its weight, force it true, draw the remaining literals, and
count the draw when the forced clause is the first true clause.

Randomness: numpy PCG64 streams spawned from ``SeedSequence(seed)``, one
child stream per fixed-size chunk of trials.  Chunks may be processed by any
number of workers (``INTERDEP_ROUTE_THREADS``) without changing the result.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import Network, Path, PathPair

CHUNK = 1 << 14


@dataclass(frozen=True)
class Estimate:
    value: float
    epsilon: float | None
    delta: float | None
    trials_a: int
    successes_b: int
    weight_sum: float
    seed: int | None
    clauses: int = 0
    method: str = "sampling"


def iteration_count(m: int, epsilon: float, delta: float) -> int:
    if not (0.0 < epsilon < 1.0):
        raise ValueError(f"epsilon must be in (0,1), got {epsilon}")
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must be in (0,1), got {delta}")
    if m < 1:
        raise ValueError(f"clause count must be >= 1, got {m}")
    return math.ceil(3 * m * math.log(2 / delta) / epsilon**2)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("INTERDEP_ROUTE_THREADS", "1")))
    except ValueError:
        return 1


class _Dnf:
    """Clause/literal incidence for a failure event over a set of supplies."""

    def __init__(self, net: Network, clauses: list[frozenset[str]]):
        self.supplies = sorted(set().union(*clauses)) if clauses else []
        idx = {u: i for i, u in enumerate(self.supplies)}
        self.p = np.array([net.p(u) for u in self.supplies], dtype=float)
        self.inc = np.zeros((len(clauses), len(self.supplies)), dtype=np.int32)
        for c, lits in enumerate(clauses):
            for u in lits:
                self.inc[c, idx[u]] = 1
        self.size = self.inc.sum(axis=1)
        # clause weight = product of literal probabilities, in log space
        with np.errstate(divide="ignore"):
            logp = np.log(self.p)
        logw = np.array([logp[self.inc[c] == 1].sum() for c in range(len(clauses))])
        self.w = np.exp(logw)

    @property
    def m(self) -> int:
        return len(self.size)


def _path_clauses(net: Network, path: Path) -> list[frozenset[str]]:
    nodes = net.interior(path)
    for v in nodes:
        if not net.supplies(v):
            raise ValueError(f"node {v!r} has no supply nodes")
    return [net.supplies(v) for v in nodes]


def _pair_clauses(net: Network, pair: PathPair) -> list[frozenset[str]]:
    a = _path_clauses(net, pair.first)
    b = _path_clauses(net, pair.second)
    return [sa | sb for sa in a for sb in b]  # (i, j) lexicographic


def _run_chunk(dnf: _Dnf, cdf: np.ndarray, n: int, seed_seq: np.random.SeedSequence) -> int:
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    # inverse-CDF clause choice over positive-weight clauses
    chosen = np.searchsorted(cdf, rng.random(n) * cdf[-1], side="right")
    chosen = np.minimum(chosen, len(cdf) - 1)
    failed = rng.random((n, dnf.p.size)) < dnf.p
    failed |= dnf.inc[chosen].astype(bool)
    true_clauses = (failed.astype(np.int32) @ dnf.inc.T) == dnf.size
    first = np.argmax(true_clauses, axis=1)
    return int(np.count_nonzero(first == chosen))


def _estimate(dnf: _Dnf, epsilon: float, delta: float, seed: int, method: str) -> Estimate:
    a = iteration_count(max(dnf.m, 1), epsilon, delta)
    total = float(math.fsum(dnf.w))
    if dnf.m == 0 or total == 0.0:
        return Estimate(0.0, epsilon, delta, 0, 0, total, seed, dnf.m, method)
    # zero-weight clauses can never be forced; give them an empty CDF step
    cdf = np.cumsum(dnf.w)
    sizes = [CHUNK] * (a // CHUNK) + ([a % CHUNK] if a % CHUNK else [])
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(sizes, seqs))
    workers = min(_workers(), len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            counts = list(ex.map(lambda j: _run_chunk(dnf, cdf, *j), jobs))
    else:
        counts = [_run_chunk(dnf, cdf, *j) for j in jobs]
    b = sum(counts)
    return Estimate(b / a * total, epsilon, delta, a, b, total, seed, dnf.m, method)


def estimate_path_failure(
    net: Network, path: Path, epsilon: float = 0.05, delta: float = 0.05, seed: int = 0
) -> Estimate:
    net.check_path(path)
    return _estimate(_Dnf(net, _path_clauses(net, path)), epsilon, delta, seed, "sampling")


def estimate_pair_failure(
    net: Network, pair: PathPair, epsilon: float = 0.05, delta: float = 0.05, seed: int = 0
) -> Estimate:
    net.check_pair(pair)
    return _estimate(_Dnf(net, _pair_clauses(net, pair)), epsilon, delta, seed, "sampling")


def naive_monte_carlo(net: Network, route: Path | PathPair, trials: int, seed: int = 0) -> Estimate:
    """Fraction of independent supply draws under which the route fails."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if isinstance(route, PathPair):
        net.check_pair(route)
        groups = [_path_clauses(net, route.first), _path_clauses(net, route.second)]
    else:
        net.check_path(route)
        groups = [_path_clauses(net, route)]
    dnfs = [_Dnf(net, g) for g in groups]
    supplies = sorted(set().union(*(d.supplies for d in dnfs)))
    idx = {u: i for i, u in enumerate(supplies)}
    p = np.array([net.p(u) for u in supplies], dtype=float)
    sizes = [CHUNK] * (trials // CHUNK) + ([trials % CHUNK] if trials % CHUNK else [])
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    b = 0
    for n, seq in zip(sizes, seqs):
        rng = np.random.Generator(np.random.PCG64(seq))
        failed = (rng.random((n, p.size)) < p).astype(np.int32)
        down = np.ones(n, dtype=bool)
        for d in dnfs:
            if d.m == 0:
                down[:] = False
                continue
            cols = [idx[u] for u in d.supplies]
            down &= ((failed[:, cols] @ d.inc.T) == d.size).any(axis=1)
        b += int(np.count_nonzero(down))
    return Estimate(b / trials, None, None, trials, b, 1.0, seed, sum(d.m for d in dnfs), "naive")
