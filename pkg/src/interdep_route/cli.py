"""Command-line front end.

Exit codes: 0 success, 1 usage/input error, 2 infeasible or disconnected,
3 budget or enumeration cap exceeded.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path as FsPath

from . import analytic, oracle, routing, sampler
from .experiment import EVALUATORS, ROUTE_METHODS, ExperimentSpec, Scenario, gen_scenario, run_experiment
from .model import DisconnectedError, Network, Path, PathPair, UnknownNodeError, validate_network
from .optimize import build_max_d, build_min_mbar, build_min_weighted, export_lp, solve_exact

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


class BudgetError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load(path: str) -> Network:
    net = Network.load(path)
    problems = validate_network(net)
    if problems:
        raise UsageError("invalid network: " + "; ".join(problems))
    return net


def _path(text: str) -> Path:
    return Path(x.strip() for x in text.split(",") if x.strip())


def _pair(text: str) -> PathPair:
    try:
        a, b = text.split(";")
    except ValueError:
        raise UsageError("--pair expects 'a,b,c;a,d,c'") from None
    return PathPair(_path(a), _path(b), True)


def _emit(args, payload: dict, lines: list[str]) -> None:
    if getattr(args, "json", False):
        sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write("\n".join(lines) + "\n")


def _path_of(args, net: Network) -> Path:
    if args.path:
        p = _path(args.path)
        net.check_path(p)
        return p
    return routing.approx_reliable_path(net)


def _pair_of(args, net: Network) -> PathPair:
    if args.pair:
        pr = _pair(args.pair)
        net.check_pair(pr)
        return pr
    return routing.reliable_pair_heuristic(net)


def _estimate_dict(e: sampler.Estimate) -> dict:
    return {
        "value": e.value, "epsilon": e.epsilon, "delta": e.delta, "trials_a": e.trials_a,
        "successes_b": e.successes_b, "weight_sum": e.weight_sum, "seed": e.seed, "method": e.method,
    }


# -- commands ----------------------------------------------------------------


def cmd_validate(args) -> int:
    net = Network.load(args.network)
    problems = validate_network(net)
    _emit(args, {"violations": problems}, problems or ["ok"])
    return EXIT_OK if not problems else EXIT_USAGE


def cmd_gen_scenario(args) -> int:
    topo = Network.load(args.topology) if args.topology else None
    sc = Scenario(
        topology=topo, n_demand=args.n_demand, degree=args.degree, supply_count=args.supplies,
        assign=args.assign, k=args.k, k_range=tuple(args.k_range), p_rule="uniform" if args.p_range else "constant",
        p=args.p, p_range=tuple(args.p_range) if args.p_range else (0.005, 0.015), seed=args.seed,
        terminals=(args.s, args.t) if args.s and args.t else None, two_connected=args.two_connected,
    )
    net = gen_scenario(sc)
    text = net.dumps()
    if args.out:
        FsPath(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _eval(args, pair: bool) -> int:
    net = _load(args.network)
    route = _pair_of(args, net) if pair else _path_of(args, net)
    if args.method == "sampling":
        f = sampler.estimate_pair_failure if pair else sampler.estimate_path_failure
        out = _estimate_dict(f(net, route, args.epsilon, args.delta, args.seed))
    elif args.method == "naive":
        out = _estimate_dict(sampler.naive_monte_carlo(net, route, args.trials, args.seed))
    else:
        f = oracle.exact_pair_failure if pair else oracle.exact_path_failure
        r = f(net, route, args.cap)
        out = {"value": float(r.probability), "enumerated_supply_count": r.enumerated_supply_count,
               "method": "oracle"}
    out["route"] = [list(route.first), list(route.second)] if pair else list(route)
    _emit(args, out, [f"{k}: {out[k]}" for k in sorted(out)])
    return EXIT_OK


def cmd_indicators(args) -> int:
    net = _load(args.network)
    if args.pair:
        pr = _pair_of(args, net)
        ind = analytic.indicators_pair(net, pr)
        out = {"d": ind.d, "m_bar": ind.m_bar, "m1": ind.m1, "m2": ind.m2}
        if args.p is not None:
            out["interval"] = list(analytic.approx_pair(ind, args.p, args.epsilon))
    else:
        p = _path_of(args, net)
        ind = analytic.indicators_single(net, p, args.epsilon)
        out = {"n_s_min": ind.n_s_min, "m_bar": ind.m_bar, "m": ind.m, "uniform_ns": ind.uniform_ns,
               "valid_p_max": ind.valid_p_max, "path": list(p)}
        if args.p is not None:
            out["interval"] = list(analytic.approx_single(ind, args.p, args.epsilon))
    _emit(args, out, [f"{k}: {out[k]}" for k in sorted(out)])
    return EXIT_OK


def cmd_bounds(args) -> int:
    net = _load(args.network)
    p = _path_of(args, net)
    b = analytic.bounds_single(net, p)
    out = {"lower": b.lower, "upper": b.upper, "ratio_cap": b.ratio_cap, "path": list(p)}
    _emit(args, out, [f"{k}: {out[k]}" for k in sorted(out)])
    return EXIT_OK


def _solve(model, budget):
    sol = solve_exact(model, budget)
    if sol.status == "infeasible":
        raise DisconnectedError("integer program infeasible")
    if sol.status == "budget-exceeded":
        raise BudgetError(f"branch-and-bound budget {budget} exceeded")
    return sol


def cmd_best_path(args) -> int:
    net = _load(args.network)
    out: dict = {"method": args.method}
    if args.method == "approx":
        p = routing.approx_reliable_path(net)
    elif args.method == "maxcap":
        p, k = routing.max_capacity_path(net)
        out["capacity"] = None if k == float("inf") else int(k)
    else:
        sol = _solve(build_min_mbar(net), args.budget)
        p = sol.route
        out["objective"] = sol.objective
    out["path"] = list(p)
    _emit(args, out, [f"{k}: {out[k]}" for k in sorted(out)])
    return EXIT_OK


def cmd_best_pair(args) -> int:
    net = _load(args.network)
    out: dict = {"method": args.method}
    if args.method == "heuristic":
        pr = routing.reliable_pair_heuristic(net)
        out["surrogate_length"] = routing.pair_length(net, pr)
    else:
        model = build_max_d(net) if args.objective == "max-d" else build_min_weighted(net)
        sol = _solve(model, args.budget)
        pr = sol.route
        out["objective"] = sol.objective
        out.update(sol.extras)
    out["first"], out["second"] = list(pr.first), list(pr.second)
    _emit(args, out, [f"{k}: {out[k]}" for k in sorted(out)])
    return EXIT_OK


def cmd_oracle(args) -> int:
    net = _load(args.network)
    out: dict = {}
    if args.best == "path":
        p, r = oracle.exact_best_path(net, args.budget, args.cap)
        out["path"] = list(p)
    elif args.best == "pair":
        pr, r = oracle.exact_best_pair(net, not args.allow_shared, args.budget, args.cap)
        out["first"], out["second"] = list(pr.first), list(pr.second)
        out["resilience"] = oracle.exact_resilience(net, pr, args.cap)
    elif args.pair:
        pr = _pair(args.pair)
        r = oracle.exact_pair_failure(net, pr, args.cap)
        out["resilience"] = oracle.exact_resilience(net, pr, args.cap)
    else:
        p = _path_of(args, net)
        r = oracle.exact_path_failure(net, p, args.cap)
        out["path"] = list(p)
    out["probability"] = float(r.probability)
    out["enumerated_supply_count"] = r.enumerated_supply_count
    _emit(args, out, [f"{k}: {out[k]}" for k in sorted(out)])
    return EXIT_OK


def cmd_export_lp(args) -> int:
    net = _load(args.network)
    build = {"min-mbar": build_min_mbar, "max-d": build_max_d, "min-weighted": build_min_weighted}[args.model]
    text = export_lp(build(net))
    if args.out:
        FsPath(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_experiment(args) -> int:
    net = _load(args.network) if args.network else None
    scenario = None
    if net is None:
        scenario = Scenario(
            n_demand=args.n_demand, supply_count=args.supplies, assign=args.assign, k=args.k,
            k_range=tuple(args.k_range), p_rule="uniform" if args.p_range else "constant", p=args.p,
            p_range=tuple(args.p_range) if args.p_range else (0.005, 0.015), seed=args.seed,
            two_connected=args.two_connected,
        )
    spec = ExperimentSpec(
        routes=tuple(args.routes.split(",")), evaluators=tuple(args.evaluators.split(",")),
        epsilon=args.epsilon, delta=args.delta, naive_trials=args.naive_trials, seed=args.seed,
        trials=args.trials, oracle_cap=args.cap, timings=args.timings, scenario=scenario,
    )
    report = run_experiment(net, spec)
    if args.csv:
        FsPath(args.csv).write_text(report.csv())
    payload = report.to_dict(args.timings)
    if args.out:
        FsPath(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    _emit(args, payload, [report.table()])
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="interdep-route", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, network=True):
        if network:
            p.add_argument("network", help="network JSON file")
        p.add_argument("--json", action="store_true", help="machine-readable output")

    def sampling_opts(p):
        p.add_argument("--method", choices=["sampling", "naive", "oracle"], default="sampling")
        p.add_argument("--epsilon", type=float, default=0.05)
        p.add_argument("--delta", type=float, default=0.05)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--trials", type=int, default=100_000, help="naive Monte-Carlo trials")
        p.add_argument("--cap", type=int, default=oracle.DEFAULT_SUPPLY_CAP)

    def scenario_opts(p):
        p.add_argument("--n-demand", type=int, default=20)
        p.add_argument("--supplies", type=int, default=36)
        p.add_argument("--assign", choices=["nearest", "uniform", "range"], default="nearest")
        p.add_argument("--k", type=int, default=2)
        p.add_argument("--k-range", type=int, nargs=2, default=[1, 3])
        p.add_argument("--p", type=float, default=0.01)
        p.add_argument("--p-range", type=float, nargs=2, default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--two-connected", action="store_true", help="add links until no cut vertex remains")

    p = sub.add_parser("validate", help="check network invariants")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("gen-scenario", help="generate a random supply scenario")
    common(p, network=False)
    scenario_opts(p)
    p.add_argument("--topology", help="network JSON providing demand nodes, edges, coordinates")
    p.add_argument("--degree", type=int, default=2, help="nearest-neighbour links per generated node")
    p.add_argument("--s")
    p.add_argument("--t")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_scenario)

    p = sub.add_parser("eval-path", help="failure probability of one path")
    common(p)
    sampling_opts(p)
    p.add_argument("--path", help="comma-separated node ids (default: approx reliable path)")
    p.set_defaults(func=lambda a: _eval(a, False))

    p = sub.add_parser("eval-pair", help="probability that both paths fail")
    common(p)
    sampling_opts(p)
    p.add_argument("--pair", help="'a,b,c;a,d,c' (default: heuristic pair)")
    p.set_defaults(func=lambda a: _eval(a, True))

    p = sub.add_parser("indicators", help="reliability indicators of a path or pair")
    common(p)
    p.add_argument("--path")
    p.add_argument("--pair")
    p.add_argument("--p", type=float, help="uniform supply failure probability for the interval")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.set_defaults(func=cmd_indicators)

    p = sub.add_parser("bounds", help="lower/upper bounds on path failure probability")
    common(p)
    p.add_argument("--path")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("best-path", help="find a reliable s-t path")
    common(p)
    p.add_argument("--method", choices=["approx", "maxcap", "ilp"], default="approx")
    p.add_argument("--budget", type=int, default=10_000_000)
    p.set_defaults(func=cmd_best_path)

    p = sub.add_parser("best-pair", help="find a reliable pair of disjoint s-t paths")
    common(p)
    p.add_argument("--method", choices=["heuristic", "ilp"], default="heuristic")
    p.add_argument("--objective", choices=["max-d", "min-weighted"], default="min-weighted")
    p.add_argument("--budget", type=int, default=10_000_000)
    p.set_defaults(func=cmd_best_pair)

    p = sub.add_parser("oracle", help="exact values by exhaustive enumeration")
    common(p)
    p.add_argument("--path")
    p.add_argument("--pair")
    p.add_argument("--best", choices=["path", "pair"])
    p.add_argument("--allow-shared", action="store_true", help="best pair need not be node-disjoint")
    p.add_argument("--cap", type=int, default=oracle.DEFAULT_SUPPLY_CAP)
    p.add_argument("--budget", type=int, default=oracle.DEFAULT_PATH_BUDGET)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("export-lp", help="write an integer program in LP format")
    common(p)
    p.add_argument("--model", choices=["min-mbar", "max-d", "min-weighted"], required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_lp)

    p = sub.add_parser("experiment", help="run route methods and evaluators over trials")
    p.add_argument("network", nargs="?", help="network JSON (omit to generate scenarios)")
    p.add_argument("--json", action="store_true")
    scenario_opts(p)
    p.add_argument("--routes", default="path-approx,pair-heuristic", help=",".join(ROUTE_METHODS))
    p.add_argument("--evaluators", default="sampling,bounds", help=",".join(EVALUATORS))
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--naive-trials", type=int, default=100_000)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--cap", type=int, default=oracle.DEFAULT_SUPPLY_CAP)
    p.add_argument("--timings", action="store_true", help="include wall-clock runtimes in the report")
    p.add_argument("--out", help="write JSON report here")
    p.add_argument("--csv", help="write per-record CSV here")
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage error or --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except DisconnectedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (oracle.OracleLimitError, BudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (UsageError, UnknownNodeError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
