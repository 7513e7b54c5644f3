"""Command-line interface.

Subcommands: simulate, design-gains, settling-bound, analyze,
verify lemmas, reproduce, sweep, graph gen.  Exit status is 0 exactly
when every bound the invocation declared was satisfied.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .analysis import (
    detect_settling,
    lyapunov_trace_A,
    lyapunov_trace_B,
)
from .config import ConfigError, SimConfig
from .gains import (
    GainRule,
    design_fixed_time_switched_A,
    design_static_A,
    design_switched_B,
)
from .graphs import (
    WeightedGraph,
    calibrate_connectivity,
    complete_graph,
    cycle_graph,
    path_graph,
    random_connected_graph,
    star_graph,
)
from .runner import REPLAY_CASES, reproduce, run_experiment, run_lemma_suite, sweep
from .settling import DualPowerParams, scalar_settling_oracle, settling_bound
from .simulation import read_trace_csv


def _emit(payload: dict, path: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    print(text)


def _cmd_simulate(args: argparse.Namespace) -> int:
    try:
        cfg = SimConfig.from_json(args.config)
    except ConfigError as err:
        print(err, file=sys.stderr)
        return 2
    result = run_experiment(
        cfg,
        trace_path=args.trace,
        report_path=args.report,
        include_controls=not args.no_controls,
    )
    payload = result.report_dict()
    payload["seed"] = cfg.seed
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0 if result.ok else 1


def _cmd_design_gains(args: argparse.Namespace) -> int:
    rule = GainRule.parse(args.theorem)
    with open(args.config) as fh:
        data = json.load(fh)
    graphs = [WeightedGraph.from_dict(gd) for gd in data["graphs"]]
    rho = DualPowerParams.from_dict(data["rho"])
    L = float(data.get("L", 0.0))
    T_c = data.get("T_c")
    margin = float(args.margin if args.margin is not None else data.get("margin", 1.0))
    if rule is GainRule.PREDEFINED_TIME_STATIC_A:
        if len(graphs) != 1:
            print("the static rule takes exactly one topology", file=sys.stderr)
            return 2
        if T_c is None:
            print("the static rule needs T_c", file=sys.stderr)
            return 2
        cert = design_static_A(graphs[0], rho, float(T_c), L, margin)
    elif rule is GainRule.FIXED_TIME_SWITCHED_A:
        cert = design_fixed_time_switched_A(
            graphs, rho, L,
            T_c_hint=float(T_c) if T_c is not None else 1.0,
            margin=margin,
        )
    else:
        if T_c is None:
            print("the switched edge-error rule needs T_c", file=sys.stderr)
            return 2
        cert = design_switched_B(graphs, rho, float(T_c), L, margin)
    _emit(cert.to_dict(), args.out)
    return 0


def _cmd_settling_bound(args: argparse.Namespace) -> int:
    rho = DualPowerParams(
        alpha=args.alpha, beta=args.beta, p=args.p, q=args.q, k=args.k
    )
    payload: dict = {"rho": rho.to_dict(), "settling_bound": settling_bound(rho)}
    if args.oracle:
        payload["oracle"] = {
            "x0": args.x0,
            "h": args.h,
            "time": scalar_settling_oracle(rho, args.x0, h=args.h),
        }
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def _cmd_analyze(args: argparse.Namespace) -> int:
    trace = read_trace_csv(args.trace)
    report = detect_settling(trace, tol_abs=args.tol, T_c=args.tc)
    payload: dict = {"settling": report.to_dict(), "records": len(trace.times)}
    values = None
    if args.lyapunov == "a":
        if not args.graph:
            print("--lyapunov a needs --graph", file=sys.stderr)
            return 2
        with open(args.graph) as fh:
            graph = WeightedGraph.from_dict(json.load(fh))
        values = lyapunov_trace_A(trace, graph)
    elif args.lyapunov == "b":
        if args.lambda2_star is None or args.m_edges is None:
            print("--lyapunov b needs --lambda2-star and --m-edges", file=sys.stderr)
            return 2
        values = lyapunov_trace_B(trace, args.lambda2_star, args.m_edges)
    if values is not None:
        payload["lyapunov"] = {
            "initial": float(values[0]),
            "final": float(values[-1]),
            "max": float(np.max(values)),
        }
        if args.lyapunov_csv:
            with open(args.lyapunov_csv, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["t", "V"])
                for t, v in zip(trace.times, values):
                    writer.writerow([repr(float(t)), repr(float(v))])
    _emit(payload, args.report)
    if args.tc is not None:
        return 0 if report.bound_satisfied else 1
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    report = run_lemma_suite(cases=args.cases, seed=args.seed)
    for name, entry in report.items():
        if isinstance(entry, dict):
            state = "PASS" if entry["ok"] else "FAIL"
            print(f"{name}: {state} (worst margin {entry['worst_margin']:.3e})")
    return 0 if report["ok"] else 1


def _cmd_reproduce(args: argparse.Namespace) -> int:
    report = reproduce(args.case, seed=args.seed, h=args.h, t_end=args.t_end)
    _emit(report, args.report)
    return 0 if report.get("ok") else 1


def _cmd_sweep(args: argparse.Namespace) -> int:
    try:
        cfg = SimConfig.from_json(args.config)
    except ConfigError as err:
        print(err, file=sys.stderr)
        return 2
    grid: dict[str, list[float]] = {}
    for spec_item in args.vary:
        key, _, values = spec_item.partition("=")
        if not values:
            print(f"bad --vary {spec_item!r}; use key=v1,v2,...", file=sys.stderr)
            return 2
        grid[key.strip()] = [float(v) for v in values.split(",")]
    rows = sweep(cfg, grid)
    _emit({"rows": rows}, args.report)
    ran = [r for r in rows if not r.get("skipped")]
    return 0 if ran and all(r["ok"] for r in ran) else 1


def _cmd_graph(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(args.seed)
    if args.kind == "path":
        g = path_graph(args.n, args.weight)
    elif args.kind == "cycle":
        g = cycle_graph(args.n, args.weight)
    elif args.kind == "star":
        g = star_graph(args.n, args.weight)
    elif args.kind == "complete":
        g = complete_graph(args.n, args.weight)
    else:
        g = random_connected_graph(args.n, extra_edges=args.extra_edges, rng=rng)
    if args.calibrate_lambda2 is not None:
        g = calibrate_connectivity(g, args.calibrate_lambda2)
    _emit(g.to_dict(), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="consensus-lab",
        description=(
            "Design, simulate, and audit consensus protocols whose "
            "convergence deadline is a user-set parameter."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one experiment from a JSON config")
    p.add_argument("config")
    p.add_argument("--trace", help="write the trajectory CSV here")
    p.add_argument("--report", help="write the JSON report here")
    p.add_argument("--no-controls", action="store_true", help="omit u columns from the CSV")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("design-gains", help="derive certified gains for a topology set")
    p.add_argument(
        "--theorem",
        required=True,
        help=(
            "design rule: fixed-switched-a, predefined-static-a, or "
            "predefined-switched-b (aliases t3, t4, t5)"
        ),
    )
    p.add_argument("--config", required=True, help="JSON with graphs, rho, T_c, L")
    p.add_argument("--margin", type=float, help="override the config margin")
    p.add_argument("--out", help="write the certificate JSON here")
    p.set_defaults(func=_cmd_design_gains)

    p = sub.add_parser("settling-bound", help="closed-form scalar convergence bound")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--oracle", action="store_true", help="also integrate the scalar system")
    p.add_argument("--x0", type=float, default=1e6)
    p.add_argument("--h", type=float, default=1e-6)
    p.set_defaults(func=_cmd_settling_bound)

    p = sub.add_parser("analyze", help="settling and Lyapunov audit of a trace CSV")
    p.add_argument("trace")
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--tc", type=float, help="declared deadline to check against")
    p.add_argument("--lyapunov", choices=["a", "b"])
    p.add_argument("--graph", help="graph JSON (needed for --lyapunov a)")
    p.add_argument("--lambda2-star", type=float, help="for --lyapunov b")
    p.add_argument("--m-edges", type=int, help="for --lyapunov b")
    p.add_argument("--lyapunov-csv", help="write t,V series here")
    p.add_argument("--report", help="write the JSON report here")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("verify", help="randomized audits of the inequality toolkit")
    p.add_argument("what", choices=["lemmas"])
    p.add_argument("--cases", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("reproduce", help="replay a published benchmark setting")
    p.add_argument("case", help=f"one of {', '.join(REPLAY_CASES)}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--h", type=float, default=None, help="step size (default per case)")
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--report", help="write the JSON report here")
    p.set_defaults(func=_cmd_reproduce)

    p = sub.add_parser("sweep", help="grid runs over shaping parameters")
    p.add_argument("config")
    p.add_argument(
        "--vary",
        action="append",
        required=True,
        metavar="key=v1,v2,...",
        help="grid values for alpha, beta, p, q, or k (repeatable)",
    )
    p.add_argument("--report", help="write the JSON rows here")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("graph", help="topology utilities")
    p.add_argument("action", choices=["gen"])
    p.add_argument("--kind", choices=["path", "cycle", "star", "complete", "random"], default="random")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--weight", type=float, default=1.0)
    p.add_argument("--extra-edges", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--calibrate-lambda2", type=float)
    p.add_argument("--out", help="write the graph JSON here")
    p.set_defaults(func=_cmd_graph)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
