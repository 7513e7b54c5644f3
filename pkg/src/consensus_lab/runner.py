"""Experiment orchestration: end-to-end runs, benchmark replays, sweeps.

The benchmark replay cases rerun published initial conditions and gain
settings from the study this package reimplements.  That study printed
its topologies only as figures, so replays generate random connected
topologies rescaled to the published algebraic connectivities; its
reported settling times are therefore echoed as reference values only,
flagged not directly comparable, and the assertions are confined to the
deadline bounds that hold for any admissible topology.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product

import numpy as np

from .analysis import (
    AverageConsensusReport,
    SettlingReport,
    average_consensus_check,
    detect_settling,
    lyapunov_trace_B,
)
from .config import SimConfig
from .gains import (
    CertificateReport,
    GainCertificate,
    design_fixed_time_switched_A,
    design_switched_B,
    static_gain,
    verify_certificate,
)
from .graphs import (
    WeightedGraph,
    algebraic_connectivity,
    calibrate_connectivity,
    random_connected_graph,
)
from .inequalities import PolyFunc, jensen_poly_check, norm_ordering_check
from .protocols import ProtocolParams
from .settling import DualPowerParams, lyapunov_rate_check, settling_bound
from .simulation import (
    DisturbanceModel,
    SimTrace,
    SwitchedNetwork,
    make_dwell_schedule,
    simulate,
    static_network,
)

__all__ = [
    "ExperimentResult",
    "run_experiment",
    "reproduce",
    "REPLAY_CASES",
    "sweep",
    "run_lemma_suite",
    "max_workers",
]

THREADS_ENV = "CONSENSUS_LAB_THREADS"


def max_workers() -> int:
    """Parallelism cap: the CONSENSUS_LAB_THREADS variable, else CPU count."""
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


# Published benchmark data replayed by `reproduce`.  Topologies for these
# runs were published only as figures; the connectivities and gains below
# are the printed values.
BENCH_RHO = DualPowerParams(alpha=1.0, beta=2.0, p=1.5, q=3.0, k=0.5)
BENCH_X0_STATIC = (
    134.51, 40.72, 214.15, 40.04, -241.50,
    -189.57, 181.35, -7.8517, 172.42, -145.29,
)
BENCH_X0_SWITCHED_A = (
    -210.02, 117.66, 161.32, -78.30, -181.93,
    82.97, 165.22, 86.81, -180.27, -60.58,
)
BENCH_X0_SWITCHED_B = (
    72.31, 167.49, -226.30, 45.68, 246.20,
    -121.78, -196.90, -128.59, -88.57, 29.05,
)
BENCH_LAMBDA2_STATIC = 0.27935
BENCH_LAMBDA2_SWITCHED = (0.16548, 0.73648, 0.15776, 0.57104)
BENCH_KAPPA_SWITCHED_A = (301.9585, 67.8472, 316.7348, 87.5037)
BENCH_ZETA_SWITCHED_A = 0.0466
BENCH_KAPPA_SWITCHED_B = (241.5668, 54.2777, 253.3879, 70.0029)
BENCH_ZETA_SWITCHED_B = 0.3693
BENCH_REFERENCE_SETTLING = {"static-a": 0.095, "switched-b": 0.187}
PARAM_STUDY_ROWS = (
    {"p": 0.1, "q": 0.9, "k": 1.0, "reference_s": {"A": 0.138, "B": 0.105}},
    {"p": 0.1, "q": 1.9, "k": 0.75, "reference_s": {"A": 0.185, "B": 0.127}},
    {"p": 1.5, "q": 12.0, "k": 0.1, "reference_s": {"A": 0.258, "B": 0.212}},
)
_NOT_COMPARABLE = "reference only: measured on an unpublished topology, not directly comparable"

REPLAY_CASES = ("static-a", "switched-a", "switched-b", "param-study")
_CASE_ALIASES = {
    "example1": "static-a",
    "example2": "switched-a",
    "example3": "switched-b",
    "table3": "param-study",
}


@dataclass(frozen=True)
class ExperimentResult:
    """Everything one experiment produced."""

    trace: SimTrace
    settling: SettlingReport
    certificate: GainCertificate | None
    certificate_report: CertificateReport | None
    average: AverageConsensusReport | None
    ok: bool

    def report_dict(self) -> dict:
        out = {
            "ok": self.ok,
            "settling": self.settling.to_dict(),
            "blew_up": self.trace.blew_up,
            "blowup_time": self.trace.blowup_time,
        }
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_dict()
        if self.certificate_report is not None:
            out["certificate_report"] = self.certificate_report.to_dict()
        if self.average is not None:
            out["average_consensus"] = self.average.to_dict()
        return out


def run_experiment(
    cfg: SimConfig,
    trace_path=None,
    report_path=None,
    include_controls: bool = True,
) -> ExperimentResult:
    """Design or validate gains, simulate, analyze, optionally write files.

    The result's ``ok`` flag is true when the run stayed finite and every
    declared deadline was met; it backs the process exit status.
    """
    params, cert = cfg.resolve_gains()
    cert_report = None
    kappa_per_topology = cfg.kappa_per_topology
    if cert is not None:
        cert_report = verify_certificate(cert, list(cfg.network.graphs))
        if kappa_per_topology is None and cert.kappa_per_topology is not None:
            kappa_per_topology = cert.kappa_per_topology
    trace = simulate(
        cfg.network,
        np.array(cfg.x0),
        params,
        dist=cfg.disturbance,
        h=cfg.h,
        t_end=cfg.t_end,
        record_every=cfg.record_every,
        kappa_per_topology=kappa_per_topology,
    )
    declared_tc = cfg.design.T_c if cfg.design is not None else None
    settling = detect_settling(trace, tol_abs=cfg.settle_tol, T_c=declared_tc)
    average = average_consensus_check(trace) if cfg.variant == "B" else None
    ok = not trace.blew_up
    if declared_tc is not None:
        ok = ok and bool(settling.bound_satisfied)
    if cert_report is not None:
        ok = ok and cert_report.ok
    result = ExperimentResult(
        trace=trace,
        settling=settling,
        certificate=cert,
        certificate_report=cert_report,
        average=average,
        ok=ok,
    )
    if trace_path is not None:
        trace.to_csv(trace_path, include_controls=include_controls)
    if report_path is not None:
        payload = result.report_dict()
        payload["config"] = cfg.to_dict()
        with open(report_path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return result


def _calibrated_graphs(
    targets, seed: int, extra_edges: int = 3
) -> list[WeightedGraph]:
    # One generator stream drives all topologies so a single seed fixes
    # the whole replay.
    rng = np.random.default_rng(seed)
    out = []
    for target in np.atleast_1d(targets):
        g = random_connected_graph(10, extra_edges=extra_edges, rng=rng)
        out.append(calibrate_connectivity(g, float(target)))
    return out


def _sinusoid() -> DisturbanceModel:
    return DisturbanceModel(kind="sinusoid", amplitude=1.0, frequency=40.0, phase_step=0.1)


def _replay_static_a(seed: int, h: float, t_end: float) -> dict:
    graph = _calibrated_graphs([BENCH_LAMBDA2_STATIC], seed)[0]
    lam2 = algebraic_connectivity(graph)
    dist = _sinusoid()
    L = dist.norm_bound(10)
    T_c = 1.0
    kappa = static_gain(10, lam2, BENCH_RHO, T_c)
    zeta = L / kappa
    params = ProtocolParams(rho=BENCH_RHO, zeta=zeta, kappa=(kappa,) * 10, variant="A")
    trace = simulate(
        static_network(graph), np.array(BENCH_X0_STATIC), params,
        dist=dist, h=h, t_end=t_end,
    )
    settling = detect_settling(trace, T_c=T_c)
    return {
        "case": "static-a",
        "lambda2": lam2,
        "lambda2_target": BENCH_LAMBDA2_STATIC,
        "kappa": kappa,
        "zeta": zeta,
        "published_kappa": 178.88,
        "published_zeta": 0.0177,
        "T_c": T_c,
        "settling": settling.to_dict(),
        "reference_settling_s": BENCH_REFERENCE_SETTLING["static-a"],
        "reference_note": _NOT_COMPARABLE,
        "ok": bool(settling.bound_satisfied),
    }


def _replay_switched_a(seed: int, h: float, t_end: float) -> dict:
    graphs = _calibrated_graphs(BENCH_LAMBDA2_SWITCHED, seed)
    dist = _sinusoid()
    L = dist.norm_bound(10)
    cert = design_fixed_time_switched_A(graphs, BENCH_RHO, L, T_c_hint=1.0)
    net = SwitchedNetwork(
        graphs=tuple(graphs),
        schedule=make_dwell_schedule(t_end, 0.1, len(graphs)),
        dwell_min=0.1,
    )
    trace = simulate(
        net, np.array(BENCH_X0_SWITCHED_A), cert.params,
        dist=dist, h=h, t_end=t_end,
        kappa_per_topology=cert.kappa_per_topology,
    )
    settling = detect_settling(trace)
    per_topo = [row[0] for row in cert.kappa_per_topology]
    return {
        "case": "switched-a",
        "lambda2": list(cert.details["lambda2_list"]),
        "lambda2_target": list(BENCH_LAMBDA2_SWITCHED),
        "kappa_per_topology": per_topo,
        "published_kappa_per_topology": list(BENCH_KAPPA_SWITCHED_A),
        "zeta": cert.params.zeta,
        "published_zeta": BENCH_ZETA_SWITCHED_A,
        "T_c": None,
        "deadline_note": (
            "no deadline certified for the node-error variant under "
            "switching; convergence is finite-time with a uniform bound"
        ),
        "settling": settling.to_dict(),
        "ok": bool(settling.settled),
    }


def _replay_switched_b(seed: int, h: float, t_end: float) -> dict:
    graphs = _calibrated_graphs(BENCH_LAMBDA2_SWITCHED, seed)
    dist = _sinusoid()
    L = dist.norm_bound(10)
    T_c = 1.0
    cert = design_switched_B(graphs, BENCH_RHO, T_c, L)
    net = SwitchedNetwork(
        graphs=tuple(graphs),
        schedule=make_dwell_schedule(t_end, 0.1, len(graphs)),
        dwell_min=0.1,
    )
    trace = simulate(
        net, np.array(BENCH_X0_SWITCHED_B), cert.params,
        dist=dist, h=h, t_end=t_end,
    )
    settling = detect_settling(trace, T_c=T_c)
    rate_ok, rate_worst = lyapunov_rate_check(
        trace.times,
        lyapunov_trace_B(trace, cert.details["lambda2_star"], cert.details["M"]),
        BENCH_RHO,
        T_c,
    )
    # Undisturbed equal-gain rerun demonstrates agreement at the average.
    quiet = simulate(
        net, np.array(BENCH_X0_SWITCHED_B),
        ProtocolParams(
            rho=BENCH_RHO, zeta=0.0, kappa=cert.params.kappa, variant="B"
        ),
        h=h, t_end=t_end,
    )
    avg = average_consensus_check(quiet)
    return {
        "case": "switched-b",
        "lambda2": list(cert.details["lambda2_list"]),
        "lambda2_target": list(BENCH_LAMBDA2_SWITCHED),
        "M": cert.details["M"],
        "kappa": cert.params.kappa_min,
        "zeta": cert.params.zeta,
        "published_kappa_per_topology": list(BENCH_KAPPA_SWITCHED_B),
        "published_zeta": BENCH_ZETA_SWITCHED_B,
        "published_zeta_note": (
            "published offset not reproducible from the stated design rule; "
            "the rule value is used"
        ),
        "T_c": T_c,
        "settling": settling.to_dict(),
        "rate_check": {"ok": rate_ok, "worst_violation": rate_worst},
        "average_consensus": avg.to_dict(),
        "reference_settling_s": BENCH_REFERENCE_SETTLING["switched-b"],
        "reference_note": _NOT_COMPARABLE,
        "ok": bool(settling.bound_satisfied) and avg.applicable
        and avg.final_gap is not None and avg.final_gap <= 1e-6,
    }


def _replay_param_study(seed: int, h: float, t_end: float) -> dict:
    graphs = _calibrated_graphs(BENCH_LAMBDA2_SWITCHED, seed)
    net = SwitchedNetwork(
        graphs=tuple(graphs),
        schedule=make_dwell_schedule(t_end, 0.1, len(graphs)),
        dwell_min=0.1,
    )
    dist = _sinusoid()
    T_c = 1.0
    rows = []
    for row in PARAM_STUDY_ROWS:
        rho = DualPowerParams(
            alpha=1.0, beta=2.0, p=row["p"], q=row["q"], k=row["k"]
        )
        try:
            rho.require_fixed_time()
            regime = "deadline"
        except ValueError as err:
            # Row outside the deadline regime still defines a valid
            # control law; it is simulated without a bound claim.
            regime = f"outside deadline regime ({err})"
        entry: dict = {
            "rho": rho.to_dict(),
            "regime": regime,
            "T_c": T_c,
            "reference_note": _NOT_COMPARABLE,
        }
        for variant, kappa_topo, zeta, x0 in (
            ("A", BENCH_KAPPA_SWITCHED_A, BENCH_ZETA_SWITCHED_A, BENCH_X0_SWITCHED_A),
            ("B", BENCH_KAPPA_SWITCHED_B, BENCH_ZETA_SWITCHED_B, BENCH_X0_SWITCHED_B),
        ):
            params = ProtocolParams(
                rho=rho, zeta=zeta, kappa=(min(kappa_topo),) * 10,
                variant=variant, strict=False,
            )
            trace = simulate(
                net, np.array(x0), params, dist=dist, h=h, t_end=t_end,
                kappa_per_topology=np.asarray(kappa_topo),
            )
            rep = detect_settling(trace, T_c=T_c)
            entry[f"settling_{variant}"] = rep.to_dict()
            entry[f"slack_{variant}"] = (
                None if rep.t_settle is None else T_c - rep.t_settle
            )
            entry[f"reference_{variant}_s"] = row["reference_s"][variant]
        rows.append(entry)
    ok = all(
        rows_entry[f"settling_{v}"]["settled"]
        and rows_entry[f"settling_{v}"]["t_settle"] <= T_c
        for rows_entry in rows
        for v in ("A", "B")
    )
    def row_slack(i: int) -> float:
        slacks = [rows[i]["slack_A"], rows[i]["slack_B"]]
        # An unsettled run carries no slack; rank it last.
        return min(-math.inf if s is None else s for s in slacks)

    slack_order = sorted(range(len(rows)), key=row_slack, reverse=True)
    return {
        "case": "param-study",
        "rows": rows,
        "slack_ranking_most_to_least": slack_order,
        "gain_note": (
            "per-topology gains fixed to the published switched-run values "
            "while the exponents vary"
        ),
        "ok": ok,
    }


def reproduce(
    case: str, seed: int = 0, h: float | None = None, t_end: float = 1.0
) -> dict:
    """Rerun a published benchmark setting on generated topologies.

    Cases: ``static-a``, ``switched-a``, ``switched-b``, ``param-study``.
    Topologies are random connected 10-node graphs rescaled to the
    published connectivities; the report carries the published timings
    as reference values with a not-comparable flag, plus the seed for
    replay.  ``h`` defaults per case: 1e-5, except 1e-6 for the
    parameter study whose near-sign exponent rows chatter at the
    step-size scale and need the finer grid to close into the
    settling band.
    """
    key = _CASE_ALIASES.get(case.strip().lower(), case.strip().lower())
    runners = {
        "static-a": _replay_static_a,
        "switched-a": _replay_switched_a,
        "switched-b": _replay_switched_b,
        "param-study": _replay_param_study,
    }
    if key not in runners:
        raise ValueError(f"unknown case {case!r}; expected one of {REPLAY_CASES}")
    if h is None:
        h = 1e-6 if key == "param-study" else 1e-5
    report = runners[key](seed, h, t_end)
    report["seed"] = seed
    report["h"] = h
    report["t_end"] = t_end
    return report


def sweep(cfg: SimConfig, grid: dict[str, list[float]]) -> list[dict]:
    """Run the config across a parameter grid, in parallel, sorted by slack.

    Grid keys name shaping parameters (``alpha``, ``beta``, ``p``, ``q``,
    ``k``).  Points violating the deadline-regime constraints are
    reported as skipped instead of run.  Each surviving point reruns the
    experiment with the substituted exponents; rows arrive sorted by
    decreasing slack ``T_c - t_settle``.
    """
    if not grid:
        raise ValueError("grid must not be empty")
    valid_keys = {"alpha", "beta", "p", "q", "k"}
    if bad := set(grid) - valid_keys:
        raise ValueError(f"unknown grid keys {sorted(bad)}; expected {sorted(valid_keys)}")
    keys = sorted(grid)
    points = [dict(zip(keys, combo)) for combo in product(*(grid[key] for key in keys))]

    def run_point(point: dict) -> dict:
        base = cfg.rho.to_dict()
        base.update(point)
        row: dict = {"point": dict(point)}
        try:
            rho = DualPowerParams.from_dict(base)
            rho.require_fixed_time()
        except ValueError as err:
            row.update({"skipped": True, "reason": str(err)})
            return row
        data = cfg.to_dict()
        data["protocol"]["rho"] = rho.to_dict()
        sub = SimConfig.from_dict(data)
        result = run_experiment(sub)
        t_settle = result.settling.t_settle
        declared_tc = sub.design.T_c if sub.design is not None else None
        row.update(
            {
                "skipped": False,
                "settled": result.settling.settled,
                "t_settle": t_settle,
                "T_c": declared_tc,
                "slack": None
                if (t_settle is None or declared_tc is None)
                else declared_tc - t_settle,
                "ok": result.ok,
            }
        )
        return row

    with ThreadPoolExecutor(max_workers=max_workers()) as pool:
        rows = list(pool.map(run_point, points))
    rows.sort(
        key=lambda r: (r.get("slack") is None, -(r.get("slack") or 0.0))
    )
    return rows


def _sample_rho(rng: np.random.Generator) -> DualPowerParams:
    # Log-uniform coefficients; exponents drawn through the products
    # k*p and k*q so every draw lands in the deadline regime.
    alpha = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0))))
    beta = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0))))
    k = float(rng.uniform(0.1, 3.0))
    kp = float(rng.uniform(0.02, 0.95))
    kq = float(rng.uniform(1.05, 9.5))
    return DualPowerParams(alpha=alpha, beta=beta, p=kp / k, q=kq / k, k=k)


def run_lemma_suite(cases: int = 10_000, seed: int = 0) -> dict:
    """Randomized audit of the four inequality lemmas.

    Runs ``cases`` independent draws per lemma and reports the worst
    margin seen; a lemma passes when no margin drops below -1e-12.
    """
    rng = np.random.default_rng(seed)
    worst = {
        "monotonicity": np.inf,
        "convexity_chord": np.inf,
        "second_derivative_fd": np.inf,
        "jensen_mean": np.inf,
        "norm_ordering": np.inf,
    }
    for _ in range(cases):
        rho = _sample_rho(rng)
        f = PolyFunc(rho)

        x1 = float(np.exp(rng.uniform(np.log(1e-2), np.log(1e2))))
        x2 = x1 * float(np.exp(rng.uniform(0.01, 5.0)))
        worst["monotonicity"] = min(worst["monotonicity"], f.eval(x2) - f.eval(x1))

        a_chord = float(np.exp(rng.uniform(np.log(1e-2), np.log(1e2))))
        b_chord = a_chord * float(np.exp(rng.uniform(0.01, 3.0)))
        chord = 0.5 * (f.eval(a_chord) + f.eval(b_chord))
        mid = f.eval(0.5 * (a_chord + b_chord))
        # Relative margin keeps huge function values comparable.
        worst["convexity_chord"] = min(
            worst["convexity_chord"], (chord - mid) / max(abs(chord), 1.0)
        )

        x = float(np.exp(rng.uniform(np.log(0.01), np.log(100.0))))
        closed = f.second_derivative(x)
        step = 1e-3 * x
        fd = (
            -f.eval(x + 2 * step)
            + 16.0 * f.eval(x + step)
            - 30.0 * f.eval(x)
            + 16.0 * f.eval(x - step)
            - f.eval(x - 2 * step)
        ) / (12.0 * step * step)
        rel_err = abs(fd - closed) / abs(closed)
        worst["second_derivative_fd"] = min(
            worst["second_derivative_fd"], 1e-6 - rel_err
        )

        size = int(rng.integers(2, 9))
        a = np.exp(rng.uniform(np.log(1e-2), np.log(1e2), size=size))
        _, margin = jensen_poly_check(rho, a)
        worst["jensen_mean"] = min(worst["jensen_mean"], margin)

        z = rng.normal(size=int(rng.integers(1, 11)))
        r = float(rng.uniform(1.0, 5.0))
        l = r + float(rng.uniform(0.0, 5.0))
        _, nmargin = norm_ordering_check(z, l, r)
        worst["norm_ordering"] = min(worst["norm_ordering"], nmargin)

    report = {
        name: {"worst_margin": float(value), "ok": bool(value >= -1e-12)}
        for name, value in worst.items()
    }
    report["cases"] = cases
    report["seed"] = seed
    report["ok"] = all(
        entry["ok"] for name, entry in report.items() if isinstance(entry, dict)
    )
    return report
