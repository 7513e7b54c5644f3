"""Fixed-step integration of the switched, disturbed consensus loop.

The right-hand side contains sign terms, so classical high-order
integrators forfeit their order; a small fixed-step explicit Euler
scheme with tolerance-band settling detection downstream is the robust
choice here.  Topology switches are snapped to the step grid and applied
right-continuously.  The inner loop is compiled with numba; a pure
NumPy evaluation of the same field lives in :mod:`consensus_lab.protocols`
and the two are cross-checked in the test suite.
"""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from numpy.typing import NDArray

from .graphs import WeightedGraph
from .protocols import ProtocolParams

__all__ = [
    "SwitchedNetwork",
    "DisturbanceModel",
    "SimTrace",
    "simulate",
    "sigma_at",
    "disturbance_at",
    "static_network",
    "make_dwell_schedule",
    "read_trace_csv",
]

# State magnitudes beyond this are treated as integrator blow-up.
_BLOWUP_LIMIT = 1e14


@dataclass(frozen=True)
class SwitchedNetwork:
    """A topology collection plus the piecewise-constant activation schedule.

    ``schedule`` lists ``(t_start, graph_index)`` pairs, strictly
    increasing in time, starting at ``t = 0``; consecutive switches must
    be at least ``dwell_min`` apart so only finitely many switches occur
    in any finite window.
    """

    graphs: tuple[WeightedGraph, ...]
    schedule: tuple[tuple[float, int], ...]
    dwell_min: float = 0.05

    def __post_init__(self) -> None:
        graphs = tuple(self.graphs)
        if not graphs:
            raise ValueError("need at least one topology")
        n = graphs[0].n
        for idx, g in enumerate(graphs):
            if g.n != n:
                raise ValueError(f"topology {idx} has {g.n} nodes, expected {n}")
        schedule = tuple((float(t), int(i)) for t, i in self.schedule)
        if not schedule:
            raise ValueError("schedule must have at least one entry")
        if schedule[0][0] != 0.0:
            raise ValueError("schedule must start at t = 0")
        if not self.dwell_min > 0.0:
            raise ValueError("dwell_min must be positive")
        for (t0, _), (t1, _) in zip(schedule, schedule[1:]):
            if t1 <= t0:
                raise ValueError("schedule times must be strictly increasing")
            if t1 - t0 < self.dwell_min - 1e-12:
                raise ValueError(
                    f"switch gap {t1 - t0} below minimum dwell {self.dwell_min}"
                )
        for t, i in schedule:
            if not 0 <= i < len(graphs):
                raise ValueError(f"schedule references missing topology {i}")
        object.__setattr__(self, "graphs", graphs)
        object.__setattr__(self, "schedule", schedule)

    @property
    def n(self) -> int:
        return self.graphs[0].n

    def sigma_at(self, t: float) -> int:
        """Active topology index at time ``t`` (right-continuous lookup)."""
        if t < 0.0:
            raise ValueError("time must be non-negative")
        times = [entry[0] for entry in self.schedule]
        pos = bisect.bisect_right(times, t) - 1
        return self.schedule[pos][1]

    def to_dict(self) -> dict:
        return {
            "graphs": [g.to_dict() for g in self.graphs],
            "schedule": [[t, i] for t, i in self.schedule],
            "dwell_min": self.dwell_min,
        }


def static_network(graph: WeightedGraph) -> SwitchedNetwork:
    """Single-topology network active from ``t = 0`` onward."""
    return SwitchedNetwork(graphs=(graph,), schedule=((0.0, 0),))


def make_dwell_schedule(
    t_end: float,
    dwell: float,
    num_graphs: int,
    rng: np.random.Generator | None = None,
) -> tuple[tuple[float, int], ...]:
    """Switching schedule with equal gaps of ``dwell`` seconds.

    Cycles through the topology indices when ``rng`` is None; otherwise
    draws each next index uniformly among the others (no self-switch).
    """
    if not (t_end > 0.0 and dwell > 0.0):
        raise ValueError("t_end and dwell must be positive")
    entries = [(0.0, 0)]
    t = dwell
    while t < t_end - 1e-12:
        prev = entries[-1][1]
        if rng is None:
            nxt = (prev + 1) % num_graphs
        else:
            nxt = int(rng.integers(0, num_graphs - 1)) if num_graphs > 1 else 0
            if nxt >= prev and num_graphs > 1:
                nxt += 1
        entries.append((t, nxt))
        t += dwell
    return tuple(entries)


@dataclass(frozen=True)
class DisturbanceModel:
    """Bounded per-agent disturbance.

    Kinds: ``zero``; ``sinusoid`` with
    ``d_i(t) = amplitude_i * sin(frequency * t + i * phase_step)`` using
    1-based agent indices; ``custom-table`` holding the last tabulated
    value (zero-order hold).  ``amplitude`` is simultaneously the
    per-agent bound L_i: the sinusoid satisfies it analytically and the
    table kind derives it from the tabulated values.
    """

    kind: str = "zero"
    amplitude: float | tuple[float, ...] = 1.0
    frequency: float = 40.0
    phase_step: float = 0.1
    table_times: tuple[float, ...] = ()
    table_values: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("zero", "sinusoid", "custom-table"):
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        if not np.isscalar(self.amplitude):
            object.__setattr__(
                self, "amplitude", tuple(float(v) for v in self.amplitude)
            )
        object.__setattr__(
            self, "table_times", tuple(float(t) for t in self.table_times)
        )
        object.__setattr__(
            self,
            "table_values",
            tuple(tuple(float(v) for v in row) for row in self.table_values),
        )
        if self.kind == "custom-table":
            if len(self.table_times) != len(self.table_values) or not self.table_times:
                raise ValueError("table needs matching, nonempty times and values")
            if any(t1 <= t0 for t0, t1 in zip(self.table_times, self.table_times[1:])):
                raise ValueError("table times must be strictly increasing")

    def amplitudes(self, n: int) -> NDArray[np.float64]:
        """Per-agent bound vector L_1..L_n."""
        if self.kind == "zero":
            return np.zeros(n)
        if self.kind == "custom-table":
            values = np.asarray(self.table_values, dtype=float)
            if values.shape[1] != n:
                raise ValueError(f"table rows must have length {n}")
            return np.max(np.abs(values), axis=0)
        if np.isscalar(self.amplitude):
            return np.full(n, float(self.amplitude))
        amp = np.asarray(self.amplitude, dtype=float)
        if amp.shape != (n,):
            raise ValueError(f"amplitude must be scalar or length {n}")
        return amp.copy()

    def norm_bound(self, n: int) -> float:
        """Euclidean bound L on the disturbance vector: sqrt(sum L_i^2)."""
        return float(np.sqrt(np.sum(self.amplitudes(n) ** 2)))

    def at(self, t: float, n: int) -> NDArray[np.float64]:
        """Disturbance vector at time ``t``."""
        if t < 0.0:
            raise ValueError("time must be non-negative")
        if self.kind == "zero":
            return np.zeros(n)
        if self.kind == "sinusoid":
            amp = self.amplitudes(n)
            idx = np.arange(1, n + 1, dtype=float)
            return amp * np.sin(self.frequency * t + idx * self.phase_step)
        values = np.asarray(self.table_values, dtype=float)
        if values.shape[1] != n:
            raise ValueError(f"table rows must have length {n}")
        pos = bisect.bisect_right(self.table_times, t) - 1
        return values[max(pos, 0)].copy()

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "sinusoid":
            amp = self.amplitude
            out["amplitude"] = list(amp) if not np.isscalar(amp) else amp
            out["frequency"] = self.frequency
            out["phase_step"] = self.phase_step
        elif self.kind == "custom-table":
            out["table_times"] = list(self.table_times)
            out["table_values"] = [list(row) for row in self.table_values]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "DisturbanceModel":
        kind = data.get("kind", "zero")
        if kind not in ("zero", "sinusoid", "custom-table"):
            raise ValueError(f"unknown disturbance kind {kind!r}")
        if kind == "sinusoid":
            amp = data.get("amplitude", 1.0)
            return cls(
                kind=kind,
                amplitude=tuple(amp) if isinstance(amp, (list, tuple)) else float(amp),
                frequency=float(data.get("frequency", 40.0)),
                phase_step=float(data.get("phase_step", 0.1)),
            )
        if kind == "custom-table":
            return cls(
                kind=kind,
                table_times=tuple(float(t) for t in data["table_times"]),
                table_values=tuple(
                    tuple(float(v) for v in row) for row in data["table_values"]
                ),
            )
        return cls(kind="zero")


def sigma_at(net: SwitchedNetwork, t: float) -> int:
    return net.sigma_at(t)


def disturbance_at(dist: DisturbanceModel, t: float, n: int) -> NDArray[np.float64]:
    return dist.at(t, n)


@dataclass(frozen=True)
class SimTrace:
    """Recorded trajectory of one simulation run.

    All arrays share the leading record axis.  ``diameter`` is the
    consensus gap ``max(x) - min(x)`` at each record.  When the state
    left the finite range the trace is truncated at the last finite
    record and ``blowup_time`` holds the failure time.
    """

    times: NDArray[np.float64]
    states: NDArray[np.float64]
    sigma: NDArray[np.int64]
    controls: NDArray[np.float64] | None
    diameter: NDArray[np.float64]
    h: float
    record_every: int = 1
    blowup_time: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        r = len(self.times)
        if self.states.shape[0] != r or len(self.sigma) != r or len(self.diameter) != r:
            raise ValueError("trace arrays must share the record axis")
        if self.controls is not None and self.controls.shape != self.states.shape:
            raise ValueError("controls must match states in shape")

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def blew_up(self) -> bool:
        return self.blowup_time is not None

    @property
    def final_state(self) -> NDArray[np.float64]:
        return self.states[-1]

    def to_csv(self, path, include_controls: bool = True) -> None:
        """Write the trace with columns ``t, x_1..x_n, sigma[, u_1..u_n], V_diam``."""
        with_u = include_controls and self.controls is not None
        header = ["t"] + [f"x_{i}" for i in range(1, self.n + 1)] + ["sigma"]
        if with_u:
            header += [f"u_{i}" for i in range(1, self.n + 1)]
        header.append("V_diam")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for r in range(len(self.times)):
                row = [repr(float(self.times[r]))]
                row += [repr(float(v)) for v in self.states[r]]
                row.append(str(int(self.sigma[r])))
                if with_u:
                    row += [repr(float(v)) for v in self.controls[r]]
                row.append(repr(float(self.diameter[r])))
                writer.writerow(row)


def read_trace_csv(path) -> SimTrace:
    """Load a trace written by :meth:`SimTrace.to_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader if row]
    state_cols = [i for i, name in enumerate(header) if name.startswith("x_")]
    control_cols = [i for i, name in enumerate(header) if name.startswith("u_")]
    t_col = header.index("t")
    sigma_col = header.index("sigma")
    diam_col = header.index("V_diam")
    times = np.array([float(row[t_col]) for row in rows])
    states = np.array([[float(row[c]) for c in state_cols] for row in rows])
    sigma = np.array([int(row[sigma_col]) for row in rows], dtype=np.int64)
    controls = None
    if control_cols:
        controls = np.array([[float(row[c]) for c in control_cols] for row in rows])
    diameter = np.array([float(row[diam_col]) for row in rows])
    h = float(times[1] - times[0]) if len(times) > 1 else 0.0
    return SimTrace(
        times=times,
        states=states,
        sigma=sigma,
        controls=controls,
        diameter=diameter,
        h=h,
    )


@njit(cache=True, nogil=True)
def _run_kernel(
    x,
    h,
    n_steps,
    rec_steps,
    sched_steps,
    sched_graph,
    ei,
    ej,
    w,
    sw,
    ecount,
    kappa_topo,
    alpha,
    beta,
    p,
    q,
    k,
    zeta,
    variant_b,
    dist_kind,
    amp,
    omega,
    phase_step,
    tbl_t,
    tbl_v,
    out_t,
    out_x,
    out_sigma,
    out_u,
    out_diam,
):
    n = x.shape[0]
    e = np.zeros(n)
    u = np.zeros(n)
    d = np.zeros(n)
    ptr = 0
    rec = 0
    tptr = 0
    blow_time = -1.0
    for step in range(n_steps + 1):
        while ptr + 1 < sched_steps.shape[0] and sched_steps[ptr + 1] <= step:
            ptr += 1
        g = sched_graph[ptr]
        for i in range(n):
            u[i] = 0.0
        if variant_b:
            for l in range(ecount[g]):
                i = ei[g, l]
                j = ej[g, l]
                err = sw[g, l] * (x[j] - x[i])
                if err > 0.0:
                    s = 1.0
                elif err < 0.0:
                    s = -1.0
                else:
                    s = 0.0
                if s != 0.0:
                    mag = abs(err)
                    val = (alpha * mag**p + beta * mag**q) ** k + zeta
                    flow = sw[g, l] * (s * val)
                    u[i] += flow
                    u[j] -= flow
            for i in range(n):
                u[i] = kappa_topo[g, i] * u[i]
        else:
            for i in range(n):
                e[i] = 0.0
            for l in range(ecount[g]):
                i = ei[g, l]
                j = ej[g, l]
                diff = w[g, l] * (x[j] - x[i])
                e[i] += diff
                e[j] -= diff
            for i in range(n):
                z = e[i]
                if z > 0.0:
                    s = 1.0
                elif z < 0.0:
                    s = -1.0
                else:
                    s = 0.0
                if s == 0.0:
                    u[i] = 0.0
                else:
                    mag = abs(z)
                    u[i] = kappa_topo[g, i] * (
                        s * ((alpha * mag**p + beta * mag**q) ** k + zeta)
                    )
        if rec < rec_steps.shape[0] and step == rec_steps[rec]:
            out_t[rec] = step * h
            out_sigma[rec] = g
            hi = x[0]
            lo = x[0]
            for i in range(n):
                out_x[rec, i] = x[i]
                out_u[rec, i] = u[i]
                if x[i] > hi:
                    hi = x[i]
                if x[i] < lo:
                    lo = x[i]
            out_diam[rec] = hi - lo
            rec += 1
        if step == n_steps:
            break
        t = step * h
        if dist_kind == 1:
            for i in range(n):
                d[i] = amp[i] * np.sin(omega * t + (i + 1) * phase_step)
        elif dist_kind == 2:
            while tptr + 1 < tbl_t.shape[0] and tbl_t[tptr + 1] <= t:
                tptr += 1
            for i in range(n):
                d[i] = tbl_v[tptr, i]
        ok = True
        for i in range(n):
            x[i] = x[i] + h * (u[i] + d[i])
            if not (x[i] == x[i]) or x[i] > _BLOWUP_LIMIT or x[i] < -_BLOWUP_LIMIT:
                ok = False
        if not ok:
            blow_time = (step + 1) * h
            break
    return rec, blow_time


def _pack_edges(graphs: tuple[WeightedGraph, ...]):
    m = len(graphs)
    mx = max(g.num_edges for g in graphs)
    ei = np.zeros((m, mx), dtype=np.int64)
    ej = np.zeros((m, mx), dtype=np.int64)
    w = np.zeros((m, mx))
    sw = np.zeros((m, mx))
    ecount = np.zeros(m, dtype=np.int64)
    for gi, g in enumerate(graphs):
        ecount[gi] = g.num_edges
        for l, (i, j, wt) in enumerate(g.edges):
            ei[gi, l] = i
            ej[gi, l] = j
            w[gi, l] = wt
            sw[gi, l] = math.sqrt(wt)
    return ei, ej, w, sw, ecount


def _kappa_rows(
    net: SwitchedNetwork,
    params: ProtocolParams,
    kappa_per_topology,
) -> NDArray[np.float64]:
    m, n = len(net.graphs), net.n
    if kappa_per_topology is None:
        return np.tile(params.kappa_array(), (m, 1))
    arr = np.asarray(kappa_per_topology, dtype=float)
    if arr.ndim == 1:
        if arr.shape != (m,):
            raise ValueError(f"need one gain per topology ({m})")
        arr = np.repeat(arr[:, None], n, axis=1)
    elif arr.ndim == 2 and arr.shape == (m, 1):
        arr = np.repeat(arr, n, axis=1)
    if arr.shape != (m, n):
        raise ValueError(f"per-topology gains must have shape ({m},) or ({m}, {n})")
    if not np.all(arr > 0.0):
        raise ValueError("per-topology gains must be positive")
    return arr.copy()


def simulate(
    net: SwitchedNetwork,
    x0: NDArray[np.float64],
    params: ProtocolParams,
    dist: DisturbanceModel | None = None,
    h: float = 1e-5,
    t_end: float = 1.0,
    record_every: int = 10,
    kappa_per_topology=None,
) -> SimTrace:
    """Integrate the closed loop and record a decimated trace.

    Switch times are snapped to the nearest step; the new topology acts
    from its (snapped) start time onward.  Every ``record_every``-th step
    is recorded, plus the final step.  ``kappa_per_topology`` optionally
    retunes gains at switches: shape ``(m,)`` for uniform-per-topology or
    ``(m, n)`` for full control.
    """
    if not h > 0.0:
        raise ValueError("step size must be positive")
    if not t_end > 0.0:
        raise ValueError("t_end must be positive")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    dist = DisturbanceModel(kind="zero") if dist is None else dist
    n = net.n
    if params.n != n:
        raise ValueError(f"gain vector length {params.n} != network size {n}")
    x = np.array(x0, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"x0 must have shape ({n},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("x0 must be finite")

    n_steps = int(round(t_end / h))
    sched_steps = np.array(
        [int(round(t / h)) for t, _ in net.schedule], dtype=np.int64
    )
    if np.any(np.diff(sched_steps) < 1):
        raise ValueError("schedule entries collide after snapping to the step grid")
    if sched_steps[-1] > n_steps:
        raise ValueError("schedule extends beyond t_end")
    sched_graph = np.array([i for _, i in net.schedule], dtype=np.int64)

    rec_steps = np.arange(0, n_steps + 1, record_every, dtype=np.int64)
    if rec_steps[-1] != n_steps:
        rec_steps = np.append(rec_steps, np.int64(n_steps))

    ei, ej, w, sw, ecount = _pack_edges(net.graphs)
    kappa_topo = _kappa_rows(net, params, kappa_per_topology)

    kind_code = {"zero": 0, "sinusoid": 1, "custom-table": 2}[dist.kind]
    amp = dist.amplitudes(n)
    if dist.kind == "custom-table":
        tbl_t = np.asarray(dist.table_times, dtype=float)
        tbl_v = np.asarray(dist.table_values, dtype=float)
    else:
        tbl_t = np.zeros(1)
        tbl_v = np.zeros((1, n))

    nrec = len(rec_steps)
    out_t = np.zeros(nrec)
    out_x = np.zeros((nrec, n))
    out_sigma = np.zeros(nrec, dtype=np.int64)
    out_u = np.zeros((nrec, n))
    out_diam = np.zeros(nrec)

    rho = params.rho
    written, blow_time = _run_kernel(
        x,
        float(h),
        n_steps,
        rec_steps,
        sched_steps,
        sched_graph,
        ei,
        ej,
        w,
        sw,
        ecount,
        kappa_topo,
        rho.alpha,
        rho.beta,
        rho.p,
        rho.q,
        rho.k,
        params.zeta,
        params.variant == "B",
        kind_code,
        amp,
        dist.frequency,
        dist.phase_step,
        tbl_t,
        tbl_v,
        out_t,
        out_x,
        out_sigma,
        out_u,
        out_diam,
    )
    return SimTrace(
        times=out_t[:written],
        states=out_x[:written],
        sigma=out_sigma[:written],
        controls=out_u[:written],
        diameter=out_diam[:written],
        h=float(h),
        record_every=record_every,
        blowup_time=None if blow_time < 0.0 else float(blow_time),
        meta={
            "t_end": float(t_end),
            "variant": params.variant,
            "disturbance_kind": dist.kind,
            "equal_gains": bool(np.all(kappa_topo == kappa_topo.flat[0])),
        },
    )
