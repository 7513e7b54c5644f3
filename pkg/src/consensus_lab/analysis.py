"""Post-hoc trace verification: settling, Lyapunov decay, mean conservation.

Settling is detected with an absolute tolerance band on the consensus
diameter rather than exact equality, because the sign-based controls
chatter at the integration-step scale once agreement is reached.  The
Lyapunov evaluations mirror the two disagreement norms used in the
convergence arguments, and the rate check audits the decay inequality
that turns a Lyapunov trace into a deadline guarantee.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .graphs import WeightedGraph, algebraic_connectivity, laplacian
from .settling import lyapunov_rate_check
from .simulation import SimTrace

__all__ = [
    "SettlingReport",
    "AverageConsensusReport",
    "diameter",
    "detect_settling",
    "lyapunov_trace_A",
    "lyapunov_trace_B",
    "lyapunov_rate_check",
    "average_consensus_check",
]

# Absolute settling tolerance: initial diameters in the bundled demos are
# a few hundred state units, so 1e-3 is ~2e-6 relative, tight enough to
# witness deadline claims while sitting above step-scale chatter.
DEFAULT_SETTLE_TOL = 1e-3


def diameter(x: NDArray[np.float64]) -> float:
    """Consensus gap ``max(x) - min(x)``; zero exactly at consensus."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("diameter of an empty state is undefined")
    return float(np.max(x) - np.min(x))


@dataclass(frozen=True)
class SettlingReport:
    """Outcome of tolerance-band settling detection on one trace."""

    settled: bool
    tol_abs: float
    t_settle: float | None = None
    post_settle_max_diameter: float | None = None
    bound_T_c: float | None = None
    bound_satisfied: bool | None = None

    def to_dict(self) -> dict:
        return {
            "settled": self.settled,
            "tol_abs": self.tol_abs,
            "t_settle": self.t_settle,
            "post_settle_max_diameter": self.post_settle_max_diameter,
            "bound_T_c": self.bound_T_c,
            "bound_satisfied": self.bound_satisfied,
        }


def detect_settling(
    trace: SimTrace,
    tol_abs: float = DEFAULT_SETTLE_TOL,
    T_c: float | None = None,
) -> SettlingReport:
    """First recorded time after which the diameter stays within ``tol_abs``.

    A trace that blew up or whose diameter re-exceeds the tolerance by
    the final sample reports ``settled = False``.  When a deadline
    ``T_c`` is supplied, ``bound_satisfied`` states whether settling
    happened no later than it.
    """
    if not tol_abs > 0.0:
        raise ValueError("tolerance must be positive")
    diam = trace.diameter
    if trace.blew_up or len(diam) == 0:
        return SettlingReport(
            settled=False,
            tol_abs=tol_abs,
            bound_T_c=T_c,
            bound_satisfied=False if T_c is not None else None,
        )
    above = np.nonzero(diam > tol_abs)[0]
    if len(above) == 0:
        first_ok = 0
    elif above[-1] == len(diam) - 1:
        return SettlingReport(
            settled=False,
            tol_abs=tol_abs,
            bound_T_c=T_c,
            bound_satisfied=False if T_c is not None else None,
        )
    else:
        first_ok = int(above[-1]) + 1
    t_settle = float(trace.times[first_ok])
    post_max = float(np.max(diam[first_ok:]))
    return SettlingReport(
        settled=True,
        tol_abs=tol_abs,
        t_settle=t_settle,
        post_settle_max_diameter=post_max,
        bound_T_c=T_c,
        bound_satisfied=(t_settle <= T_c) if T_c is not None else None,
    )


def _centered(states: NDArray[np.float64]) -> NDArray[np.float64]:
    # The convergence arguments split x into a consensus offset plus a
    # disagreement component; mean-centering realizes that split.
    return states - states.mean(axis=1, keepdims=True)


def lyapunov_trace_A(trace: SimTrace, graph: WeightedGraph) -> NDArray[np.float64]:
    """Disagreement norm ``(1/n) sqrt(lambda2 * delta' Q delta)`` per record.

    ``delta`` is the mean-centered state.  Only meaningful on a segment
    with one fixed topology, so a switching trace is rejected.
    """
    if len(trace.sigma) > 0 and not np.all(trace.sigma == trace.sigma[0]):
        raise ValueError("variant-A Lyapunov trace needs a single-topology segment")
    if trace.n != graph.n:
        raise ValueError(f"trace has {trace.n} agents, graph has {graph.n}")
    q = laplacian(graph)
    lam2 = algebraic_connectivity(graph)
    delta = _centered(trace.states)
    quad = np.einsum("ri,ij,rj->r", delta, q, delta)
    # Clip tiny negative round-off from the quadratic form.
    return np.sqrt(lam2 * np.clip(quad, 0.0, None)) / graph.n


def lyapunov_trace_B(
    trace: SimTrace, lambda2_star: float, m_edges: int
) -> NDArray[np.float64]:
    """Disagreement norm ``(1/M) sqrt(lambda2_star * delta' delta)`` per record.

    Topology-independent, hence valid across switches as a common
    Lyapunov function for the edge-error protocol.
    """
    if not lambda2_star > 0.0:
        raise ValueError("lambda2_star must be positive")
    if not m_edges >= 1:
        raise ValueError("edge count must be at least 1")
    delta = _centered(trace.states)
    return np.sqrt(lambda2_star * np.sum(delta * delta, axis=1)) / m_edges


@dataclass(frozen=True)
class AverageConsensusReport:
    """Mean-conservation audit for edge-error (variant B) runs."""

    applicable: bool
    reason: str
    mean_x0: float | None = None
    max_mean_drift: float | None = None
    final_gap: float | None = None

    def to_dict(self) -> dict:
        return {
            "applicable": self.applicable,
            "reason": self.reason,
            "mean_x0": self.mean_x0,
            "max_mean_drift": self.max_mean_drift,
            "final_gap": self.final_gap,
        }


def average_consensus_check(trace: SimTrace) -> AverageConsensusReport:
    """Check that the run conserved the state mean and met at the average.

    Applicable to undisturbed variant-B runs with equal gains (the
    control flows cancel pairwise there, so the mean is invariant).
    Variant-A runs are reported as not applicable rather than failed.
    Reports the worst drift of ``mean(x(t))`` from ``mean(x0)`` and the
    largest final-state distance from ``mean(x0)``.
    """
    variant = trace.meta.get("variant")
    if variant == "A":
        return AverageConsensusReport(
            applicable=False,
            reason="node-error variant does not conserve the mean",
        )
    dist_kind = trace.meta.get("disturbance_kind")
    if dist_kind not in (None, "zero"):
        return AverageConsensusReport(
            applicable=False,
            reason=f"disturbance kind {dist_kind!r} breaks mean conservation",
        )
    if trace.meta.get("equal_gains") is False:
        return AverageConsensusReport(
            applicable=False,
            reason="unequal gains break the pairwise flow cancellation",
        )
    mean_x0 = float(np.mean(trace.states[0]))
    means = trace.states.mean(axis=1)
    drift = float(np.max(np.abs(means - mean_x0)))
    final_gap = float(np.max(np.abs(trace.final_state - mean_x0)))
    return AverageConsensusReport(
        applicable=True,
        reason="undisturbed equal-gain edge-error run",
        mean_x0=mean_x0,
        max_mean_drift=drift,
        final_gap=final_gap,
    )
