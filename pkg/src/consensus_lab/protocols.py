"""The two consensus control laws and their closed-loop vector fields.

Variant A feeds each agent's aggregated neighbor disagreement through the
dual-power shaping function.  Variant B applies the shaping function per
edge before aggregating, which makes the control sum to zero across
agents when all gains are equal, so the undisturbed network average is
conserved and the agents meet at the initial mean.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .graphs import WeightedGraph, edge_errors, incidence, neighbor_errors
from .settling import DualPowerParams

__all__ = [
    "ProtocolParams",
    "phi",
    "control_A",
    "control_B",
    "closed_loop_field",
]


def phi(
    z: float | NDArray[np.float64], rho: DualPowerParams, zeta: float = 0.0
) -> float | NDArray[np.float64]:
    """Shaping function ``[(alpha |z|**p + beta |z|**q)**k + zeta] * sign(z)``.

    Odd, strictly increasing for ``zeta >= 0``, and exactly zero at zero
    (``sign(0) = 0``, so the offset injects no drift at consensus).
    """
    z = np.asarray(z, dtype=float)
    mag = np.abs(z)
    out = np.sign(z) * (
        (rho.alpha * mag**rho.p + rho.beta * mag**rho.q) ** rho.k + zeta
    )
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ProtocolParams:
    """Gains and shaping parameters for one protocol variant.

    ``kappa`` holds one positive gain per agent.  ``strict`` controls
    whether the exponents must sit in the deadline regime
    (``k*p < 1 < k*q``); disable it to simulate parameter sets outside
    that regime, which still define a valid control law.
    """

    rho: DualPowerParams
    zeta: float
    kappa: tuple[float, ...]
    variant: str
    strict: bool = field(default=True, compare=False)

    def __post_init__(self) -> None:
        if self.variant not in ("A", "B"):
            raise ValueError("variant must be 'A' or 'B'")
        if self.zeta < 0.0:
            raise ValueError("zeta must be non-negative")
        kappa = tuple(float(v) for v in self.kappa)
        if len(kappa) == 0:
            raise ValueError("need at least one gain")
        if any(not v > 0.0 for v in kappa):
            raise ValueError("all gains must be positive")
        object.__setattr__(self, "kappa", kappa)
        if self.strict:
            self.rho.require_fixed_time()

    @property
    def n(self) -> int:
        return len(self.kappa)

    @property
    def kappa_min(self) -> float:
        return min(self.kappa)

    def kappa_array(self) -> NDArray[np.float64]:
        return np.array(self.kappa)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "rho": self.rho.to_dict(),
            "kappa": list(self.kappa),
            "zeta": self.zeta,
        }

    @classmethod
    def from_dict(cls, data: dict, strict: bool = True) -> "ProtocolParams":
        return cls(
            rho=DualPowerParams.from_dict(data["rho"]),
            zeta=float(data["zeta"]),
            kappa=tuple(float(v) for v in data["kappa"]),
            variant=str(data["variant"]),
            strict=strict,
        )


def _check_dims(graph: WeightedGraph, x: NDArray[np.float64], params: ProtocolParams) -> None:
    if params.n != graph.n:
        raise ValueError(f"gain vector length {params.n} != graph size {graph.n}")
    if x.shape != (graph.n,):
        raise ValueError(f"state must have shape ({graph.n},)")


def control_A(
    graph: WeightedGraph, x: NDArray[np.float64], params: ProtocolParams
) -> NDArray[np.float64]:
    """Node-error law: ``u_i = kappa_i * phi(e_i)`` with aggregated errors."""
    x = np.asarray(x, dtype=float)
    _check_dims(graph, x, params)
    e = neighbor_errors(graph, x)
    return params.kappa_array() * phi(e, params.rho, params.zeta)


def control_B(
    graph: WeightedGraph, x: NDArray[np.float64], params: ProtocolParams
) -> NDArray[np.float64]:
    """Edge-error law: ``u_i = kappa_i * sum_j sqrt(w_ij) * phi(e_ij)``.

    With equal gains this equals ``-kappa * D @ phi(D.T @ x)`` for the
    incidence matrix ``D``, whose columns sum to zero, hence
    ``sum_i u_i = 0`` and the average state is conserved when no
    disturbance acts.
    """
    x = np.asarray(x, dtype=float)
    _check_dims(graph, x, params)
    shaped = phi(edge_errors(graph, x), params.rho, params.zeta)
    u = np.zeros(graph.n)
    for l, (i, j, w) in enumerate(graph.edges):
        flow = np.sqrt(w) * shaped[l]
        u[i] += flow
        u[j] -= flow
    return params.kappa_array() * u


def closed_loop_field(
    graph: WeightedGraph,
    x: NDArray[np.float64],
    params: ProtocolParams,
    d: NDArray[np.float64] | None = None,
) -> NDArray[np.float64]:
    """State derivative ``u(x) + d`` for the active variant.

    This is the single entry point the integrator consumes.
    """
    if params.variant == "A":
        u = control_A(graph, x, params)
    else:
        u = control_B(graph, x, params)
    if d is None:
        return u
    d = np.asarray(d, dtype=float)
    if d.shape != u.shape:
        raise ValueError("disturbance length must match state length")
    return u + d


def matrix_form_field_A(
    graph: WeightedGraph,
    x: NDArray[np.float64],
    params: ProtocolParams,
    d: NDArray[np.float64] | None = None,
) -> NDArray[np.float64]:
    """Reference evaluation of variant A through the Laplacian matrix.

    Computes ``kappa * phi(-Q @ x) + d``; used as an independent oracle
    against :func:`control_A`'s neighbor-sum evaluation.
    """
    from .graphs import laplacian

    x = np.asarray(x, dtype=float)
    e = -laplacian(graph) @ x
    u = params.kappa_array() * phi(e, params.rho, params.zeta)
    return u if d is None else u + np.asarray(d, dtype=float)


def matrix_form_field_B(
    graph: WeightedGraph,
    x: NDArray[np.float64],
    params: ProtocolParams,
    d: NDArray[np.float64] | None = None,
) -> NDArray[np.float64]:
    """Reference evaluation of variant B through the incidence matrix.

    Computes ``kappa * (D @ phi(-D.T @ x)) + d``.  Exact for any gains
    because the per-agent gain multiplies the aggregated edge flows.
    """
    x = np.asarray(x, dtype=float)
    dmat = incidence(graph)
    u = params.kappa_array() * (dmat @ phi(-dmat.T @ x, params.rho, params.zeta))
    return u if d is None else u + np.asarray(d, dtype=float)
