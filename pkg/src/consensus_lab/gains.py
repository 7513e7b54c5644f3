"""Certified gain selection for the consensus protocols.

Three sufficient-condition rules are implemented, one per supported
setting.  Each returns a :class:`GainCertificate` recording the designed
gains, the inequalities they satisfy, and the slack in each inequality,
so a certificate can be re-audited later against the actual topology
collection via :func:`verify_certificate`.

Rules
-----
``fixed-switched-a``
    Variant A over arbitrarily switched connected topologies.  Only the
    product ``kappa * zeta >= L`` is constrained (L bounds the
    disturbance norm); convergence time is finite and uniformly bounded
    but no user deadline is certified.
``predefined-static-a``
    Variant A on one static connected topology.  Gains
    ``kappa_i = margin * n * gamma(rho) / (lambda2 * T_c)`` and
    ``zeta = L / kappa`` certify consensus before the deadline ``T_c``.
``predefined-switched-b``
    Variant B over switched connected topologies.  With ``M`` the
    smallest edge count and ``lambda2_star`` the smallest algebraic
    connectivity over the collection,
    ``kappa_i = margin * M * gamma(rho) / (lambda2_star * T_c)`` and
    ``zeta = L / (kappa * sqrt(lambda2_star))`` certify the deadline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .graphs import WeightedGraph, algebraic_connectivity
from .protocols import ProtocolParams
from .settling import DualPowerParams, settling_bound

__all__ = [
    "GainRule",
    "GainCertificate",
    "CertificateReport",
    "static_gain",
    "switched_edge_gain",
    "design_static_A",
    "design_fixed_time_switched_A",
    "design_switched_B",
    "verify_certificate",
]


class GainRule(str, Enum):
    """Which sufficient condition a certificate claims."""

    FIXED_TIME_SWITCHED_A = "fixed-switched-a"
    PREDEFINED_TIME_STATIC_A = "predefined-static-a"
    PREDEFINED_TIME_SWITCHED_B = "predefined-switched-b"

    @classmethod
    def parse(cls, text: str) -> "GainRule":
        """Accept canonical rule names plus short historical aliases."""
        aliases = {
            "t3": cls.FIXED_TIME_SWITCHED_A,
            "t4": cls.PREDEFINED_TIME_STATIC_A,
            "t5": cls.PREDEFINED_TIME_SWITCHED_B,
        }
        key = text.strip().lower()
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            valid = sorted(v.value for v in cls) + sorted(aliases)
            raise ValueError(f"unknown rule {text!r}; expected one of {valid}")


# The switched-B proof chains its inequalities through the smallest
# per-agent gain, so kappa below always means min(kappa_i).  The source
# condition is sometimes quoted with max instead; min is the reading
# under which the certificate inequalities actually imply the deadline,
# and it is the conservative choice.
_MIN_GAIN_NOTE = (
    "kappa denotes min(kappa_i); the conservative reading under which "
    "the certified inequalities imply the stated convergence claim"
)


@dataclass(frozen=True)
class GainCertificate:
    """Designed gains plus the audited inequalities behind them.

    ``slack`` maps each certified inequality to its nonnegative margin
    (value minus requirement).  ``kappa_per_topology`` optionally holds
    one per-agent gain row per topology for switched runs that retune at
    switches.  ``details`` records the quantities the design consumed
    (``gamma``, ``lambda2`` or ``lambda2_star``, ``M``, ``n``).
    """

    params: ProtocolParams
    rule: GainRule
    L: float
    T_c: float | None = None
    margin: float = 1.0
    slack: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    kappa_per_topology: tuple[tuple[float, ...], ...] | None = None
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.L < 0.0:
            raise ValueError("disturbance bound L must be non-negative")
        if self.T_c is not None and not self.T_c > 0.0:
            raise ValueError("deadline T_c must be positive")
        if bad := [k for k, v in self.slack.items() if v < -1e-12]:
            raise ValueError(f"certificate has negative slack in {bad}")

    @property
    def kappa_min(self) -> float:
        return self.params.kappa_min

    def to_dict(self) -> dict:
        out = {
            "rule": self.rule.value,
            "protocol": self.params.to_dict(),
            "L": self.L,
            "T_c": self.T_c,
            "margin": self.margin,
            "slack": dict(self.slack),
            "details": dict(self.details),
            "notes": list(self.notes),
        }
        if self.kappa_per_topology is not None:
            out["kappa_per_topology"] = [list(row) for row in self.kappa_per_topology]
        return out


def _require_connected(graphs: list[WeightedGraph]) -> list[float]:
    if not graphs:
        raise ValueError("need at least one topology")
    n = graphs[0].n
    lambda2 = []
    for idx, g in enumerate(graphs):
        if g.n != n:
            raise ValueError(f"topology {idx} has {g.n} nodes, expected {n}")
        if not g.is_connected():
            raise ValueError(f"topology {idx} is disconnected; design requires connectivity")
        lambda2.append(algebraic_connectivity(g))
    return lambda2


def static_gain(
    n: int, lambda2: float, rho: DualPowerParams, T_c: float, margin: float = 1.0
) -> float:
    """Uniform variant-A gain ``margin * n * gamma(rho) / (lambda2 * T_c)``."""
    if not (lambda2 > 0.0 and T_c > 0.0 and margin >= 1.0):
        raise ValueError("need lambda2 > 0, T_c > 0, margin >= 1")
    return margin * n * settling_bound(rho) / (lambda2 * T_c)


def switched_edge_gain(
    m_edges: int, lambda2: float, rho: DualPowerParams, T_c: float, margin: float = 1.0
) -> float:
    """Uniform variant-B gain ``margin * M * gamma(rho) / (lambda2 * T_c)``."""
    if not (lambda2 > 0.0 and T_c > 0.0 and margin >= 1.0 and m_edges >= 1):
        raise ValueError("need m_edges >= 1, lambda2 > 0, T_c > 0, margin >= 1")
    return margin * m_edges * settling_bound(rho) / (lambda2 * T_c)


def design_static_A(
    graph: WeightedGraph,
    rho: DualPowerParams,
    T_c: float,
    L: float,
    margin: float = 1.0,
) -> GainCertificate:
    """Deadline-certified gains for variant A on one static topology."""
    lambda2 = _require_connected([graph])[0]
    gamma = settling_bound(rho)
    kappa = static_gain(graph.n, lambda2, rho, T_c, margin)
    zeta = L / kappa if L > 0.0 else 0.0
    required = graph.n * gamma / (lambda2 * T_c)
    params = ProtocolParams(
        rho=rho, zeta=zeta, kappa=(kappa,) * graph.n, variant="A"
    )
    return GainCertificate(
        params=params,
        rule=GainRule.PREDEFINED_TIME_STATIC_A,
        L=L,
        T_c=T_c,
        margin=margin,
        slack={
            "kappa_vs_rate": kappa - required,
            "kappa_zeta_vs_L": kappa * zeta - L,
        },
        details={"n": graph.n, "lambda2": lambda2, "gamma": gamma},
    )


def design_fixed_time_switched_A(
    graphs: list[WeightedGraph],
    rho: DualPowerParams,
    L: float,
    kappa_per_topology: list[float] | None = None,
    T_c_hint: float = 1.0,
    margin: float = 1.0,
) -> GainCertificate:
    """Finite-but-unbudgeted convergence gains for variant A under switching.

    The only certified inequality is ``kappa * zeta >= L`` with ``kappa``
    the smallest gain over all topologies.  Absolute gain magnitude is
    otherwise free; when ``kappa_per_topology`` is not supplied, each
    topology gets the static-rule gain evaluated with ``T_c_hint`` so
    magnitudes stay comparable to a deadline design.
    """
    lambda2 = _require_connected(graphs)
    gamma = settling_bound(rho)
    n = graphs[0].n
    if kappa_per_topology is None:
        per_topo = [static_gain(n, l2, rho, T_c_hint, margin) for l2 in lambda2]
    else:
        per_topo = [float(v) for v in kappa_per_topology]
        if len(per_topo) != len(graphs):
            raise ValueError("need one gain per topology")
        if any(not v > 0.0 for v in per_topo):
            raise ValueError("per-topology gains must be positive")
    kappa = min(per_topo)
    zeta = L / kappa if L > 0.0 else 0.0
    params = ProtocolParams(rho=rho, zeta=zeta, kappa=(kappa,) * n, variant="A")
    return GainCertificate(
        params=params,
        rule=GainRule.FIXED_TIME_SWITCHED_A,
        L=L,
        T_c=None,
        margin=margin,
        slack={"kappa_zeta_vs_L": kappa * zeta - L},
        details={"n": n, "lambda2_list": lambda2, "gamma": gamma},
        kappa_per_topology=tuple((v,) * n for v in per_topo),
        notes=(
            "no deadline certified under switching for variant A; "
            "convergence time is finite and uniformly bounded",
            _MIN_GAIN_NOTE,
        ),
    )


def design_switched_B(
    graphs: list[WeightedGraph],
    rho: DualPowerParams,
    T_c: float,
    L: float,
    margin: float = 1.0,
) -> GainCertificate:
    """Deadline-certified gains for variant B under arbitrary switching."""
    lambda2 = _require_connected(graphs)
    gamma = settling_bound(rho)
    n = graphs[0].n
    m_min = min(g.num_edges for g in graphs)
    lambda2_star = min(lambda2)
    kappa = switched_edge_gain(m_min, lambda2_star, rho, T_c, margin)
    zeta = L / (kappa * math.sqrt(lambda2_star)) if L > 0.0 else 0.0
    required = m_min * gamma / (lambda2_star * T_c)
    params = ProtocolParams(rho=rho, zeta=zeta, kappa=(kappa,) * n, variant="B")
    return GainCertificate(
        params=params,
        rule=GainRule.PREDEFINED_TIME_SWITCHED_B,
        L=L,
        T_c=T_c,
        margin=margin,
        slack={
            "kappa_vs_rate": kappa - required,
            "kappa_zeta_root_vs_L": kappa * zeta * math.sqrt(lambda2_star) - L,
        },
        details={
            "n": n,
            "M": m_min,
            "lambda2_star": lambda2_star,
            "lambda2_list": lambda2,
            "gamma": gamma,
        },
        notes=(_MIN_GAIN_NOTE,),
    )


@dataclass(frozen=True)
class CertificateReport:
    """Outcome of a from-scratch audit of a certificate."""

    ok: bool
    slack: dict
    recomputed: dict
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "slack": dict(self.slack),
            "recomputed": dict(self.recomputed),
            "notes": list(self.notes),
        }


def verify_certificate(
    cert: GainCertificate, graphs: list[WeightedGraph]
) -> CertificateReport:
    """Re-derive every certified inequality from the topology collection.

    Recomputes connectivity, edge counts, and the settling bound rather
    than trusting the certificate's stored details.  Violations are
    reported as negative slack entries, not raised.
    """
    notes: list[str] = [_MIN_GAIN_NOTE]
    recomputed: dict = {}
    slack: dict = {}
    try:
        lambda2 = _require_connected(graphs)
    except ValueError as err:
        return CertificateReport(
            ok=False,
            slack={},
            recomputed={},
            notes=(f"topology precondition failed: {err}",),
        )
    gamma = settling_bound(cert.params.rho)
    n = graphs[0].n
    kappa = cert.params.kappa_min
    if cert.kappa_per_topology is not None:
        kappa = min(kappa, min(min(row) for row in cert.kappa_per_topology))
    zeta = cert.params.zeta
    recomputed.update({"gamma": gamma, "kappa": kappa, "n": n})

    if cert.rule is GainRule.PREDEFINED_TIME_STATIC_A:
        if len(graphs) != 1:
            notes.append("static rule audited against the first topology only")
        recomputed["lambda2"] = lambda2[0]
        slack["kappa_vs_rate"] = kappa - n * gamma / (lambda2[0] * cert.T_c)
        slack["kappa_zeta_vs_L"] = kappa * zeta - cert.L
    elif cert.rule is GainRule.FIXED_TIME_SWITCHED_A:
        recomputed["lambda2_list"] = lambda2
        slack["kappa_zeta_vs_L"] = kappa * zeta - cert.L
    else:
        m_min = min(g.num_edges for g in graphs)
        lambda2_star = min(lambda2)
        recomputed.update({"M": m_min, "lambda2_star": lambda2_star})
        slack["kappa_vs_rate"] = kappa - m_min * gamma / (lambda2_star * cert.T_c)
        slack["kappa_zeta_root_vs_L"] = (
            kappa * zeta * math.sqrt(lambda2_star) - cert.L
        )
    ok = all(v >= -1e-12 for v in slack.values())
    return CertificateReport(ok=ok, slack=slack, recomputed=recomputed, notes=tuple(notes))
