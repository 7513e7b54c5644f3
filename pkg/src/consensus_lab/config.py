"""Experiment configuration: JSON schema, validation, and assembly.

A config either carries explicit protocol gains or a design directive
from which gains are derived, never neither.  Validation collects every
problem with a field path before raising, so a bad file is diagnosed in
one pass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .gains import (
    GainCertificate,
    GainRule,
    design_fixed_time_switched_A,
    design_static_A,
    design_switched_B,
)
from .graphs import WeightedGraph
from .protocols import ProtocolParams
from .settling import DualPowerParams
from .simulation import DisturbanceModel, SwitchedNetwork

__all__ = ["ConfigError", "DesignDirective", "SimConfig"]


class ConfigError(ValueError):
    """Validation failure with one message per offending field."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid config:\n" + "\n".join(f"  - {p}" for p in problems))


@dataclass(frozen=True)
class DesignDirective:
    """Request to derive gains from a sufficient-condition rule."""

    rule: GainRule
    T_c: float | None = None
    L: float = 0.0
    margin: float = 1.0

    @classmethod
    def from_dict(cls, data: dict, problems: list[str]) -> "DesignDirective | None":
        try:
            rule = GainRule.parse(str(data.get("rule", "")))
        except ValueError as err:
            problems.append(f"protocol.design.rule: {err}")
            return None
        T_c = data.get("T_c")
        if T_c is not None:
            T_c = float(T_c)
            if not T_c > 0.0:
                problems.append("protocol.design.T_c: must be positive")
        elif rule is not GainRule.FIXED_TIME_SWITCHED_A:
            problems.append("protocol.design.T_c: required for deadline rules")
        L = float(data.get("L", 0.0))
        if L < 0.0:
            problems.append("protocol.design.L: must be non-negative")
        margin = float(data.get("margin", 1.0))
        if margin < 1.0:
            problems.append("protocol.design.margin: must be >= 1")
        return cls(rule=rule, T_c=T_c, L=L, margin=margin)


@dataclass(frozen=True)
class SimConfig:
    """Full experiment description, mirroring the JSON schema.

    JSON keys: ``graphs`` (list of ``{"n":, "edges": [[i, j, w], ...]}``),
    ``schedule`` (``[[t, idx], ...]``, default one entry at 0),
    ``protocol`` (``variant``, ``rho``, then either ``kappa``/``zeta`` or
    a ``design`` directive), ``disturbance``, ``x0``, ``h``, ``t_end``,
    plus optional ``dwell_min``, ``record_every``, ``seed``,
    ``settle_tol``, ``strict``.
    """

    network: SwitchedNetwork
    x0: tuple[float, ...]
    rho: DualPowerParams
    variant: str
    disturbance: DisturbanceModel
    h: float = 1e-5
    t_end: float = 1.0
    record_every: int = 10
    settle_tol: float = 1e-3
    seed: int | None = None
    strict: bool = True
    explicit_params: ProtocolParams | None = None
    design: DesignDirective | None = None
    kappa_per_topology: tuple[tuple[float, ...], ...] | None = field(
        default=None, compare=False
    )

    @classmethod
    def from_json(cls, path) -> "SimConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        problems: list[str] = []

        graphs: list[WeightedGraph] = []
        raw_graphs = data.get("graphs", [])
        if not raw_graphs:
            problems.append("graphs: need at least one topology")
        for idx, gd in enumerate(raw_graphs):
            try:
                graphs.append(WeightedGraph.from_dict(gd))
            except (ValueError, KeyError, TypeError) as err:
                problems.append(f"graphs[{idx}]: {err}")
        n = graphs[0].n if graphs else 0

        schedule = tuple(
            (float(t), int(i)) for t, i in data.get("schedule", [[0.0, 0]])
        )
        for pos, (_, gi) in enumerate(schedule):
            if graphs and not 0 <= gi < len(graphs):
                problems.append(f"schedule[{pos}]: graph index {gi} does not exist")
        dwell_min = float(data.get("dwell_min", 0.05))

        proto = data.get("protocol")
        rho = None
        variant = ""
        explicit = None
        design = None
        strict = bool(data.get("strict", True))
        if not isinstance(proto, dict):
            problems.append("protocol: required object")
        else:
            variant = str(proto.get("variant", ""))
            if variant not in ("A", "B"):
                problems.append("protocol.variant: must be 'A' or 'B'")
            try:
                rho = DualPowerParams.from_dict(proto.get("rho", {}))
            except (ValueError, KeyError, TypeError) as err:
                problems.append(f"protocol.rho: {err}")
            if rho is not None and strict:
                try:
                    rho.require_fixed_time()
                except ValueError as err:
                    problems.append(
                        f"protocol.rho: {err} (set strict=false to simulate anyway)"
                    )
            has_gains = "kappa" in proto
            has_design = "design" in proto
            if has_gains == has_design:
                problems.append(
                    "protocol: provide exactly one of explicit gains (kappa/zeta) "
                    "or a design directive"
                )
            elif has_design:
                design = DesignDirective.from_dict(proto["design"], problems)
            elif rho is not None and variant in ("A", "B"):
                kappa = proto["kappa"]
                if np.isscalar(kappa):
                    kappa = (float(kappa),) * max(n, 1)
                try:
                    explicit = ProtocolParams(
                        rho=rho,
                        zeta=float(proto.get("zeta", 0.0)),
                        kappa=tuple(float(v) for v in kappa),
                        variant=variant,
                        strict=strict,
                    )
                except (ValueError, TypeError) as err:
                    problems.append(f"protocol: {err}")
                if explicit is not None and n and explicit.n != n:
                    problems.append(
                        f"protocol.kappa: length {explicit.n} != {n} agents"
                    )

        kpt = None
        if "kappa_per_topology" in data:
            try:
                kpt = tuple(
                    tuple(float(v) for v in np.atleast_1d(row)) for row in data["kappa_per_topology"]
                )
            except (ValueError, TypeError) as err:
                problems.append(f"kappa_per_topology: {err}")

        try:
            disturbance = DisturbanceModel.from_dict(data.get("disturbance", {"kind": "zero"}))
        except (ValueError, KeyError, TypeError) as err:
            problems.append(f"disturbance: {err}")
            disturbance = DisturbanceModel(kind="zero")

        x0 = tuple(float(v) for v in data.get("x0", ()))
        if not x0:
            problems.append("x0: required")
        elif n and len(x0) != n:
            problems.append(f"x0: length {len(x0)} != {n} agents")

        h = float(data.get("h", 1e-5))
        if not h > 0.0:
            problems.append("h: must be positive")
        t_end = float(data.get("t_end", 1.0))
        if not t_end > 0.0:
            problems.append("t_end: must be positive")
        record_every = int(data.get("record_every", 10))
        if record_every < 1:
            problems.append("record_every: must be >= 1")
        settle_tol = float(data.get("settle_tol", 1e-3))
        if not settle_tol > 0.0:
            problems.append("settle_tol: must be positive")
        seed = data.get("seed")
        seed = int(seed) if seed is not None else None

        network = None
        if graphs and not problems:
            try:
                network = SwitchedNetwork(
                    graphs=tuple(graphs), schedule=schedule, dwell_min=dwell_min
                )
            except ValueError as err:
                problems.append(f"schedule: {err}")
        if design is not None and graphs:
            bad = [i for i, g in enumerate(graphs) if not g.is_connected()]
            if bad:
                problems.append(
                    f"graphs{bad}: disconnected; gain design requires every "
                    "topology to be connected"
                )
            if design.rule is GainRule.PREDEFINED_TIME_STATIC_A and len(graphs) != 1:
                problems.append(
                    "protocol.design: the static rule takes exactly one topology"
                )
        if problems:
            raise ConfigError(problems)
        return cls(
            network=network,
            x0=x0,
            rho=rho,
            variant=variant,
            disturbance=disturbance,
            h=h,
            t_end=t_end,
            record_every=record_every,
            settle_tol=settle_tol,
            seed=seed,
            strict=strict,
            explicit_params=explicit,
            design=design,
            kappa_per_topology=kpt,
        )

    def resolve_gains(self) -> tuple[ProtocolParams, GainCertificate | None]:
        """Return concrete protocol parameters, designing them if directed."""
        if self.explicit_params is not None:
            return self.explicit_params, None
        d = self.design
        graphs = list(self.network.graphs)
        if d.rule is GainRule.PREDEFINED_TIME_STATIC_A:
            cert = design_static_A(graphs[0], self.rho, d.T_c, d.L, d.margin)
        elif d.rule is GainRule.FIXED_TIME_SWITCHED_A:
            cert = design_fixed_time_switched_A(
                graphs, self.rho, d.L, margin=d.margin,
                T_c_hint=d.T_c if d.T_c is not None else 1.0,
            )
        else:
            cert = design_switched_B(graphs, self.rho, d.T_c, d.L, d.margin)
        return cert.params, cert

    def to_dict(self) -> dict:
        proto: dict = {"variant": self.variant, "rho": self.rho.to_dict()}
        if self.explicit_params is not None:
            proto["kappa"] = list(self.explicit_params.kappa)
            proto["zeta"] = self.explicit_params.zeta
        if self.design is not None:
            proto["design"] = {
                "rule": self.design.rule.value,
                "T_c": self.design.T_c,
                "L": self.design.L,
                "margin": self.design.margin,
            }
        out = {
            "graphs": [g.to_dict() for g in self.network.graphs],
            "schedule": [[t, i] for t, i in self.network.schedule],
            "dwell_min": self.network.dwell_min,
            "protocol": proto,
            "disturbance": self.disturbance.to_dict(),
            "x0": list(self.x0),
            "h": self.h,
            "t_end": self.t_end,
            "record_every": self.record_every,
            "settle_tol": self.settle_tol,
            "strict": self.strict,
        }
        if self.seed is not None:
            out["seed"] = self.seed
        if self.kappa_per_topology is not None:
            out["kappa_per_topology"] = [list(r) for r in self.kappa_per_topology]
        return out
