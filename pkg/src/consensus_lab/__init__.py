"""Robust consensus protocols with a user-set convergence deadline.

A library and CLI for first-order multi-agent systems under bounded
disturbances on static or arbitrarily switched connected undirected
networks.  Provides dual-power consensus control laws, certified gain
design against a convergence deadline, fixed-step simulation, and
post-hoc verification (settling detection, Lyapunov decay audits,
average-consensus checks, and randomized inequality suites).
"""

from .analysis import (
    AverageConsensusReport,
    SettlingReport,
    average_consensus_check,
    detect_settling,
    diameter,
    lyapunov_trace_A,
    lyapunov_trace_B,
)
from .config import ConfigError, DesignDirective, SimConfig
from .gains import (
    CertificateReport,
    GainCertificate,
    GainRule,
    design_fixed_time_switched_A,
    design_static_A,
    design_switched_B,
    static_gain,
    switched_edge_gain,
    verify_certificate,
)
from .graphs import (
    WeightedGraph,
    algebraic_connectivity,
    calibrate_connectivity,
    complete_graph,
    cycle_graph,
    edge_errors,
    incidence,
    jacobi_eigenvalues,
    laplacian,
    neighbor_errors,
    path_graph,
    random_connected_graph,
    star_graph,
)
from .inequalities import PolyFunc, jensen_poly_check, norm_ordering_check
from .protocols import (
    ProtocolParams,
    closed_loop_field,
    control_A,
    control_B,
    matrix_form_field_A,
    matrix_form_field_B,
    phi,
)
from .runner import (
    ExperimentResult,
    reproduce,
    run_experiment,
    run_lemma_suite,
    sweep,
)
from .settling import (
    DualPowerParams,
    dual_power,
    gamma_function,
    lyapunov_rate_check,
    scalar_settling_oracle,
    settling_bound,
)
from .simulation import (
    DisturbanceModel,
    SimTrace,
    SwitchedNetwork,
    disturbance_at,
    make_dwell_schedule,
    read_trace_csv,
    sigma_at,
    simulate,
    static_network,
)

__version__ = "0.1.0"

__all__ = [
    "AverageConsensusReport",
    "CertificateReport",
    "ConfigError",
    "DesignDirective",
    "DisturbanceModel",
    "DualPowerParams",
    "ExperimentResult",
    "GainCertificate",
    "GainRule",
    "PolyFunc",
    "ProtocolParams",
    "SettlingReport",
    "SimConfig",
    "SimTrace",
    "SwitchedNetwork",
    "WeightedGraph",
    "algebraic_connectivity",
    "average_consensus_check",
    "calibrate_connectivity",
    "closed_loop_field",
    "complete_graph",
    "control_A",
    "control_B",
    "matrix_form_field_A",
    "matrix_form_field_B",
    "cycle_graph",
    "design_fixed_time_switched_A",
    "design_static_A",
    "design_switched_B",
    "detect_settling",
    "diameter",
    "disturbance_at",
    "dual_power",
    "edge_errors",
    "gamma_function",
    "incidence",
    "jacobi_eigenvalues",
    "jensen_poly_check",
    "laplacian",
    "lyapunov_rate_check",
    "lyapunov_trace_A",
    "lyapunov_trace_B",
    "make_dwell_schedule",
    "neighbor_errors",
    "norm_ordering_check",
    "path_graph",
    "phi",
    "random_connected_graph",
    "read_trace_csv",
    "reproduce",
    "run_experiment",
    "run_lemma_suite",
    "scalar_settling_oracle",
    "settling_bound",
    "sigma_at",
    "simulate",
    "star_graph",
    "static_gain",
    "static_network",
    "sweep",
    "switched_edge_gain",
    "verify_certificate",
]
