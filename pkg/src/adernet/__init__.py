"""High-order ADER finite volume schemes for networks of hyperbolic conservation laws."""

from .cases import CASES, builtin_case, hermite_init
from .config import ConfigError, NetworkConfig, load_config, parse_config
from .engine import Simulation, SolverFailure, compute_dt, step, total_conserved
from .harness import ErrorReport, convergence_study, eoc, norms, run, simulate
from .network import Network, NetworkError, build_network, to_vertex_frame
from .swe import SWE, ShallowWater

__all__ = [
    "CASES",
    "builtin_case",
    "hermite_init",
    "ConfigError",
    "NetworkConfig",
    "load_config",
    "parse_config",
    "Simulation",
    "SolverFailure",
    "compute_dt",
    "step",
    "total_conserved",
    "ErrorReport",
    "convergence_study",
    "eoc",
    "norms",
    "run",
    "simulate",
    "Network",
    "NetworkError",
    "build_network",
    "to_vertex_frame",
    "SWE",
    "ShallowWater",
]
