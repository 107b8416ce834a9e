"""Core numerics, scenarios and file I/O for proximal network dynamics."""

from .graph import (
    AdjacencyMatrix,
    LiftedMatrix,
    kron_lift,
    min_self_loop,
    stationary_distribution,
    validate_adjacency,
)
from .prox import (
    AgentCost,
    Ball,
    Box,
    ConvexSet,
    SubBox,
    project,
    prox_agent,
    prox_collective,
    prox_numerical_oracle,
)
from .certify import (
    FeasibilityCertificate,
    InfeasibleReport,
    WeightMatrix,
    averagedness_eta,
    check_feasible,
    lmi_residual,
    smallest_certified_eta,
    solve_diagonal_Q,
    symmetric_min_eig,
)
from .dynamics import (
    GameInstance,
    Trajectory,
    fb_step,
    iterate,
    nwe_residual,
    picard_step,
)
from .switching import (
    SwitchingSignal,
    SwitchMode,
    contraction_diagnostic,
    dwell_lower_bound,
    pnwe_residual,
    switched_iterate,
    validate_signal,
)
from .scenario import (
    ExplorationResult,
    ObstacleSet,
    RobotScenario,
    build_constraint,
    run_exploration,
)
from .formats import (
    SUPPORTED_FORMATS,
    EXTENSION_MAP,
    get_file_extension,
    get_alternative_extensions,
    is_supported_format,
)
from .config import ConfigBundle, RunConfig, build_run_config, parse_config, write_record
from .export import export_csv, export_svg, render_figure

__all__ = [
    "AdjacencyMatrix",
    "LiftedMatrix",
    "kron_lift",
    "min_self_loop",
    "stationary_distribution",
    "validate_adjacency",
    "AgentCost",
    "Ball",
    "Box",
    "ConvexSet",
    "SubBox",
    "project",
    "prox_agent",
    "prox_collective",
    "prox_numerical_oracle",
    "FeasibilityCertificate",
    "InfeasibleReport",
    "WeightMatrix",
    "averagedness_eta",
    "check_feasible",
    "lmi_residual",
    "smallest_certified_eta",
    "solve_diagonal_Q",
    "symmetric_min_eig",
    "GameInstance",
    "Trajectory",
    "fb_step",
    "iterate",
    "nwe_residual",
    "picard_step",
    "SwitchingSignal",
    "SwitchMode",
    "contraction_diagnostic",
    "dwell_lower_bound",
    "pnwe_residual",
    "switched_iterate",
    "validate_signal",
    "ExplorationResult",
    "ObstacleSet",
    "RobotScenario",
    "build_constraint",
    "run_exploration",
    "SUPPORTED_FORMATS",
    "EXTENSION_MAP",
    "get_file_extension",
    "get_alternative_extensions",
    "is_supported_format",
    "ConfigBundle",
    "RunConfig",
    "build_run_config",
    "parse_config",
    "write_record",
    "export_csv",
    "export_svg",
    "render_figure",
]
