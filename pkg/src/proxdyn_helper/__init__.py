"""Proximal dynamics for network equilibrium seeking - Public API."""

# Core functionality
from proxdyn_helper.core.graph import AdjacencyMatrix, validate_adjacency
from proxdyn_helper.core.prox import AgentCost, Ball, Box, prox_collective
from proxdyn_helper.core.certify import WeightMatrix, check_feasible, solve_diagonal_Q
from proxdyn_helper.core.dynamics import GameInstance, iterate, nwe_residual
from proxdyn_helper.core.switching import SwitchingSignal, SwitchMode, dwell_lower_bound, switched_iterate
from proxdyn_helper.core.scenario import RobotScenario, run_exploration
from proxdyn_helper.core.config import parse_config, write_record
from proxdyn_helper.utils.logging import (
    configure_logging,
    logger,
)
from proxdyn_helper.core.formats import (
    SUPPORTED_FORMATS,
    get_file_extension,
)

__version__ = "0.1.0"

__all__ = [
    "configure_logging",
    "logger",
    "AdjacencyMatrix",
    "validate_adjacency",
    "AgentCost",
    "Ball",
    "Box",
    "prox_collective",
    "WeightMatrix",
    "check_feasible",
    "solve_diagonal_Q",
    "GameInstance",
    "iterate",
    "nwe_residual",
    "SwitchingSignal",
    "SwitchMode",
    "dwell_lower_bound",
    "switched_iterate",
    "RobotScenario",
    "run_exploration",
    "parse_config",
    "write_record",
    "SUPPORTED_FORMATS",
    "get_file_extension",
]
