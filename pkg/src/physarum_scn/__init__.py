"""Physarum-inspired supply-chain network design with a Frank-Wolfe reference solver."""
from .engine import Solution, SolverState, Status, run_solver
from .estimator import FrankWolfeDesigner, PhysarumDesigner, check_instance
from .instances import builtin_example
from .model import (
    CapacityMode,
    ConductivityUpdate,
    CostUpdate,
    InvalidInstanceError,
    LengthModel,
    Link,
    NetworkInstance,
    Polynomial,
    SolverParams,
    Violation,
    enumerate_paths,
    eval_polynomial,
    total_objective,
    validate_instance,
)
from .oracle import OracleResult, compare, frank_wolfe_solve, kkt_gap

__all__ = [
    "CapacityMode",
    "ConductivityUpdate",
    "CostUpdate",
    "FrankWolfeDesigner",
    "InvalidInstanceError",
    "LengthModel",
    "Link",
    "NetworkInstance",
    "OracleResult",
    "PhysarumDesigner",
    "Polynomial",
    "Solution",
    "SolverParams",
    "SolverState",
    "Status",
    "Violation",
    "builtin_example",
    "check_instance",
    "compare",
    "enumerate_paths",
    "eval_polynomial",
    "frank_wolfe_solve",
    "kkt_gap",
    "run_solver",
    "total_objective",
    "validate_instance",
]

__version__ = "0.1.0"
