"""Low-randomness partition oracle for bounded-degree minor-free graphs."""

from __future__ import annotations

from .diffusion import ClusterEngine, cluster, conductance, inverse_ball, trunc_diffusion
from .errors import (
    BudgetError,
    DomainError,
    LrpoError,
    NotFoundError,
    RangeError,
    UsageError,
    ValidationError,
)
from .experiment import ExperimentSpec, Report, calibrate, run_experiment
from .generators import generate
from .graph import ABSENT, Graph, OracleHandle, label_query, neighbor_query
from .oracle import LocalOracle, find_anchor, find_partition, oracle_query_stats
from .partition import PartitionResult, findr, global_partition, is_viable, validate_partition
from .randomness import Mode, Params, SeedBundle, ledger, ledger_for

__all__ = [
    "ABSENT", "BudgetError", "ClusterEngine", "DomainError", "ExperimentSpec", "Graph",
    "LocalOracle", "LrpoError", "Mode", "NotFoundError", "OracleHandle", "Params",
    "PartitionResult", "RangeError", "Report", "SeedBundle", "UsageError", "ValidationError",
    "calibrate", "cluster", "conductance", "find_anchor", "find_partition", "findr",
    "generate", "global_partition", "inverse_ball", "is_viable", "label_query", "ledger",
    "ledger_for", "neighbor_query", "oracle_query_stats", "run_experiment", "trunc_diffusion",
    "validate_partition",
]
