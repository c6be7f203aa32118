from rte_tools.experiments.manufactured import (
    ManufacturedCase,
    build_manufactured_case,
    manufactured_reference,
    source,
)
from rte_tools.experiments.metrics import (
    convergence_orders,
    error_norm,
    rank_ratio,
    relative_error,
)
from rte_tools.experiments.studies import (
    ErrorReport,
    Problem,
    SweepResult,
    benchmark_problem,
    constant_problem,
    convergence_study,
    delta_for_rank_ratio,
    manufactured_problem,
    rank_sweep,
)

__all__ = [
    "ErrorReport",
    "ManufacturedCase",
    "Problem",
    "SweepResult",
    "benchmark_problem",
    "build_manufactured_case",
    "constant_problem",
    "convergence_orders",
    "convergence_study",
    "delta_for_rank_ratio",
    "error_norm",
    "manufactured_problem",
    "manufactured_reference",
    "rank_ratio",
    "rank_sweep",
    "relative_error",
    "source",
]
