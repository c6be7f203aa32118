import logging
from typing import Optional

from rte_tools.discretization import Discretization
from rte_tools.rsm import RsmBuild, build_factorization
from rte_tools.rsm.factorization import MultilevelFactorization
from rte_tools.solver.field import SolutionField, evaluate
from rte_tools.solver.steady import (
    CompressedSolver,
    SteadyProblem,
    reconstruct_layers,
    solve_particular,
    steady_solve,
)
from rte_tools.solver.system import DiscreteSystem, build_system
from rte_tools.solver.time_stepping import (
    SteppingMode,
    TimeSeries,
    TimeSteppingConfig,
    midpoint_step_cell_average,
    midpoint_step_cell_center,
    run_time_series,
)


logger = logging.getLogger()


def assemble_solver(
    disc: Discretization,
    threads: int = 1,
    cached: Optional[MultilevelFactorization] = None,
    reconstruct: bool = True,
) -> CompressedSolver:
    """
    Offline phase: factorization and solver maps for one discretization.
    The build record is attached to the solver as solver.build.
    """
    build: RsmBuild = build_factorization(disc, threads, cached=cached)
    system = build_system(disc, build.layout, build.level0)
    return CompressedSolver(
        system,
        build.factorization,
        reconstruct_layers=reconstruct,
        build=build,
    )


__all__ = [
    "CompressedSolver",
    "DiscreteSystem",
    "SolutionField",
    "SteadyProblem",
    "SteppingMode",
    "TimeSeries",
    "TimeSteppingConfig",
    "assemble_solver",
    "evaluate",
    "midpoint_step_cell_average",
    "midpoint_step_cell_center",
    "reconstruct_layers",
    "run_time_series",
    "solve_particular",
    "steady_solve",
]
