from rte_tools.commands import cmd_convergence, cmd_run, cmd_sweep, cmd_verify
from rte_tools.discretization import discretize
from rte_tools.experiments import convergence_study, rank_sweep
from rte_tools.model import validate_run_config
from rte_tools.solver import assemble_solver

__all__ = [
    "assemble_solver",
    "cmd_convergence",
    "cmd_run",
    "cmd_sweep",
    "cmd_verify",
    "convergence_study",
    "discretize",
    "rank_sweep",
    "validate_run_config",
]
