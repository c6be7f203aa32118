"""
Dense full-order reference solver.

Unknowns are all 8M raw mode coefficients of every cell, cell by cell.
Rows enforce the unprojected conditions at fine interface midpoints:
first the incoming components at every boundary interface, then all 4M
components of the jump at every interior interface, interfaces in
ascending id order inside each group. The basis and the interface data
are shared with the compressed path; only the solve differs.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse

from rte_tools.discretization import Discretization
from rte_tools.exceptions import SingularSystem, SizeGuard
from rte_tools.rsm.operators import RowLayout
from rte_tools.solver.field import SolutionField
from rte_tools.solver.steady import (
    SteadyProblem,
    solve_particular,
    solve_with_particular,
)
from rte_tools.solver.system import AngularFunction, build_system
from rte_tools.solver.time_stepping import (
    TimeSeries,
    TimeSteppingConfig,
    run_time_series,
)


logger = logging.getLogger()

MAX_I = 16
MAX_M = 3
MAX_CONDITION = 1e14


@dataclass(frozen=True, slots=True, eq=False)
class DenseTFPSSystem:
    matrix: np.ndarray
    particular: scipy.sparse.csr_matrix
    boundary: scipy.sparse.csr_matrix
    row_interfaces: np.ndarray
    lu: Tuple[np.ndarray, np.ndarray]

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def residual(
        self,
        particular: np.ndarray,
        modes: np.ndarray,
        boundary: np.ndarray,
    ) -> np.ndarray:
        return (
            self.matrix @ modes.ravel()
            + self.particular @ particular.ravel()
            - self.boundary @ boundary
        )


def check_size(disc: Discretization, max_I: int = MAX_I) -> None:
    if disc.mesh.I > max_I or disc.quad.M > MAX_M:
        raise SizeGuard(
            f"Dense oracle is limited to I <= {max_I} and M <= {MAX_M}, "
            f"got I={disc.mesh.I}, M={disc.quad.M}"
        )


def assemble_dense_system(
    disc: Discretization, boundary_offsets: np.ndarray
) -> DenseTFPSSystem:
    check_size(disc)
    mesh = disc.mesh
    n_dir = disc.quad.size
    n_modes = disc.modes_per_cell
    boundary = sorted(mesh.boundary_interfaces)
    interior = sorted(mesh.interior_interfaces(0))
    n_unknowns = mesh.n_cells * n_modes

    matrix = np.zeros((n_unknowns, n_unknowns))
    p_data, p_rows, p_cols = [], [], []
    b_rows, b_cols = [], []
    row_interfaces = []
    start = 0
    for index, j in enumerate(boundary + interior):
        proj = disc.projections[j]
        interface = proj.interface
        rows = np.arange(start, start + proj.n_rows)
        x, y = interface.midpoint
        if interface.is_boundary:
            sides = [(interface.cells[0], 1.0)]
            first = boundary_offsets[index]
            b_rows.append(rows)
            b_cols.append(np.arange(first, first + proj.n_rows))
        else:
            sides = [
                (interface.minus_cell, -1.0),
                (interface.plus_cell, 1.0),
            ]
        for cell, sign in sides:
            columns = slice(cell * n_modes, (cell + 1) * n_modes)
            traces = disc.bases[cell].values(x, y)[proj.rows, :]
            matrix[rows, columns] += sign * traces
            p_data.append(np.full(proj.n_rows, sign))
            p_rows.append(rows)
            p_cols.append(cell * n_dir + proj.rows)
        row_interfaces.extend([j] * proj.n_rows)
        start += proj.n_rows

    if start != n_unknowns:
        raise SingularSystem(
            f"Dense system has {start} rows for {n_unknowns} unknowns"
        )
    condition = np.linalg.cond(matrix)
    if not condition <= MAX_CONDITION:
        raise SingularSystem(
            f"Dense TFPS system has condition number {condition:.3e}"
        )
    boundary_size = int(boundary_offsets[-1])
    particular = scipy.sparse.csr_matrix(
        (
            np.concatenate(p_data),
            (np.concatenate(p_rows), np.concatenate(p_cols)),
        ),
        shape=(n_unknowns, mesh.n_cells * n_dir),
    )
    boundary_map = scipy.sparse.csr_matrix(
        (
            np.ones(boundary_size),
            (np.concatenate(b_rows), np.concatenate(b_cols)),
        ),
        shape=(n_unknowns, boundary_size),
    )
    logger.debug(
        f"Dense TFPS system of size {n_unknowns}, condition "
        f"{condition:.3e}"
    )
    return DenseTFPSSystem(
        matrix=matrix,
        particular=particular,
        boundary=boundary_map,
        row_interfaces=np.array(row_interfaces, dtype=int),
        lu=scipy.linalg.lu_factor(matrix),
    )


class FullOrderSolver:
    """
    Steady solver on all raw mode coefficients. Plugs into the shared
    time stepping in place of the compressed solver.
    """

    def __init__(self, disc: Discretization):
        check_size(disc)
        self.system = build_system(disc, RowLayout(disc))
        self.dense = assemble_dense_system(
            disc, self.system.boundary_offsets
        )

    def solve_fundamental(
        self, particular: np.ndarray, boundary: np.ndarray
    ) -> np.ndarray:
        rhs = (
            self.dense.boundary @ boundary
            - self.dense.particular @ particular.ravel()
        )
        modes = scipy.linalg.lu_solve(self.dense.lu, rhs)
        return modes.reshape(self.system.n_cells, self.system.n_modes)

    def reconstruct(
        self,
        particular: np.ndarray,
        fundamental: np.ndarray,
        boundary: np.ndarray,
    ) -> np.ndarray:
        return np.zeros_like(fundamental)

    def relative_residual(
        self, field: SolutionField, boundary: np.ndarray
    ) -> float:
        residual = self.dense.residual(
            field.particular, field.modes, boundary
        )
        data = self.dense.boundary @ boundary
        constants = self.dense.particular @ field.particular.ravel()
        scale = max(
            np.linalg.norm(data) + np.linalg.norm(constants),
            np.finfo(float).tiny,
        )
        return float(np.linalg.norm(residual) / scale)


def full_order_steady_solve(
    problem: SteadyProblem, solver: FullOrderSolver, t: float = 0.0
) -> SolutionField:
    particular = solve_particular(problem.rhs, solver.system)
    return solve_with_particular(particular, problem.boundary, solver, t)


def full_order_time_series(
    disc: Discretization,
    initial: AngularFunction,
    boundary: AngularFunction,
    source: AngularFunction,
    cfg: TimeSteppingConfig,
    solver: Optional[FullOrderSolver] = None,
) -> TimeSeries:
    """Reference series through the same midpoint iterations."""
    if solver is None:
        solver = FullOrderSolver(disc)
    logger.info(
        f"Full-order reference for I={disc.mesh.I}, M={disc.quad.M}: "
        f"{solver.dense.size} unknowns"
    )
    return run_time_series(initial, boundary, source, cfg, solver)


__all__ = [
    "DenseTFPSSystem",
    "FullOrderSolver",
    "assemble_dense_system",
    "full_order_steady_solve",
    "full_order_time_series",
]
