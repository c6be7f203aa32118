import logging
import time
from dataclasses import dataclass
from typing import Dict, Protocol

import numpy as np

from rte_tools.discretization.interface_projection import project
from rte_tools.rsm.factorization import MultilevelFactorization, apply_inverse
from rte_tools.solver.field import SolutionField
from rte_tools.solver.system import DiscreteSystem


logger = logging.getLogger()


@dataclass(frozen=True, slots=True, eq=False)
class SteadyProblem:
    rhs: np.ndarray  # (n_cells, 4M) right-hand side constants
    boundary: np.ndarray  # incoming boundary data, see DiscreteSystem


class SteadySolver(Protocol):
    system: DiscreteSystem

    def solve_fundamental(
        self, particular: np.ndarray, boundary: np.ndarray
    ) -> np.ndarray:
        ...

    def reconstruct(
        self,
        particular: np.ndarray,
        fundamental: np.ndarray,
        boundary: np.ndarray,
    ) -> np.ndarray:
        ...


class CompressedSolver:
    """
    Slow fundamental coefficients from the multilevel factorization of
    the projected interface conditions.
    """

    def __init__(
        self,
        system: DiscreteSystem,
        factorization: MultilevelFactorization,
        reconstruct_layers: bool = True,
        build=None,
    ):
        self.system = system
        self.factorization = factorization
        self.build = build
        self.reconstruct_layers = reconstruct_layers
        self.apply_seconds = 0.0
        self.apply_calls = 0

    def solve_fundamental(
        self, particular: np.ndarray, boundary: np.ndarray
    ) -> np.ndarray:
        system = self.system
        rhs = (
            system.rhs_particular @ particular.ravel()
            + system.rhs_boundary @ boundary
        )
        start = time.perf_counter()
        coordinates = apply_inverse(self.factorization, rhs)
        self.apply_seconds += time.perf_counter() - start
        self.apply_calls += 1
        modes = system.coordinates_to_modes @ coordinates
        return modes.reshape(system.n_cells, system.n_modes)

    def reconstruct(
        self,
        particular: np.ndarray,
        fundamental: np.ndarray,
        boundary: np.ndarray,
    ) -> np.ndarray:
        if not self.reconstruct_layers:
            return np.zeros_like(fundamental)
        system = self.system
        layer = (
            system.layer_particular @ particular.ravel()
            + system.layer_modes @ fundamental.ravel()
            + system.layer_boundary @ boundary
        )
        return layer.reshape(fundamental.shape)


def solve_particular(rhs: np.ndarray, system: DiscreteSystem) -> np.ndarray:
    """Per-cell constants v with A_C v = rhs_C."""
    values = system.collision_inverse @ np.asarray(rhs, dtype=float).ravel()
    return values.reshape(system.n_cells, system.n_directions)


def solve_with_particular(
    particular: np.ndarray,
    boundary: np.ndarray,
    solver: SteadySolver,
    t: float = 0.0,
    layers: bool = True,
) -> SolutionField:
    fundamental = solver.solve_fundamental(particular, boundary)
    if layers:
        layer = solver.reconstruct(particular, fundamental, boundary)
    else:
        layer = np.zeros_like(fundamental)
    return SolutionField(
        particular=particular, fundamental=fundamental, layer=layer, t=t
    )


def steady_solve(
    problem: SteadyProblem,
    solver: SteadySolver,
    t: float = 0.0,
    layers: bool = True,
) -> SolutionField:
    particular = solve_particular(problem.rhs, solver.system)
    return solve_with_particular(
        particular, problem.boundary, solver, t, layers=layers
    )


def reconstruct_layers(
    field: SolutionField, solver: SteadySolver, boundary: np.ndarray
) -> SolutionField:
    layer = solver.reconstruct(field.particular, field.fundamental, boundary)
    return SolutionField(
        particular=field.particular,
        fundamental=field.fundamental,
        layer=layer,
        t=field.t,
    )


def interface_residuals(
    field: SolutionField,
    system: DiscreteSystem,
    boundary: np.ndarray,
    include_layer: bool = True,
) -> Dict[int, np.ndarray]:
    """
    Unprojected residual at every fine interface midpoint: right/top
    minus left/bottom trace inside, incoming trace minus data on the
    boundary.
    """
    disc = system.disc
    modes = field.modes if include_layer else field.fundamental
    boundary_position = {
        j: index for index, j in enumerate(system.boundary_interfaces)
    }
    residuals = {}
    for proj in disc.projections:
        interface = proj.interface
        x, y = interface.midpoint

        def trace(cell):
            values = disc.bases[cell].values(x, y) @ modes[cell]
            return (field.particular[cell] + values)[proj.rows]

        if interface.is_boundary:
            index = boundary_position[interface.id]
            start = system.boundary_offsets[index]
            data = boundary[start:start + proj.n_rows]
            residuals[interface.id] = trace(interface.cells[0]) - data
        else:
            residuals[interface.id] = trace(interface.plus_cell) - trace(
                interface.minus_cell
            )
    return residuals


def projected_residuals(
    field: SolutionField, system: DiscreteSystem, boundary: np.ndarray
) -> Dict[int, np.ndarray]:
    residuals = interface_residuals(
        field, system, boundary, include_layer=False
    )
    return {
        j: project(system.disc.projections[j], residual)
        for j, residual in residuals.items()
    }
