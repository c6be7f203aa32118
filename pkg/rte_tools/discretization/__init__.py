import logging
from dataclasses import dataclass
from typing import List

from rte_tools._utils import parallel_map
from rte_tools.discretization.angular import KernelMatrix, QuadratureSet
from rte_tools.discretization.interface_projection import (
    InterfaceProjection,
    build_projection,
)
from rte_tools.discretization.materials import (
    CellOptics,
    MaterialField,
    cell_average,
)
from rte_tools.discretization.mesh import MeshHierarchy
from rte_tools.discretization.tfps_basis import (
    LocalBasisSet,
    build_cell_basis,
    eigen_systems,
    select_slow_basis,
)


logger = logging.getLogger()


@dataclass(frozen=True, slots=True, eq=False)
class Discretization:
    """Everything per cell and per fine interface for one threshold."""

    mesh: MeshHierarchy
    quad: QuadratureSet
    kernel: KernelMatrix
    field: MaterialField
    delta: float
    optics: List[CellOptics]
    bases: List[LocalBasisSet]
    projections: List[InterfaceProjection]

    @property
    def modes_per_cell(self) -> int:
        return 2 * self.quad.size

    @property
    def retained_count(self) -> int:
        return sum(basis.retained.size for basis in self.bases)

    @property
    def rank_ratio(self) -> float:
        return self.retained_count / (
            self.modes_per_cell * len(self.bases)
        )


def discretize(
    mesh: MeshHierarchy,
    field: MaterialField,
    quad: QuadratureSet,
    kernel: KernelMatrix,
    delta: float,
    threads: int = 1,
) -> Discretization:
    """
    Cell optics, selected local bases and interface projections for a
    mesh. Per-cell and per-interface work is spread over threads.
    """

    def cell_basis(cell: int):
        bounds = mesh.cell_bounds(cell)
        optics = cell_average(field, bounds, cell=cell)
        x_sys, y_sys = eigen_systems(optics, quad, kernel)
        basis = build_cell_basis(optics, x_sys, y_sys, bounds, cell)
        return optics, select_slow_basis(basis, delta)

    results = parallel_map(cell_basis, range(mesh.n_cells), threads)
    optics = [optics for optics, _ in results]
    bases = [basis for _, basis in results]
    projections = parallel_map(
        lambda interface: build_projection(interface, bases, quad),
        mesh.interfaces,
        threads,
    )
    discretization = Discretization(
        mesh=mesh,
        quad=quad,
        kernel=kernel,
        field=field,
        delta=delta,
        optics=optics,
        bases=bases,
        projections=projections,
    )
    logger.info(
        f"Discretized I={mesh.I} with delta={delta}: "
        f"{discretization.retained_count} retained modes, rank ratio "
        f"{discretization.rank_ratio:.4f}"
    )
    return discretization
