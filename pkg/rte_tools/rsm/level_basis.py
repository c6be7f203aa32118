"""
Nested bases of the spaces F^(l) and G^(l).

A function supported in a level-l cell C is described by its coordinates:
the own-side components of its projected traces at the fine interfaces
on the boundary of C. For an interface j on the boundary of C these are
the slow components that belong to the modes of the fine cell inside C
adjacent to j. The F^(l) basis of C is dual to these coordinates and is
continuous, in the projected sense, across every fine interface inside
C. The G^(l) basis of C has zero coordinates and unit projected jump at
exactly one removed interface component inside C.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg

from rte_tools._utils import parallel_map
from rte_tools.discretization import Discretization
from rte_tools.discretization.interface_projection import project
from rte_tools.discretization.mesh import EDGES, MeshHierarchy
from rte_tools.exceptions import MeshError, SingularLocalSystem


logger = logging.getLogger()

MAX_CONDITION = 1e12


@dataclass(frozen=True, slots=True, eq=False)
class CellBasis:
    """
    Basis functions of one level-l cell.

    expansion maps the cell's coordinates to coefficients one level
    down: raw retained mode coefficients at level 0, the concatenated
    coordinates of the four children above. g_expansion does the same
    for the G functions, whose order follows g_rows.
    """

    level: int
    cell: int
    interfaces: np.ndarray
    components: np.ndarray
    traces: Dict[int, np.ndarray]
    expansion: np.ndarray
    children: Tuple[int, ...] = ()
    outer: Optional[np.ndarray] = None
    g_expansion: Optional[np.ndarray] = None
    g_rows: Optional[np.ndarray] = None  # (n_G, 2) of (interface, comp)

    @property
    def size(self) -> int:
        return self.interfaces.size

    @property
    def g_size(self) -> int:
        return 0 if self.g_rows is None else self.g_rows.shape[0]


@dataclass(frozen=True, slots=True, eq=False)
class LevelBasis:
    level: int
    cells: List[CellBasis]
    offsets: np.ndarray  # column offset of each cell, plus the total

    @property
    def dimension(self) -> int:
        return int(self.offsets[-1])

    @property
    def g_dimension(self) -> int:
        return sum(cell.g_size for cell in self.cells)

    def columns(self, cell: int) -> np.ndarray:
        return np.arange(self.offsets[cell], self.offsets[cell + 1])


def _offsets(cells: List[CellBasis]) -> np.ndarray:
    return np.concatenate([[0], np.cumsum([c.size for c in cells])]).astype(
        int
    )


def _check_condition(matrix: np.ndarray, what: str) -> None:
    if matrix.size == 0:
        return
    condition = np.linalg.cond(matrix)
    if not condition <= MAX_CONDITION:
        raise SingularLocalSystem(
            f"{what} has condition number {condition:.3e}"
        )


def level_coordinates(
    disc: Discretization, level: int, cell: int
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Canonical coordinate order of a level-l cell: edges left, right,
    bottom, top; constituent fine interfaces along each edge; own slow
    components in ascending order.
    """
    mesh = disc.mesh
    interfaces, components = [], []
    for edge in EDGES:
        for j in mesh.constituents(level, cell)[edge]:
            fine = mesh.touching_fine_cell(level, cell, j)
            own = disc.projections[j].own_components(fine)
            interfaces.extend([j] * own.size)
            components.extend(own.tolist())
    return np.array(interfaces, dtype=int), np.array(components, dtype=int)


def _level0_cell(disc: Discretization, cell: int) -> CellBasis:
    mesh = disc.mesh
    basis = disc.bases[cell]
    retained = basis.retained
    edges = mesh.cell_edges(cell)
    projected, own_rows = {}, []
    for edge in EDGES:
        j = edges[edge]
        proj = disc.projections[j]
        x, y = proj.interface.midpoint
        values = basis.values(x, y)[:, retained]
        projected[j] = project(proj, proj.restrict(values))
        own_rows.append(projected[j][proj.own_components(cell)])
    trace_matrix = np.vstack(own_rows)
    _check_condition(trace_matrix, f"Trace system of cell {cell}")
    if trace_matrix.size:
        dual = scipy.linalg.solve(trace_matrix, np.eye(retained.size))
    else:
        dual = np.zeros((0, 0))
    interfaces, components = level_coordinates(disc, 0, cell)
    return CellBasis(
        level=0,
        cell=cell,
        interfaces=interfaces,
        components=components,
        traces={j: block @ dual for j, block in projected.items()},
        expansion=dual,
    )


def build_level0_basis(disc: Discretization, threads: int = 1) -> LevelBasis:
    cells = parallel_map(
        lambda cell: _level0_cell(disc, cell),
        range(disc.mesh.n_cells),
        threads,
    )
    logger.debug(f"Level 0 basis with {sum(c.size for c in cells)} columns")
    return LevelBasis(level=0, cells=cells, offsets=_offsets(cells))


def _lift_cell(
    disc: Discretization, previous: LevelBasis, level: int, cell: int
) -> CellBasis:
    mesh: MeshHierarchy = disc.mesh
    children = mesh.children(level, cell)
    child_bases = [previous.cells[child] for child in children]
    child_offsets = np.concatenate(
        [[0], np.cumsum([child.size for child in child_bases])]
    ).astype(int)
    n_unknowns = int(child_offsets[-1])

    position = {}
    for index, child in enumerate(child_bases):
        for local, key in enumerate(zip(child.interfaces, child.components)):
            position[key] = child_offsets[index] + local

    interfaces, components = level_coordinates(disc, level, cell)
    outer = np.array(
        [position[key] for key in zip(interfaces, components)], dtype=int
    )
    inner = np.setdiff1d(np.arange(n_unknowns), outer)

    def child_of(fine_cell: int) -> int:
        return children.index(mesh.level_cell_of_fine(level - 1, fine_cell))

    jump_blocks, g_rows = [], []
    for j in mesh.inner_interfaces(level, cell):
        interface = disc.projections[j].interface
        block = np.zeros((disc.projections[j].n_slow, n_unknowns))
        for fine_cell, sign in (
            (interface.plus_cell, 1.0),
            (interface.minus_cell, -1.0),
        ):
            index = child_of(fine_cell)
            columns = slice(child_offsets[index], child_offsets[index + 1])
            block[:, columns] += sign * child_bases[index].traces[j]
        jump_blocks.append(block)
        g_rows.extend((j, comp) for comp in range(block.shape[0]))
    jumps = np.vstack(jump_blocks) if jump_blocks else np.zeros(
        (0, n_unknowns)
    )

    jumps_inner = jumps[:, inner]
    _check_condition(
        jumps_inner, f"Lift system of level-{level} cell {cell}"
    )
    n_inner = inner.size
    if n_inner:
        right_hand = np.hstack([-jumps[:, outer], np.eye(n_inner)])
        solution = scipy.linalg.solve(jumps_inner, right_hand)
    else:
        solution = np.zeros((0, outer.size))

    expansion = np.zeros((n_unknowns, outer.size))
    expansion[outer, np.arange(outer.size)] = 1.0
    expansion[inner, :] = solution[:, : outer.size]
    g_expansion = np.zeros((n_unknowns, n_inner))
    g_expansion[inner, :] = solution[:, outer.size:]

    traces = {}
    for edge in EDGES:
        for j in mesh.constituents(level, cell)[edge]:
            index = child_of(mesh.touching_fine_cell(level, cell, j))
            rows = slice(child_offsets[index], child_offsets[index + 1])
            traces[j] = child_bases[index].traces[j] @ expansion[rows, :]

    return CellBasis(
        level=level,
        cell=cell,
        interfaces=interfaces,
        components=components,
        traces=traces,
        expansion=expansion,
        children=tuple(children),
        outer=outer,
        g_expansion=g_expansion,
        g_rows=np.array(g_rows, dtype=int).reshape(-1, 2),
    )


def lift_basis(
    disc: Discretization, previous: LevelBasis, level: int, threads: int = 1
) -> LevelBasis:
    """
    F and G functions of every level-l cell, from one local solve with
    multiple right-hand sides per cell.
    """
    if level != previous.level + 1:
        raise MeshError(
            f"Cannot lift level {previous.level} to level {level}"
        )
    cells = parallel_map(
        lambda cell: _lift_cell(disc, previous, level, cell),
        range(disc.mesh.cells_per_axis(level) ** 2),
        threads,
    )
    result = LevelBasis(level=level, cells=cells, offsets=_offsets(cells))
    logger.debug(
        f"Level {level} basis: |F|={result.dimension}, "
        f"|G|={result.g_dimension}"
    )
    return result


def lift_F_basis(
    disc: Discretization, previous: LevelBasis, level: int, threads: int = 1
) -> List[np.ndarray]:
    """
    Per level-l cell, the F functions as columns of child coordinates:
    unit level-l coordinates, zero projected jumps inside the cell.
    """
    lifted = lift_basis(disc, previous, level, threads)
    return [cell.expansion for cell in lifted.cells]


def lift_G_basis(
    disc: Discretization, previous: LevelBasis, level: int, threads: int = 1
) -> List[np.ndarray]:
    """
    Per level-l cell, the G functions as columns of child coordinates:
    unit projected jump at one removed (interface, component), zero
    level-l coordinates. Column order follows CellBasis.g_rows.
    """
    lifted = lift_basis(disc, previous, level, threads)
    return [cell.g_expansion for cell in lifted.cells]


def build_level_bases(
    disc: Discretization, threads: int = 1
) -> List[LevelBasis]:
    bases = [build_level0_basis(disc, threads)]
    for level in range(1, disc.mesh.L + 1):
        bases.append(lift_basis(disc, bases[-1], level, threads))
    return bases


def to_level0(
    level_bases: List[LevelBasis], level: int, coordinates: np.ndarray
) -> np.ndarray:
    """Level-0 coordinates of a level-l function given by coordinates."""
    values = np.asarray(coordinates, dtype=float)
    for current in range(level, 0, -1):
        values = prolong(level_bases, current, values)
    return values


def prolong(
    level_bases: List[LevelBasis], level: int, coordinates: np.ndarray
) -> np.ndarray:
    """Level-(l-1) coordinates of a function given at level l."""
    fine = level_bases[level - 1]
    coarse = level_bases[level]
    result = np.zeros(fine.dimension)
    for cell in coarse.cells:
        block = coordinates[coarse.columns(cell.cell)]
        child_columns = np.concatenate(
            [fine.columns(child) for child in cell.children]
        )
        result[child_columns] += cell.expansion @ block
    return result


def raw_coefficients(
    disc: Discretization, level0: LevelBasis, coordinates: np.ndarray
) -> np.ndarray:
    """(n_cells, 8M) mode coefficients of a level-0 coordinate vector."""
    coefficients = np.zeros((disc.mesh.n_cells, disc.modes_per_cell))
    for cell in level0.cells:
        retained = disc.bases[cell.cell].retained
        coefficients[cell.cell, retained] = (
            cell.expansion @ coordinates[level0.columns(cell.cell)]
        )
    return coefficients
