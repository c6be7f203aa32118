"""
Per-level operators of the multilevel decomposition.

Rows at level 0 are ordered with all boundary rows first and the
interior jump rows after them; inside each group by fine interface id
and then by slow component. Rows at level l are the subsequence whose
interface lies on a level-l grid line. Jumps are right minus left at
vertical interfaces and top minus bottom at horizontal ones.
"""
import logging
from dataclasses import dataclass
from typing import List

import numpy as np
import scipy.sparse

from rte_tools.discretization import Discretization
from rte_tools.rsm.level_basis import LevelBasis


logger = logging.getLogger()


class RowLayout:
    def __init__(self, disc: Discretization):
        mesh = disc.mesh
        self.mesh = mesh
        self.sizes = np.array([p.n_slow for p in disc.projections], dtype=int)
        boundary = sorted(mesh.boundary_interfaces)
        interior = sorted(mesh.interior_interfaces(0))
        self.order = np.array(boundary + interior, dtype=int)
        self.offsets = np.zeros(mesh.n_interfaces, dtype=int)
        start = 0
        for j in self.order:
            self.offsets[j] = start
            start += self.sizes[j]
        self.n_rows = start
        interface_of_row = np.repeat(self.order, self.sizes[self.order])
        self.interface_of_row = interface_of_row
        lines = np.array([f.line for f in mesh.interfaces], dtype=int)
        self._line_of_row = lines[interface_of_row]

    def rows(self, level: int) -> np.ndarray:
        """Level-0 row indices that survive at level l, ascending."""
        return np.flatnonzero(self._line_of_row % (1 << level) == 0)

    def interface_rows(self, j: int) -> np.ndarray:
        return np.arange(self.offsets[j], self.offsets[j] + self.sizes[j])

    def positions(self, level: int, level0_rows: np.ndarray) -> np.ndarray:
        return np.searchsorted(self.rows(level), level0_rows)

    def removed_rows(self, level: int) -> np.ndarray:
        """Level-0 row indices of the jumps removed at level l >= 1."""
        return np.setdiff1d(self.rows(level - 1), self.rows(level))


@dataclass(frozen=True, slots=True, eq=False)
class LevelOperators:
    level: int
    B: scipy.sparse.csr_matrix
    P: scipy.sparse.csr_matrix
    Q: scipy.sparse.csr_matrix
    R: np.ndarray
    R_check: np.ndarray
    RBQ: scipy.sparse.csr_matrix

    @property
    def f_dimension(self) -> int:
        return self.B.shape[1]

    @property
    def g_dimension(self) -> int:
        return self.Q.shape[1]


def assemble_B(
    disc: Discretization, layout: RowLayout, basis: LevelBasis
) -> scipy.sparse.csr_matrix:
    """
    Boundary traces and interior projected jumps of the level-l basis,
    at constituent fine interfaces on level-l lines.
    """
    mesh = disc.mesh
    level = basis.level
    level_rows = layout.rows(level)
    data, row_index, column_index = [], [], []
    for cell in basis.cells:
        columns = basis.columns(cell.cell)
        for j, block in cell.traces.items():
            interface = mesh.interfaces[j]
            sign = 1.0
            if not interface.is_boundary:
                fine = mesh.touching_fine_cell(level, cell.cell, j)
                sign = 1.0 if fine == interface.plus_cell else -1.0
            rows = np.searchsorted(level_rows, layout.interface_rows(j))
            r, c = np.meshgrid(rows, columns, indexing="ij")
            data.append(sign * block.ravel())
            row_index.append(r.ravel())
            column_index.append(c.ravel())
    shape = (level_rows.size, basis.dimension)
    if not data:
        return scipy.sparse.csr_matrix(shape)
    matrix = scipy.sparse.csr_matrix(
        (
            np.concatenate(data),
            (np.concatenate(row_index), np.concatenate(column_index)),
        ),
        shape=shape,
    )
    matrix.eliminate_zeros()
    return matrix


def _prolongations(
    layout: RowLayout, fine: LevelBasis, coarse: LevelBasis
):
    level = fine.level
    removed = layout.removed_rows(level + 1)
    removed_positions = layout.positions(level, removed)
    p_data, p_rows, p_cols = [], [], []
    q_data, q_rows, q_cols = [], [], []
    for cell in coarse.cells:
        child_columns = np.concatenate(
            [fine.columns(child) for child in cell.children]
        )
        columns = coarse.columns(cell.cell)
        r, c = np.meshgrid(child_columns, columns, indexing="ij")
        p_data.append(cell.expansion.ravel())
        p_rows.append(r.ravel())
        p_cols.append(c.ravel())
        if cell.g_size:
            g_level0 = np.array(
                [
                    layout.offsets[j] + comp
                    for j, comp in cell.g_rows
                ],
                dtype=int,
            )
            g_columns = np.searchsorted(removed, g_level0)
            r, c = np.meshgrid(child_columns, g_columns, indexing="ij")
            q_data.append(cell.g_expansion.ravel())
            q_rows.append(r.ravel())
            q_cols.append(c.ravel())

    def to_csr(data, rows, cols, shape):
        if not data:
            return scipy.sparse.csr_matrix(shape)
        matrix = scipy.sparse.csr_matrix(
            (
                np.concatenate(data),
                (np.concatenate(rows), np.concatenate(cols)),
            ),
            shape=shape,
        )
        matrix.eliminate_zeros()
        return matrix

    P = to_csr(p_data, p_rows, p_cols, (fine.dimension, coarse.dimension))
    Q = to_csr(q_data, q_rows, q_cols, (fine.dimension, removed.size))
    return P, Q, removed_positions


def assemble_level_operators(
    disc: Discretization,
    layout: RowLayout,
    fine: LevelBasis,
    coarse: LevelBasis,
) -> LevelOperators:
    level = fine.level
    B = assemble_B(disc, layout, fine)
    P, Q, R_check = _prolongations(layout, fine, coarse)
    R = layout.positions(level, layout.rows(level + 1))
    RBQ = (B @ Q).tocsr()[R, :]
    RBQ.eliminate_zeros()
    logger.debug(
        f"Level {level} operators: B {B.shape} nnz={B.nnz}, "
        f"P nnz={P.nnz}, Q nnz={Q.nnz}"
    )
    return LevelOperators(
        level=level,
        B=B,
        P=P,
        Q=Q,
        R=R,
        R_check=R_check,
        RBQ=RBQ.tocsr(),
    )


def assemble_all(
    disc: Discretization, layout: RowLayout, level_bases: List[LevelBasis]
) -> List[LevelOperators]:
    return [
        assemble_level_operators(
            disc, layout, level_bases[level], level_bases[level + 1]
        )
        for level in range(len(level_bases) - 1)
    ]
