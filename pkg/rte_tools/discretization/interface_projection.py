"""
Mode spaces at fine interfaces and the projection onto their slow part.

At an interior interface the columns are the retained modes anchored
there, first those of the left/bottom cell, then those of the right/top
cell, orthogonalized and rescaled to unit max-norm, followed by the
discarded modes anchored there. Boundary interfaces work on the incoming
direction components only.
"""
import logging
from dataclasses import dataclass
from typing import Mapping, Tuple

import numpy as np
import scipy.linalg

from rte_tools.discretization.angular import QuadratureSet
from rte_tools.discretization.mesh import Edge, Interface, Orientation
from rte_tools.discretization.tfps_basis import LocalBasisSet
from rte_tools.exceptions import DimensionMismatch, RankDeficient


logger = logging.getLogger()

ORTHOGONALIZATION_FLOOR = 1e-12
MAX_CONDITION = 1e12


@dataclass(frozen=True, slots=True, eq=False)
class InterfaceProjection:
    interface: Interface
    rows: np.ndarray
    slow_owner: np.ndarray  # (n_slow, 2) rows of (cell, k)
    fast_owner: np.ndarray  # (n_fast, 2)
    n_minus_slow: int
    slow_raw: np.ndarray
    chi_slow: np.ndarray
    chi_fast: np.ndarray
    full_matrix: np.ndarray
    factorization: Tuple[np.ndarray, np.ndarray]
    V_delta_i: np.ndarray

    @property
    def sides(self) -> int:
        return 1 if self.interface.is_boundary else 2

    @property
    def n_rows(self) -> int:
        return self.rows.size

    @property
    def n_slow(self) -> int:
        return self.chi_slow.shape[1]

    def own_components(self, cell: int) -> np.ndarray:
        """Positions of the slow components belonging to one side."""
        if cell == self.interface.minus_cell:
            return np.arange(self.n_minus_slow)
        if cell == self.interface.plus_cell:
            return np.arange(self.n_minus_slow, self.n_slow)
        raise DimensionMismatch(
            f"Cell {cell} is not adjacent to interface {self.interface.id}"
        )

    def restrict(self, values: np.ndarray) -> np.ndarray:
        """Components of full 4M vectors used by this interface."""
        return values[self.rows]


def modified_gram_schmidt(columns: np.ndarray) -> np.ndarray:
    """
    Orthonormal columns spanning the input, one reorthogonalization
    pass per column.
    """
    n_rows, n_columns = columns.shape
    basis = np.zeros((n_rows, n_columns))
    for j in range(n_columns):
        vector = columns[:, j].astype(float).copy()
        for _ in range(2):
            for i in range(j):
                vector -= (basis[:, i] @ vector) * basis[:, i]
        norm = np.linalg.norm(vector)
        if norm < ORTHOGONALIZATION_FLOOR:
            raise RankDeficient(
                f"Slow column {j} is dependent on the previous ones "
                f"(residual norm {norm:.3e})"
            )
        basis[:, j] = vector / norm
    return basis


def _anchor_edges(interface: Interface) -> Tuple[Edge, Edge]:
    """Edge of the minus and plus cell that coincides with the interface."""
    if interface.orientation == Orientation.VERTICAL:
        return Edge.RIGHT, Edge.LEFT
    return Edge.TOP, Edge.BOTTOM


def build_projection(
    interface: Interface,
    bases: Mapping[int, LocalBasisSet],
    quad: QuadratureSet,
) -> InterfaceProjection:
    if interface.is_boundary:
        rows = quad.incoming(interface.boundary_edge.outward_normal)
    else:
        rows = np.arange(quad.size)

    minus_edge, plus_edge = _anchor_edges(interface)
    slow_owner, fast_owner = [], []
    slow_columns, fast_columns = [], []
    n_minus_slow = 0
    for cell, edge in (
        (interface.minus_cell, minus_edge),
        (interface.plus_cell, plus_edge),
    ):
        if cell < 0:
            continue
        basis = bases[cell]
        anchored = basis.anchored_at(edge)
        retained = np.intersect1d(anchored, basis.retained_by_edge[edge])
        discarded = np.setdiff1d(anchored, retained)
        for k in retained:
            slow_owner.append((cell, k))
            slow_columns.append(basis.xi[rows, k])
        for k in discarded:
            fast_owner.append((cell, k))
            fast_columns.append(basis.xi[rows, k])
        if cell == interface.minus_cell:
            n_minus_slow = retained.size

    n_rows = rows.size
    slow_raw = np.zeros((n_rows, 0))
    if slow_columns:
        slow_raw = np.column_stack(slow_columns)
    chi_fast = np.zeros((n_rows, 0))
    if fast_columns:
        chi_fast = np.column_stack(fast_columns)
    orthonormal = modified_gram_schmidt(slow_raw)
    if orthonormal.shape[1]:
        chi_slow = orthonormal / np.max(np.abs(orthonormal), axis=0)
    else:
        chi_slow = orthonormal
    full_matrix = np.hstack([chi_slow, chi_fast])
    if full_matrix.shape != (n_rows, n_rows):
        raise RankDeficient(
            f"Interface {interface.id} has {full_matrix.shape[1]} anchored "
            f"modes for {n_rows} components"
        )
    condition = np.linalg.cond(full_matrix)
    if not condition <= MAX_CONDITION:
        raise RankDeficient(
            f"Mode space at interface {interface.id} has condition number "
            f"{condition:.3e}"
        )

    slow_owner = np.array(slow_owner, dtype=int).reshape(-1, 2)
    fast_owner = np.array(fast_owner, dtype=int).reshape(-1, 2)
    n_modes = 2 * quad.size
    return InterfaceProjection(
        interface=interface,
        rows=rows,
        slow_owner=slow_owner,
        fast_owner=fast_owner,
        n_minus_slow=n_minus_slow,
        slow_raw=slow_raw,
        chi_slow=chi_slow,
        chi_fast=chi_fast,
        full_matrix=full_matrix,
        factorization=scipy.linalg.lu_factor(full_matrix),
        V_delta_i=slow_owner[:, 0] * n_modes + slow_owner[:, 1],
    )


def expand(proj: InterfaceProjection, values: np.ndarray) -> np.ndarray:
    """Coefficients of values in the full [chi_slow | chi_fast] basis."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] != proj.n_rows:
        raise DimensionMismatch(
            f"Interface {proj.interface.id} expects {proj.n_rows} "
            f"components, got {values.shape[0]}"
        )
    return scipy.linalg.lu_solve(proj.factorization, values)


def project(proj: InterfaceProjection, values: np.ndarray) -> np.ndarray:
    return expand(proj, values)[: proj.n_slow]
