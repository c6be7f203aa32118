"""
Sparse linear maps shared by every steady solve on one discretization.

Vectors are flattened cell by cell: particular parts have 4M entries per
cell, mode coefficients 8M per cell. Boundary data holds the incoming
components at the midpoint of each boundary fine interface, interfaces
in ascending id order.
"""
import logging
import threading
from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np
import scipy.linalg
import scipy.sparse

from rte_tools.discretization import Discretization
from rte_tools.discretization.materials import CellOptics, gauss_points
from rte_tools.exceptions import SingularCellSystem
from rte_tools.rsm.level_basis import LevelBasis
from rte_tools.rsm.operators import RowLayout


logger = logging.getLogger()

MAX_CELL_CONDITION = 1e12

AngularFunction = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


def collision_matrix(optics: CellOptics, quad, kernel) -> np.ndarray:
    """A_C = (sigma_T/eps^2) I - (sigma_T/eps^2 - sigma_a) K W."""
    collision = optics.sigma_T_bar / optics.epsilon_bar**2
    scattering = collision - optics.sigma_a_bar
    return collision * np.eye(quad.size) - scattering * (
        kernel.entries * quad.weights[None, :]
    )


class _CellSystemCache:
    def __init__(self):
        self._lock = threading.Lock()
        self._entries: Dict[tuple, np.ndarray] = {}

    def inverse(self, optics: CellOptics, quad, kernel) -> np.ndarray:
        key = (
            quad.key,
            kernel.g,
            float(f"{optics.sigma_T_bar:.12g}"),
            float(f"{optics.sigma_a_bar:.12g}"),
            float(f"{optics.epsilon_bar:.12g}"),
        )
        with self._lock:
            if key in self._entries:
                return self._entries[key]
        matrix = collision_matrix(optics, quad, kernel)
        condition = np.linalg.cond(matrix)
        if not condition <= MAX_CELL_CONDITION:
            raise SingularCellSystem(
                f"Cell {optics.cell} collision matrix has condition number "
                f"{condition:.3e}"
            )
        inverse = scipy.linalg.inv(matrix)
        with self._lock:
            return self._entries.setdefault(key, inverse)


CELL_SYSTEMS = _CellSystemCache()


def _coo(data, rows, cols, shape) -> scipy.sparse.csr_matrix:
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


class _Blocks:
    def __init__(self):
        self.data, self.rows, self.cols = [], [], []

    def add(self, block: np.ndarray, rows: np.ndarray, cols: np.ndarray):
        if block.size == 0:
            return
        r, c = np.meshgrid(rows, cols, indexing="ij")
        self.data.append(block.ravel())
        self.rows.append(r.ravel())
        self.cols.append(c.ravel())

    def build(self, shape) -> scipy.sparse.csr_matrix:
        return _coo(self.data, self.rows, self.cols, shape)


@dataclass(frozen=True, slots=True, eq=False)
class DiscreteSystem:
    disc: Discretization
    layout: RowLayout
    collision: scipy.sparse.csr_matrix
    collision_inverse: scipy.sparse.csr_matrix
    rhs_particular: scipy.sparse.csr_matrix
    rhs_boundary: scipy.sparse.csr_matrix
    coordinates_to_modes: scipy.sparse.csr_matrix
    layer_particular: scipy.sparse.csr_matrix
    layer_modes: scipy.sparse.csr_matrix
    layer_boundary: scipy.sparse.csr_matrix
    averages: scipy.sparse.csr_matrix
    centers: scipy.sparse.csr_matrix
    boundary_interfaces: np.ndarray
    boundary_offsets: np.ndarray
    boundary_rows: np.ndarray
    boundary_points: np.ndarray

    @property
    def n_cells(self) -> int:
        return self.disc.mesh.n_cells

    @property
    def n_directions(self) -> int:
        return self.disc.quad.size

    @property
    def n_modes(self) -> int:
        return self.disc.modes_per_cell

    @property
    def boundary_size(self) -> int:
        return int(self.boundary_offsets[-1])

    def sample_boundary(self, function: AngularFunction, t: float):
        """Incoming components of function(x, y, t) at boundary midpoints."""
        x, y = self.boundary_points.T
        values = np.asarray(function(x, y, t), dtype=float)
        values = np.broadcast_to(
            values, (self.boundary_interfaces.size, self.n_directions)
        )
        blocks = [
            values[index, self.boundary_rows[index]]
            for index in range(self.boundary_interfaces.size)
        ]
        return np.concatenate(blocks) if blocks else np.zeros(0)

    def sample_centers(self, function: AngularFunction, t: float):
        centers = self.disc.mesh.cell_centers
        values = np.asarray(function(centers[:, 0], centers[:, 1], t))
        return np.broadcast_to(
            values, (self.n_cells, self.n_directions)
        ).copy()

    def sample_averages(self, function: AngularFunction, t: float):
        """Cell means of function(x, y, t) by 3 x 3 Gauss quadrature."""
        mesh = self.disc.mesh
        points = [
            gauss_points(mesh.cell_bounds(cell))
            for cell in range(mesh.n_cells)
        ]
        x = np.concatenate([p[0] for p in points])
        y = np.concatenate([p[1] for p in points])
        weights = points[0][2]
        values = np.broadcast_to(
            np.asarray(function(x, y, t), dtype=float),
            (x.size, self.n_directions),
        )
        values = values.reshape(mesh.n_cells, weights.size, -1)
        return np.einsum("q,cqm->cm", weights, values)


def build_system(
    disc: Discretization,
    layout: RowLayout,
    level0: Optional[LevelBasis] = None,
) -> DiscreteSystem:
    """
    Without a level-0 basis the coordinate map is left empty; full-order
    solves work on raw mode coefficients and never use it.
    """
    mesh = disc.mesh
    quad = disc.quad
    n_dir = quad.size
    n_modes = disc.modes_per_cell
    n_cells = mesh.n_cells

    collision, collision_inverse = _Blocks(), _Blocks()
    averages, centers = _Blocks(), _Blocks()
    coordinates = _Blocks()
    for cell in range(n_cells):
        basis = disc.bases[cell]
        direction_rows = cell * n_dir + np.arange(n_dir)
        mode_columns = cell * n_modes + np.arange(n_modes)
        inverse = CELL_SYSTEMS.inverse(disc.optics[cell], quad, disc.kernel)
        collision.add(
            collision_matrix(disc.optics[cell], quad, disc.kernel),
            direction_rows,
            direction_rows,
        )
        collision_inverse.add(inverse, direction_rows, direction_rows)
        averages.add(basis.averages(), direction_rows, mode_columns)
        centers.add(basis.center_values(), direction_rows, mode_columns)
        if level0 is not None:
            coordinates.add(
                level0.cells[cell].expansion,
                cell * n_modes + basis.retained,
                level0.columns(cell),
            )

    boundary_interfaces = np.array(sorted(mesh.boundary_interfaces), dtype=int)
    boundary_rows = np.array(
        [disc.projections[j].rows for j in boundary_interfaces]
    ).reshape(boundary_interfaces.size, -1)
    boundary_offsets = np.concatenate(
        [[0], np.cumsum([rows.size for rows in boundary_rows])]
    ).astype(int)
    boundary_index = {j: i for i, j in enumerate(boundary_interfaces)}

    rhs_particular, rhs_boundary = _Blocks(), _Blocks()
    layer_particular, layer_modes, layer_boundary = (
        _Blocks(),
        _Blocks(),
        _Blocks(),
    )
    for proj in disc.projections:
        interface = proj.interface
        j = interface.id
        inverse = scipy.linalg.lu_solve(
            proj.factorization, np.eye(proj.n_rows)
        )
        slow = inverse[: proj.n_slow]
        fast = inverse[proj.n_slow:]
        rows = layout.interface_rows(j)

        # residual = sum over sides of sign * restrict(v + E f) - [bdry] psi
        sides = []
        if interface.minus_cell >= 0:
            sides.append((interface.minus_cell, -1.0))
        if interface.plus_cell >= 0:
            sides.append((interface.plus_cell, 1.0))
        if interface.is_boundary:
            sides = [(interface.cells[0], 1.0)]

        # fast coefficient owners: cancel the residual at the interface
        fast_rows = proj.fast_owner[:, 0] * n_modes + proj.fast_owner[:, 1]
        owner_sign = np.where(
            (proj.fast_owner[:, 0] == interface.plus_cell)
            | interface.is_boundary,
            -1.0,
            1.0,
        )
        signed_fast = owner_sign[:, None] * fast

        x, y = interface.midpoint
        for cell, sign in sides:
            direction_columns = cell * n_dir + proj.rows
            rhs_particular.add(-sign * slow, rows, direction_columns)
            layer_particular.add(
                sign * signed_fast, fast_rows, direction_columns
            )
            traces = disc.bases[cell].values(x, y)[proj.rows, :]
            layer_modes.add(
                sign * signed_fast @ traces,
                fast_rows,
                cell * n_modes + np.arange(n_modes),
            )
        if interface.is_boundary:
            start = boundary_offsets[boundary_index[j]]
            data_columns = np.arange(start, start + proj.n_rows)
            rhs_boundary.add(slow, rows, data_columns)
            layer_boundary.add(-signed_fast, fast_rows, data_columns)

    particular_size = n_cells * n_dir
    mode_size = n_cells * n_modes
    boundary_size = int(boundary_offsets[-1])
    system = DiscreteSystem(
        disc=disc,
        layout=layout,
        collision=collision.build((particular_size, particular_size)),
        collision_inverse=collision_inverse.build(
            (particular_size, particular_size)
        ),
        rhs_particular=rhs_particular.build((layout.n_rows, particular_size)),
        rhs_boundary=rhs_boundary.build((layout.n_rows, boundary_size)),
        coordinates_to_modes=coordinates.build(
            (mode_size, 0 if level0 is None else level0.dimension)
        ),
        layer_particular=layer_particular.build((mode_size, particular_size)),
        layer_modes=layer_modes.build((mode_size, mode_size)),
        layer_boundary=layer_boundary.build((mode_size, boundary_size)),
        averages=averages.build((particular_size, mode_size)),
        centers=centers.build((particular_size, mode_size)),
        boundary_interfaces=boundary_interfaces,
        boundary_offsets=boundary_offsets,
        boundary_rows=boundary_rows,
        boundary_points=np.array(
            [mesh.interfaces[j].midpoint for j in boundary_interfaces]
        ),
    )
    logger.debug(
        f"Assembled solver maps: {layout.n_rows} interface rows, "
        f"{boundary_size} boundary values"
    )
    return system
