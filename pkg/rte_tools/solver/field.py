from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from rte_tools.discretization import Discretization


@dataclass(frozen=True, slots=True, eq=False)
class SolutionField:
    """
    Piecewise-constant particular part plus fundamental mode coefficients.
    fundamental holds the slow (or, for full-order solves, all) modes;
    layer holds the reconstructed fast modes and is zero elsewhere.
    """

    particular: np.ndarray  # (n_cells, 4M)
    fundamental: np.ndarray  # (n_cells, 8M)
    layer: np.ndarray  # (n_cells, 8M)
    t: float = 0.0

    @classmethod
    def zeros(cls, n_cells: int, n_directions: int, t: float = 0.0):
        return cls(
            particular=np.zeros((n_cells, n_directions)),
            fundamental=np.zeros((n_cells, 2 * n_directions)),
            layer=np.zeros((n_cells, 2 * n_directions)),
            t=t,
        )

    @property
    def modes(self) -> np.ndarray:
        return self.fundamental + self.layer

    def at_time(self, t: float) -> "SolutionField":
        return replace(self, t=t)

    def blend(self, other: "SolutionField", weight: float) -> "SolutionField":
        """(1 - weight) * self + weight * other."""
        return SolutionField(
            particular=(1 - weight) * self.particular
            + weight * other.particular,
            fundamental=(1 - weight) * self.fundamental
            + weight * other.fundamental,
            layer=(1 - weight) * self.layer + weight * other.layer,
            t=other.t,
        )


def evaluate(
    field: SolutionField,
    disc: Discretization,
    point: Tuple[float, float],
    cell: int = None,
) -> np.ndarray:
    """Angular flux at a point; cell picks the side on cell edges."""
    x, y = point
    if cell is None:
        cell = disc.mesh.locate(x, y)
    values = disc.bases[cell].values(x, y)
    return field.particular[cell] + values @ field.modes[cell]


def center_values(field: SolutionField, system) -> np.ndarray:
    """(n_cells, 4M) angular flux at the cell centers."""
    values = field.particular.ravel() + system.centers @ field.modes.ravel()
    return values.reshape(field.particular.shape)


def cell_means(field: SolutionField, system) -> np.ndarray:
    values = field.particular.ravel() + system.averages @ field.modes.ravel()
    return values.reshape(field.particular.shape)


def center_grid(field: SolutionField, system) -> np.ndarray:
    """(I, I, 4M) cell-center samples indexed [ix, iy, m]."""
    I = system.disc.mesh.I
    return center_values(field, system).reshape(I, I, -1)
