"""
Dyadic mesh hierarchy on the unit square.

Fine cells are numbered ix * I + iy. Fine interfaces carry one global id:
vertical interfaces on the line x = a * h have ids a * I + iy, horizontal
interfaces on the line y = c * h have ids (I + 1) * I + c * I + ix.
A level-l cell (X, Y) covers the fine cells with ix in [X * 2^l,
(X + 1) * 2^l) and similarly in y; it is numbered X * (I >> l) + Y.
Coarse interfaces are never materialized: a side of a level-l cell is
the ordered list of its 2^l constituent fine interfaces.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Dict, List, Tuple

import numpy as np

from rte_tools.exceptions import MeshError


logger = logging.getLogger()

COARSEST_CELL_COUNTS = (1, 2, 4)


class Edge(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    BOTTOM = "bottom"
    TOP = "top"

    @property
    def outward_normal(self) -> Tuple[float, float]:
        return {
            Edge.LEFT: (-1.0, 0.0),
            Edge.RIGHT: (1.0, 0.0),
            Edge.BOTTOM: (0.0, -1.0),
            Edge.TOP: (0.0, 1.0),
        }[self]


EDGES = (Edge.LEFT, Edge.RIGHT, Edge.BOTTOM, Edge.TOP)


class Orientation(str, Enum):
    VERTICAL = "vertical"
    HORIZONTAL = "horizontal"


@dataclass(frozen=True, slots=True)
class Interface:
    """
    A fine interface. minus_cell is the left (vertical) or bottom
    (horizontal) neighbour, plus_cell the other one; -1 marks a missing
    neighbour on the domain boundary.
    """

    id: int
    orientation: Orientation
    line: int
    position: int
    midpoint: Tuple[float, float]
    minus_cell: int
    plus_cell: int

    @property
    def is_boundary(self) -> bool:
        return self.minus_cell < 0 or self.plus_cell < 0

    @property
    def boundary_edge(self) -> Edge:
        """Side of the domain for a boundary interface."""
        if self.orientation == Orientation.VERTICAL:
            return Edge.LEFT if self.minus_cell < 0 else Edge.RIGHT
        return Edge.BOTTOM if self.minus_cell < 0 else Edge.TOP

    @property
    def cells(self) -> Tuple[int, ...]:
        return tuple(c for c in (self.minus_cell, self.plus_cell) if c >= 0)


class MeshHierarchy:
    def __init__(self, I: int, L: int):
        self.I = I
        self.L = L
        self.h = 1.0 / I
        self.interfaces = self._build_interfaces()

    def _build_interfaces(self) -> List[Interface]:
        I, h = self.I, self.h
        interfaces = []
        for a in range(I + 1):
            for iy in range(I):
                interfaces.append(
                    Interface(
                        id=a * I + iy,
                        orientation=Orientation.VERTICAL,
                        line=a,
                        position=iy,
                        midpoint=(a * h, (iy + 0.5) * h),
                        minus_cell=(a - 1) * I + iy if a > 0 else -1,
                        plus_cell=a * I + iy if a < I else -1,
                    )
                )
        for c in range(I + 1):
            for ix in range(I):
                interfaces.append(
                    Interface(
                        id=(I + 1) * I + c * I + ix,
                        orientation=Orientation.HORIZONTAL,
                        line=c,
                        position=ix,
                        midpoint=((ix + 0.5) * h, c * h),
                        minus_cell=ix * I + c - 1 if c > 0 else -1,
                        plus_cell=ix * I + c if c < I else -1,
                    )
                )
        return interfaces

    @property
    def n_cells(self) -> int:
        return self.I * self.I

    @property
    def n_interfaces(self) -> int:
        return len(self.interfaces)

    def cells_per_axis(self, level: int) -> int:
        return self.I >> level

    def cell_position(self, cell: int) -> Tuple[int, int]:
        return divmod(cell, self.I)

    def cell_bounds(self, cell: int) -> Tuple[float, float, float, float]:
        ix, iy = self.cell_position(cell)
        h = self.h
        return (ix * h, (ix + 1) * h, iy * h, (iy + 1) * h)

    def cell_center(self, cell: int) -> Tuple[float, float]:
        ix, iy = self.cell_position(cell)
        return ((ix + 0.5) * self.h, (iy + 0.5) * self.h)

    @cached_property
    def cell_centers(self) -> np.ndarray:
        ix, iy = np.divmod(np.arange(self.n_cells), self.I)
        return np.column_stack([(ix + 0.5) * self.h, (iy + 0.5) * self.h])

    def cell_edges(self, cell: int) -> Dict[Edge, int]:
        I = self.I
        ix, iy = self.cell_position(cell)
        horizontal = (I + 1) * I
        return {
            Edge.LEFT: ix * I + iy,
            Edge.RIGHT: (ix + 1) * I + iy,
            Edge.BOTTOM: horizontal + iy * I + ix,
            Edge.TOP: horizontal + (iy + 1) * I + ix,
        }

    def locate(self, x: float, y: float) -> int:
        """Fine cell containing a point of the closed unit square."""
        if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
            raise MeshError(f"Point ({x}, {y}) is outside the unit square")
        ix = min(int(x * self.I), self.I - 1)
        iy = min(int(y * self.I), self.I - 1)
        return ix * self.I + iy

    @cached_property
    def boundary_interfaces(self) -> List[int]:
        return [f.id for f in self.interfaces if f.is_boundary]

    def interfaces_on_level(self, level: int) -> List[int]:
        """I^(l): fine interfaces lying on level-l grid lines."""
        return [
            f.id for f in self.interfaces if f.line % (1 << level) == 0
        ]

    def interior_interfaces(self, level: int) -> List[int]:
        """I_in^(l)."""
        return [
            f.id
            for f in self.interfaces
            if not f.is_boundary and f.line % (1 << level) == 0
        ]

    def removed_interfaces(self, level: int) -> List[int]:
        """I_in^(l-1) minus I_in^(l), for l >= 1."""
        if not 1 <= level <= self.L:
            raise MeshError(f"No removed interfaces at level {level}")
        coarse, fine = 1 << level, 1 << (level - 1)
        return [
            f.id
            for f in self.interfaces
            if not f.is_boundary
            and f.line % fine == 0
            and f.line % coarse != 0
        ]

    def level_cell(self, level: int, X: int, Y: int) -> int:
        return X * self.cells_per_axis(level) + Y

    def level_cell_position(self, level: int, cell: int) -> Tuple[int, int]:
        return divmod(cell, self.cells_per_axis(level))

    def children(self, level: int, cell: int) -> List[int]:
        """
        The 4 level-(l-1) cells of a level-l cell, ordered
        (lower-left, upper-left, lower-right, upper-right).
        """
        if not 1 <= level <= self.L:
            raise MeshError(f"Level {level} cells have no children")
        X, Y = self.level_cell_position(level, cell)
        return [
            self.level_cell(level - 1, 2 * X + dx, 2 * Y + dy)
            for dx in (0, 1)
            for dy in (0, 1)
        ]

    def parent(self, level: int, cell: int) -> int:
        X, Y = self.level_cell_position(level, cell)
        return self.level_cell(level + 1, X // 2, Y // 2)

    def fine_cells(self, level: int, cell: int) -> List[int]:
        size = 1 << level
        X, Y = self.level_cell_position(level, cell)
        return [
            ix * self.I + iy
            for ix in range(X * size, (X + 1) * size)
            for iy in range(Y * size, (Y + 1) * size)
        ]

    def constituents(self, level: int, cell: int) -> Dict[Edge, List[int]]:
        """Fine interfaces making up each side of a level-l cell."""
        I = self.I
        size = 1 << level
        X, Y = self.level_cell_position(level, cell)
        horizontal = (I + 1) * I
        rows = range(Y * size, (Y + 1) * size)
        columns = range(X * size, (X + 1) * size)
        return {
            Edge.LEFT: [X * size * I + iy for iy in rows],
            Edge.RIGHT: [(X + 1) * size * I + iy for iy in rows],
            Edge.BOTTOM: [horizontal + Y * size * I + ix for ix in columns],
            Edge.TOP: [
                horizontal + (Y + 1) * size * I + ix for ix in columns
            ],
        }

    def touching_fine_cell(self, level: int, cell: int, interface: int) -> int:
        """
        The fine cell inside a level-l cell that is adjacent to one of its
        constituent fine interfaces.
        """
        fine = set(self.fine_cells(level, cell))
        for neighbour in self.interfaces[interface].cells:
            if neighbour in fine:
                return neighbour
        raise MeshError(
            f"Interface {interface} does not touch level-{level} cell {cell}"
        )

    def inner_interfaces(self, level: int, cell: int) -> List[int]:
        """
        Fine interfaces removed at level l that lie inside the given
        level-l cell, i.e. on the two level-(l-1) lines bisecting it.
        """
        size = 1 << level
        half = size >> 1
        I = self.I
        X, Y = self.level_cell_position(level, cell)
        horizontal = (I + 1) * I
        vertical_line = X * size + half
        horizontal_line = Y * size + half
        vertical = [
            vertical_line * I + iy for iy in range(Y * size, (Y + 1) * size)
        ]
        horizontal_ids = [
            horizontal + horizontal_line * I + ix
            for ix in range(X * size, (X + 1) * size)
        ]
        return sorted(vertical + horizontal_ids)

    def level_cell_of_fine(self, level: int, cell: int) -> int:
        ix, iy = self.cell_position(cell)
        return self.level_cell(level, ix >> level, iy >> level)


def build_hierarchy(I: int, L: int) -> MeshHierarchy:
    if L < 0 or I < 1:
        raise MeshError(f"Invalid mesh parameters I={I}, L={L}")
    coarsest, remainder = divmod(I, 1 << L)
    if remainder != 0 or coarsest not in COARSEST_CELL_COUNTS:
        raise MeshError(
            f"I={I} is not I_L * 2^L with I_L in "
            f"{COARSEST_CELL_COUNTS} for L={L}"
        )
    mesh = MeshHierarchy(I, L)
    logger.debug(
        f"Built mesh hierarchy I={I}, L={L}, coarsest {coarsest} per axis"
    )
    return mesh


def levels_for(I: int, coarsest: int = 2) -> int:
    """Number of coarsening levels reaching the requested coarsest size."""
    if coarsest not in COARSEST_CELL_COUNTS or I < coarsest:
        raise MeshError(f"Cannot coarsen I={I} to {coarsest} cells per axis")
    L, size = 0, I
    while size > coarsest:
        if size % 2:
            raise MeshError(f"I={I} is not dyadic")
        size //= 2
        L += 1
    if size != coarsest:
        raise MeshError(f"I={I} does not coarsen to {coarsest}")
    return L
