"""
Per-cell exponential fundamental solutions of the frozen-coefficient
transport operator, and the adaptive selection of slowly decaying modes.

Inside a cell with effective total cross section Sigma_t, every
function xi * exp(lambda * Sigma_t * (x - x_anchor)) with
D^{-1}(rho K W - I) xi = lambda xi is annihilated by the discrete
operator, and likewise in y with S in place of D.
"""
import logging
import threading
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, Tuple

import numpy as np
import scipy.linalg

from rte_tools.discretization.angular import KernelMatrix, QuadratureSet
from rte_tools.discretization.materials import CellOptics
from rte_tools.discretization.mesh import Edge
from rte_tools.exceptions import (
    ConfigurationError,
    DegenerateSpectrum,
    NonRealSpectrum,
    PointOutsideCell,
)


logger = logging.getLogger()

IMAGINARY_TOLERANCE = 1e-8
ZERO_EIGENVALUE = 1e-12
MIN_ABSORPTION = 1e-12


class Axis(str, Enum):
    X = "x"
    Y = "y"


@dataclass(frozen=True, slots=True, eq=False)
class EigenSystem:
    axis: Axis
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, unit max-norm


@dataclass(frozen=True, slots=True, eq=False)
class BasisFunction:
    cell: int
    axis: Axis
    anchor: Edge
    lam: float
    xi: np.ndarray
    Sigma_t: float
    bounds: Tuple[float, float, float, float]
    center_magnitude: float

    @property
    def anchor_coordinate(self) -> float:
        x0, x1, y0, y1 = self.bounds
        return {
            Edge.LEFT: x0,
            Edge.RIGHT: x1,
            Edge.BOTTOM: y0,
            Edge.TOP: y1,
        }[self.anchor]


@dataclass(frozen=True, slots=True, eq=False)
class LocalBasisSet:
    """
    The 8M fundamental solutions of one cell: the 4M x-modes in ascending
    eigenvalue order followed by the 4M y-modes. Arrays are indexed by the
    local mode number k.
    """

    cell: int
    bounds: Tuple[float, float, float, float]
    optics: CellOptics
    lambdas: np.ndarray
    xi: np.ndarray  # (4M, 8M)
    axes: Tuple[Axis, ...]
    anchors: Tuple[Edge, ...]
    center_magnitude: np.ndarray
    delta: float
    retained: np.ndarray
    retained_by_edge: Dict[Edge, np.ndarray]

    @property
    def size(self) -> int:
        return self.lambdas.size

    @property
    def h(self) -> float:
        return self.bounds[1] - self.bounds[0]

    @property
    def decay(self) -> np.ndarray:
        """|lambda| * Sigma_t for every mode."""
        return np.abs(self.lambdas) * self.optics.Sigma_t

    @property
    def discarded(self) -> np.ndarray:
        mask = np.ones(self.size, dtype=bool)
        mask[self.retained] = False
        return np.flatnonzero(mask)

    def anchored_at(self, edge: Edge) -> np.ndarray:
        return np.array(
            [k for k, anchor in enumerate(self.anchors) if anchor == edge],
            dtype=int,
        )

    def function(self, k: int) -> BasisFunction:
        return BasisFunction(
            cell=self.cell,
            axis=self.axes[k],
            anchor=self.anchors[k],
            lam=float(self.lambdas[k]),
            xi=self.xi[:, k],
            Sigma_t=self.optics.Sigma_t,
            bounds=self.bounds,
            center_magnitude=float(self.center_magnitude[k]),
        )

    @property
    def functions(self) -> Tuple[BasisFunction, ...]:
        return tuple(self.function(k) for k in range(self.size))

    def exponentials(self, x: float, y: float) -> np.ndarray:
        """exp(lambda Sigma_t (coordinate - anchor)) for every mode."""
        x0, x1, y0, y1 = self.bounds
        position = {
            Edge.LEFT: x - x0,
            Edge.RIGHT: x - x1,
            Edge.BOTTOM: y - y0,
            Edge.TOP: y - y1,
        }
        offset = np.array([position[edge] for edge in self.anchors])
        return np.exp(self.lambdas * self.optics.Sigma_t * offset)

    def values(self, x: float, y: float) -> np.ndarray:
        """(4M, 8M) matrix of all basis values at a point of the cell."""
        return self.xi * self.exponentials(x, y)[None, :]

    def averages(self) -> np.ndarray:
        """(4M, 8M) matrix of exact cell means of the basis functions."""
        return self.xi * exponential_means(self.decay * self.h)[None, :]

    def center_values(self) -> np.ndarray:
        return self.xi * self.center_magnitude[None, :]


def exponential_means(a: np.ndarray) -> np.ndarray:
    """Mean of exp(-a s) over s in [0, 1]: (1 - exp(-a)) / a."""
    a = np.asarray(a, dtype=float)
    means = np.ones_like(a)
    positive = a > 0.0
    means[positive] = -np.expm1(-a[positive]) / a[positive]
    return means


def _round_key(value: float) -> float:
    return float(f"{value:.12g}")


class _EigenCache:
    """Insert-or-get memo of eigen systems, safe for concurrent use."""

    def __init__(self):
        self._lock = threading.Lock()
        self._entries: Dict[tuple, Tuple[EigenSystem, EigenSystem]] = {}

    def get_or_compute(self, key, compute):
        with self._lock:
            if key in self._entries:
                return self._entries[key]
        value = compute()
        with self._lock:
            return self._entries.setdefault(key, value)

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)


EIGEN_CACHE = _EigenCache()


def transport_matrix(
    rho: float, quad: QuadratureSet, kernel: KernelMatrix, axis: Axis
) -> np.ndarray:
    """M_x = D^{-1}(rho K W - I) or M_y = S^{-1}(rho K W - I)."""
    scattering = rho * kernel.entries * quad.weights[None, :] - np.eye(
        quad.size
    )
    direction = quad.c if axis == Axis.X else quad.s
    return scattering / direction[:, None]


def axis_eigensystem(
    rho: float, quad: QuadratureSet, kernel: KernelMatrix, axis: Axis
) -> EigenSystem:
    matrix = transport_matrix(rho, quad, kernel, axis)
    eigenvalues, eigenvectors = scipy.linalg.eig(matrix)
    if np.max(np.abs(eigenvalues.imag)) > IMAGINARY_TOLERANCE:
        raise NonRealSpectrum(
            f"Complex eigenvalues for rho={rho}, g={kernel.g} on axis "
            f"{axis.value}: max imaginary part "
            f"{np.max(np.abs(eigenvalues.imag)):.3e}"
        )
    eigenvalues = eigenvalues.real
    eigenvectors = eigenvectors.real
    order = np.argsort(eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    eigenvectors = eigenvectors[:, order]
    # unit max-norm with the largest entry positive
    peak = eigenvectors[
        np.argmax(np.abs(eigenvectors), axis=0),
        np.arange(eigenvectors.shape[1]),
    ]
    eigenvectors = eigenvectors / peak[None, :]
    return EigenSystem(
        axis=axis, eigenvalues=eigenvalues, eigenvectors=eigenvectors
    )


def eigen_systems(
    optics: CellOptics, quad: QuadratureSet, kernel: KernelMatrix
) -> Tuple[EigenSystem, EigenSystem]:
    """
    Eigen systems of both axis matrices, memoized by quadrature, kernel
    and the rounded scattering ratio.
    """
    if optics.sigma_a_bar < MIN_ABSORPTION:
        raise DegenerateSpectrum(
            f"Cell {optics.cell} has sigma_a={optics.sigma_a_bar}; "
            "non-decaying modes are not supported"
        )
    key = (quad.key, _round_key(kernel.g), _round_key(optics.rho))

    def compute():
        systems = (
            axis_eigensystem(optics.rho, quad, kernel, Axis.X),
            axis_eigensystem(optics.rho, quad, kernel, Axis.Y),
        )
        smallest = min(np.min(np.abs(s.eigenvalues)) for s in systems)
        if smallest < ZERO_EIGENVALUE:
            logger.warning(
                f"Near-zero eigenvalue {smallest:.3e} for rho={optics.rho}"
            )
        logger.debug(f"Computed eigen systems for key {key}")
        return systems

    return EIGEN_CACHE.get_or_compute(key, compute)


def _partition(anchors, retained) -> Dict[Edge, np.ndarray]:
    return {
        edge: np.array(
            [k for k in retained if anchors[k] == edge], dtype=int
        )
        for edge in (Edge.LEFT, Edge.RIGHT, Edge.BOTTOM, Edge.TOP)
    }


def build_cell_basis(
    optics: CellOptics,
    x_sys: EigenSystem,
    y_sys: EigenSystem,
    bounds: Tuple[float, float, float, float],
    cell: int,
) -> LocalBasisSet:
    """All 8M fundamental solutions of a cell, nothing discarded yet."""
    lambdas = np.concatenate([x_sys.eigenvalues, y_sys.eigenvalues])
    xi = np.hstack([x_sys.eigenvectors, y_sys.eigenvectors])
    n = x_sys.eigenvalues.size
    axes = (Axis.X,) * n + (Axis.Y,) * n
    anchors = tuple(
        (Edge.LEFT if lam <= 0.0 else Edge.RIGHT)
        for lam in x_sys.eigenvalues
    ) + tuple(
        (Edge.BOTTOM if lam <= 0.0 else Edge.TOP)
        for lam in y_sys.eigenvalues
    )
    h = bounds[1] - bounds[0]
    center_magnitude = np.exp(-np.abs(lambdas) * optics.Sigma_t * h / 2.0)
    retained = np.arange(lambdas.size)
    return LocalBasisSet(
        cell=cell,
        bounds=bounds,
        optics=optics,
        lambdas=lambdas,
        xi=xi,
        axes=axes,
        anchors=anchors,
        center_magnitude=center_magnitude,
        delta=0.0,
        retained=retained,
        retained_by_edge=_partition(anchors, retained),
    )


def select_slow_basis(basis: LocalBasisSet, delta: float) -> LocalBasisSet:
    if delta < 0.0:
        raise ConfigurationError(
            "compression", [f"delta must be nonnegative, got {delta}"]
        )
    retained = np.flatnonzero(basis.center_magnitude > delta)
    return replace(
        basis,
        delta=float(delta),
        retained=retained,
        retained_by_edge=_partition(basis.anchors, retained),
    )


def evaluate_basis(f: BasisFunction, point: Tuple[float, float]) -> np.ndarray:
    x, y = point
    x0, x1, y0, y1 = f.bounds
    slack = 1e-12 * max(x1 - x0, 1.0)
    if not (
        x0 - slack <= x <= x1 + slack and y0 - slack <= y <= y1 + slack
    ):
        raise PointOutsideCell(
            f"Point {point} is outside cell {f.cell} with bounds {f.bounds}"
        )
    coordinate = x if f.axis == Axis.X else y
    offset = coordinate - f.anchor_coordinate
    return f.xi * np.exp(f.lam * f.Sigma_t * offset)


def apply_cell_operator(
    optics: CellOptics,
    quad: QuadratureSet,
    kernel: KernelMatrix,
    value: np.ndarray,
    dx: np.ndarray,
    dy: np.ndarray,
) -> np.ndarray:
    """
    Frozen-coefficient operator
    (1/eps)(C d_x + S d_y) psi + (sigma_T/eps^2) psi
    - (sigma_T/eps^2 - sigma_a) K W psi
    from pointwise value and derivatives.
    """
    eps = optics.epsilon_bar
    collision = optics.sigma_T_bar / eps**2
    scattering = collision - optics.sigma_a_bar
    return (
        (quad.c * dx + quad.s * dy) / eps
        + collision * value
        - scattering * (kernel.entries @ (quad.weights * value))
    )
