"""
Discrete ordinates on the unit disc and the discretized scattering kernel.

Directions are ordered quadrant by quadrant with sign patterns
(+,+), (-,+), (-,-), (+,-); inside a quadrant by polar node and then
by azimuth. Index m therefore equals
quadrant * M + polar * n_azimuth + azimuth.
"""
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from rte_tools.exceptions import KernelError, QuadratureError


logger = logging.getLogger()

QUADRANT_SIGNS = np.array([[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]])


@dataclass(frozen=True, slots=True, eq=False)
class QuadratureSet:
    n_polar: int
    n_azimuth: int
    c: np.ndarray
    s: np.ndarray
    weights: np.ndarray

    @property
    def M(self) -> int:
        return self.n_polar * self.n_azimuth

    @property
    def size(self) -> int:
        return 4 * self.M

    @property
    def key(self) -> Tuple[int, int]:
        return (self.n_polar, self.n_azimuth)

    @property
    def directions(self) -> np.ndarray:
        return np.column_stack([self.c, self.s])

    def incoming(self, normal: Tuple[float, float]) -> np.ndarray:
        """
        Indices of the directions entering the domain through a boundary
        with the given outward normal.
        """
        return np.flatnonzero(
            normal[0] * self.c + normal[1] * self.s < 0.0
        )

    def mirror(self, flip_c: bool, flip_s: bool) -> np.ndarray:
        """
        Permutation p with directions[p[m]] equal to directions[m] after
        the requested sign flips.
        """
        quadrant_of = {
            (1.0, 1.0): 0, (-1.0, 1.0): 1, (-1.0, -1.0): 2, (1.0, -1.0): 3
        }
        permutation = np.empty(self.size, dtype=int)
        for quadrant, (sign_c, sign_s) in enumerate(QUADRANT_SIGNS):
            target = quadrant_of[
                (
                    -sign_c if flip_c else sign_c,
                    -sign_s if flip_s else sign_s,
                )
            ]
            permutation[quadrant * self.M:(quadrant + 1) * self.M] = (
                np.arange(self.M) + target * self.M
            )
        return permutation


@dataclass(frozen=True, slots=True, eq=False)
class KernelMatrix:
    g: float
    entries: np.ndarray

    @property
    def is_isotropic(self) -> bool:
        return self.g == 0.0


def build_quadrature(n_polar: int, n_azimuth: int) -> QuadratureSet:
    """
    Product rule of Gauss-Legendre polar cosines on (0, 1) and midpoint
    azimuths, mirrored into the four quadrants. Weights sum to one.
    """
    if n_polar < 1 or n_azimuth < 1:
        raise QuadratureError(
            "n_polar and n_azimuth must both be positive, "
            f"got ({n_polar}, {n_azimuth})"
        )
    nodes, gauss_weights = np.polynomial.legendre.leggauss(n_polar)
    mu = 0.5 * (nodes + 1.0)
    gauss_weights = 0.5 * gauss_weights
    phi = (2.0 * np.arange(1, n_azimuth + 1) - 1.0) * np.pi / (
        4.0 * n_azimuth
    )
    radius = np.sqrt(1.0 - mu**2)
    c_quadrant = np.outer(radius, np.cos(phi)).ravel()
    s_quadrant = np.outer(radius, np.sin(phi)).ravel()
    w_quadrant = np.repeat(gauss_weights / (4.0 * n_azimuth), n_azimuth)

    c = np.concatenate([sign_c * c_quadrant for sign_c, _ in QUADRANT_SIGNS])
    s = np.concatenate([sign_s * s_quadrant for _, sign_s in QUADRANT_SIGNS])
    weights = np.tile(w_quadrant, 4)
    logger.debug(
        f"Built quadrature with {c.size} directions "
        f"(n_polar={n_polar}, n_azimuth={n_azimuth})"
    )
    return QuadratureSet(
        n_polar=n_polar, n_azimuth=n_azimuth, c=c, s=s, weights=weights
    )


def henyey_greenstein(quad: QuadratureSet, g: float) -> np.ndarray:
    """
    Raw Henyey-Greenstein values on the direction pairs, using the
    in-plane dot product of the projected ordinates.
    """
    dot = np.outer(quad.c, quad.c) + np.outer(quad.s, quad.s)
    return (1.0 - g**2) / (1.0 + g**2 - 2.0 * g * dot) ** 1.5


def discrete_kernel(quad: QuadratureSet, g: float) -> KernelMatrix:
    if not -1.0 < g < 1.0:
        raise KernelError(f"Anisotropy factor must satisfy |g| < 1, got {g}")
    if g == 0.0:
        return KernelMatrix(g=0.0, entries=np.ones((quad.size, quad.size)))
    raw = henyey_greenstein(quad, g)
    entries = raw / (raw @ quad.weights)[:, None]
    return KernelMatrix(g=float(g), entries=entries)


def scalar_flux(quad: QuadratureSet, angular: np.ndarray) -> np.ndarray:
    """Weighted sum over the last (direction) axis."""
    return angular @ quad.weights
