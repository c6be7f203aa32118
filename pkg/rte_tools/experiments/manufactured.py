"""
Manufactured solution of the isotropic semi-discrete problem with
constant coefficients. The reference is
psi = t/(1+t) (1 + eps x) xi exp(lambda (sqrt(3)/2 x + y/2)),
with (lambda, xi) the negative eigenpair of smallest magnitude of
((sqrt(3)/2) C + S/2)^{-1} ((sigma_T/eps - eps sigma_a) W - (sigma_T/eps) I),
and the source is whatever makes psi an exact solution.
"""
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg

from rte_tools.discretization.angular import (
    KernelMatrix,
    QuadratureSet,
    discrete_kernel,
)
from rte_tools.discretization.materials import CellOptics
from rte_tools.exceptions import NonRealSpectrum, SingularSystem


logger = logging.getLogger()

IMAGINARY_TOLERANCE = 1e-10
DIRECTION = (np.sqrt(3.0) / 2.0, 0.5)


@dataclass(frozen=True, slots=True, eq=False)
class ManufacturedCase:
    sigma_T: float
    sigma_a: float
    epsilon: float
    quad: QuadratureSet
    kernel: KernelMatrix
    lam_min: float
    xi_min: np.ndarray

    @property
    def optics(self) -> CellOptics:
        return CellOptics.from_means(
            self.sigma_T, self.sigma_a, self.epsilon
        )

    def envelope(self, x, y) -> np.ndarray:
        return np.exp(self.lam_min * (DIRECTION[0] * x + DIRECTION[1] * y))


def manufactured_matrix(
    sigma_T: float, sigma_a: float, epsilon: float, quad: QuadratureSet
) -> np.ndarray:
    streaming = DIRECTION[0] * quad.c + DIRECTION[1] * quad.s
    if np.min(np.abs(streaming)) < 1e-12:
        raise SingularSystem(
            "An ordinate is orthogonal to the manufactured direction"
        )
    W = np.tile(quad.weights, (quad.size, 1))
    collision = sigma_T / epsilon
    scattering = collision - epsilon * sigma_a
    return (scattering * W - collision * np.eye(quad.size)) / streaming[
        :, None
    ]


def build_manufactured_case(
    sigma_T: float, sigma_a: float, epsilon: float, quad: QuadratureSet
) -> ManufacturedCase:
    matrix = manufactured_matrix(sigma_T, sigma_a, epsilon, quad)
    eigenvalues, eigenvectors = scipy.linalg.eig(matrix)
    candidates = np.flatnonzero(
        (eigenvalues.real < 0.0)
        & (np.abs(eigenvalues.imag) <= IMAGINARY_TOLERANCE)
    )
    if candidates.size == 0:
        raise NonRealSpectrum(
            f"No real negative eigenvalue for sigma_T={sigma_T}, "
            f"sigma_a={sigma_a}, epsilon={epsilon}"
        )
    # ties go to the lowest index
    index = candidates[np.argmin(np.abs(eigenvalues[candidates].real))]
    xi = eigenvectors[:, index].real
    xi = xi / xi[np.argmax(np.abs(xi))]
    case = ManufacturedCase(
        sigma_T=float(sigma_T),
        sigma_a=float(sigma_a),
        epsilon=float(epsilon),
        quad=quad,
        kernel=discrete_kernel(quad, 0.0),
        lam_min=float(eigenvalues[index].real),
        xi_min=xi,
    )
    logger.debug(
        f"Manufactured case eps={epsilon}, M={quad.M}: "
        f"lambda_min={case.lam_min:.6g}"
    )
    return case


def manufactured_reference(case: ManufacturedCase, x, y, t) -> np.ndarray:
    """(..., 4M) reference angular flux at points (x, y) and time t."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    profile = (t / (1.0 + t)) * (1.0 + case.epsilon * x) * case.envelope(x, y)
    return profile[..., None] * case.xi_min


def source(case: ManufacturedCase, x, y, t) -> np.ndarray:
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    envelope = case.envelope(x, y)[..., None]
    growth = (1.0 + case.epsilon * x)[..., None] * case.xi_min / (
        1.0 + t
    ) ** 2
    streaming = (t / (1.0 + t)) * case.quad.c * case.xi_min
    return (growth + streaming) * envelope


def reference_derivatives(
    case: ManufacturedCase, x: float, y: float, t: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic d/dt, d/dx and d/dy of the reference at one point."""
    envelope = float(case.envelope(x, y))
    growth = 1.0 + case.epsilon * x
    factor = t / (1.0 + t)
    dt = growth * envelope * case.xi_min / (1.0 + t) ** 2
    dx = factor * envelope * case.xi_min * (
        case.epsilon + growth * case.lam_min * DIRECTION[0]
    )
    dy = factor * envelope * case.xi_min * growth * case.lam_min * (
        DIRECTION[1]
    )
    return dt, dx, dy
