"""
Property checks run by the verify command. Every check reports a
measured residual next to the tolerance it must meet.
"""
import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from rte_tools.discretization import Discretization, discretize
from rte_tools.discretization.angular import (
    build_quadrature,
    discrete_kernel,
)
from rte_tools.discretization.interface_projection import project
from rte_tools.discretization.materials import CellOptics, builtin_fields
from rte_tools.discretization.mesh import EDGES, build_hierarchy
from rte_tools.discretization.tfps_basis import (
    Axis,
    apply_cell_operator,
    axis_eigensystem,
    build_cell_basis,
)
from rte_tools.oracle import FullOrderSolver, full_order_steady_solve
from rte_tools.rsm import RsmBuild, build_factorization
from rte_tools.rsm.factorization import DenseInverse, apply_inverse
from rte_tools.rsm.level_basis import raw_coefficients, to_level0
from rte_tools.solver import assemble_solver
from rte_tools.solver.field import SolutionField
from rte_tools.solver.steady import SteadyProblem, steady_solve


logger = logging.getLogger()

EIGEN_TOLERANCE = 1e-10
KERNEL_TOLERANCE = 1e-9
ORACLE_INVERSE_TOLERANCE = 1e-9
ORACLE_FIELD_TOLERANCE = 1e-8
SPLIT_TOLERANCE = 1e-9
RECOVERY_TOLERANCE = 1e-10
TWO_LEVEL_TOLERANCE = 1e-8

# (n_polar, n_azimuth) pairs with M <= 3
EIGEN_QUADRATURES = ((1, 1), (2, 1), (1, 2), (3, 1), (1, 3))


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tolerance)

    def __str__(self) -> str:
        status = "ok" if self.passed else "FAILED"
        return (
            f"[{status}] {self.suite}/{self.name}: {self.value:.3e} "
            f"(tolerance {self.tolerance:.0e})"
        )


def _relative(error: np.ndarray, reference: np.ndarray) -> float:
    scale = max(np.linalg.norm(reference), np.finfo(float).tiny)
    return float(np.linalg.norm(error) / scale)


def build_case(
    I: int,
    L: int,
    n_polar: int,
    n_azimuth: int,
    delta: float,
    material: str = "constant",
    params: dict = None,
    g: float = 0.0,
    threads: int = 1,
) -> Discretization:
    quad = build_quadrature(n_polar, n_azimuth)
    return discretize(
        build_hierarchy(I, L),
        builtin_fields(material, params),
        quad,
        discrete_kernel(quad, g),
        delta,
        threads=threads,
    )


def eigen_checks(seed: int = 0, draws: int = 20) -> List[CheckResult]:
    """
    Eigen residuals, +/- pairing of the spectra and the operator residual
    of every basis function at random points, for random cell optics.
    """
    rng = np.random.default_rng(seed)
    eigen, pairing, kernel_residual = 0.0, 0.0, 0.0
    for _ in range(draws):
        n_polar, n_azimuth = EIGEN_QUADRATURES[
            rng.integers(len(EIGEN_QUADRATURES))
        ]
        quad = build_quadrature(n_polar, n_azimuth)
        kernel = discrete_kernel(quad, 0.0)
        optics = CellOptics.from_means(
            sigma_T_bar=rng.uniform(0.5, 2.0),
            sigma_a_bar=rng.uniform(0.1, 1.0),
            epsilon_bar=10.0 ** rng.uniform(-2.0, 0.0),
        )
        systems = [
            axis_eigensystem(optics.rho, quad, kernel, axis)
            for axis in (Axis.X, Axis.Y)
        ]
        for axis, system in zip((Axis.X, Axis.Y), systems):
            direction = quad.c if axis == Axis.X else quad.s
            scattering = optics.rho * kernel.entries * quad.weights[
                None, :
            ] - np.eye(quad.size)
            # D (M xi - lambda xi) avoids amplifying by 1/c
            residual = (
                scattering @ system.eigenvectors
                - direction[:, None]
                * system.eigenvectors
                * system.eigenvalues[None, :]
            )
            eigen = max(eigen, float(np.max(np.abs(residual))))
            lambdas = system.eigenvalues
            scale = max(np.max(np.abs(lambdas)), 1.0)
            mismatch = np.max(np.abs(lambdas + lambdas[::-1])) / scale
            pairing = max(pairing, float(mismatch))

        h = rng.uniform(0.01, 0.5)
        x0, y0 = rng.uniform(0.0, 1.0 - h, size=2)
        bounds = (x0, x0 + h, y0, y0 + h)
        basis = build_cell_basis(optics, *systems, bounds, cell=0)
        collision = optics.sigma_T_bar / optics.epsilon_bar**2
        for x, y in zip(
            rng.uniform(x0, x0 + h, size=5), rng.uniform(y0, y0 + h, size=5)
        ):
            values = basis.values(x, y)
            rates = basis.lambdas * optics.Sigma_t
            is_x = np.array([axis == Axis.X for axis in basis.axes])
            dx = values * np.where(is_x, rates, 0.0)[None, :]
            dy = values * np.where(is_x, 0.0, rates)[None, :]
            for k in range(basis.size):
                applied = apply_cell_operator(
                    optics, quad, kernel, values[:, k], dx[:, k], dy[:, k]
                )
                magnitude = max(np.max(np.abs(values[:, k])), 1e-300)
                kernel_residual = max(
                    kernel_residual,
                    float(
                        np.max(np.abs(applied)) / (collision * magnitude)
                    ),
                )
    return [
        CheckResult("eigen", "eigen_residual", eigen, EIGEN_TOLERANCE),
        CheckResult("eigen", "pairing", pairing, EIGEN_TOLERANCE),
        CheckResult(
            "eigen", "operator_residual", kernel_residual, KERNEL_TOLERANCE
        ),
    ]


def dimension_checks(build: RsmBuild, label: str) -> List[CheckResult]:
    """|F^(l-1)| = |F^(l)| + |G^(l)| at every level."""
    f = build.factorization.f_dimensions
    g = build.factorization.g_dimensions
    mismatch = max(
        (
            abs(f[level - 1] - f[level] - g[level - 1])
            for level in range(1, len(f))
        ),
        default=0,
    )
    return [CheckResult("dimensions", label, float(mismatch), 0.0)]


def midpoint_values(field: SolutionField, disc: Discretization) -> np.ndarray:
    """Flux at every fine interface midpoint, from each adjacent cell."""
    values = []
    for interface in disc.mesh.interfaces:
        x, y = interface.midpoint
        for cell in interface.cells:
            basis_values = disc.bases[cell].values(x, y)
            values.append(
                field.particular[cell] + basis_values @ field.modes[cell]
            )
    return np.concatenate(values)


def oracle_checks(
    I: int, L: int, seed: int = 0, threads: int = 1
) -> List[CheckResult]:
    """
    Multilevel inverse against a dense LU of the level-0 operator, and
    the full pipeline at delta = 0 against the dense full-order solve.
    """
    rng = np.random.default_rng(seed)
    disc = build_case(
        I, L, 1, 1, 0.0, params={"epsilon": 0.5}, threads=threads
    )
    solver = assemble_solver(disc, threads=threads)
    build = solver.build
    fact = build.factorization
    if fact.L:
        level0_matrix = build.operators[0].B
    else:
        level0_matrix = fact.coarse_matrix
    v = rng.standard_normal(fact.size)
    dense = DenseInverse(level0_matrix).solve(v)
    inverse_error = _relative(apply_inverse(fact, v) - dense, dense)

    system = solver.system
    problem = SteadyProblem(
        rhs=rng.standard_normal((system.n_cells, system.n_directions)),
        boundary=rng.standard_normal(system.boundary_size),
    )
    compressed = steady_solve(problem, solver)
    reference = full_order_steady_solve(problem, FullOrderSolver(disc))
    expected = midpoint_values(reference, disc)
    field_error = _relative(
        midpoint_values(compressed, disc) - expected, expected
    )
    label = f"I={I},L={L}"
    return [
        CheckResult(
            "oracle",
            f"apply_inverse[{label}]",
            inverse_error,
            ORACLE_INVERSE_TOLERANCE,
        ),
        CheckResult(
            "oracle",
            f"midpoint_field[{label}]",
            field_error,
            ORACLE_FIELD_TOLERANCE,
        ),
    ] + dimension_checks(build, label)


def _outer_columns(build: RsmBuild, level: int) -> np.ndarray:
    """Level-(l-1) columns holding the level-l coordinates, in order."""
    fine = build.level_bases[level - 1]
    coarse = build.level_bases[level]
    columns = np.zeros(coarse.dimension, dtype=int)
    for cell in coarse.cells:
        child_columns = np.concatenate(
            [fine.columns(child) for child in cell.children]
        )
        columns[coarse.columns(cell.cell)] = child_columns[cell.outer]
    return columns


def split_residual(build: RsmBuild, level: int, rng) -> float:
    """f = P f|_coarse + Q (jumps of f) for random f in F^(l-1)."""
    op = build.operators[level - 1]
    x = rng.standard_normal(op.f_dimension)
    coarse = x[_outer_columns(build, level)]
    jumps = (op.B @ x)[op.R_check]
    return _relative(x - op.P @ coarse - op.Q @ jumps, x)


def localization_residual(
    disc: Discretization, build: RsmBuild, level: int
) -> float:
    """G functions of a level-l cell vanish in every other fine cell."""
    op = build.operators[level - 1]
    coarse = build.level_bases[level]
    worst = 0.0
    columns = op.Q.tocsc()
    removed = build.layout.removed_rows(level)
    for cell in coarse.cells:
        inside = np.zeros(disc.mesh.n_cells, dtype=bool)
        inside[disc.mesh.fine_cells(level, cell.cell)] = True
        for j, comp in cell.g_rows:
            column = int(
                np.searchsorted(removed, build.layout.offsets[j] + comp)
            )
            coordinates = to_level0(
                build.level_bases,
                level - 1,
                columns[:, column].toarray().ravel(),
            )
            coefficients = raw_coefficients(
                disc, build.level_bases[0], coordinates
            )
            outside = np.abs(coefficients[~inside])
            worst = max(worst, float(np.max(outside, initial=0.0)))
    return worst


def recovery_residual(disc: Discretization, build: RsmBuild, rng) -> float:
    """Retained coefficients are recovered from their level-0 coordinates."""
    worst = 0.0
    for cell_basis in build.level0.cells:
        cell = cell_basis.cell
        basis = disc.bases[cell]
        coefficients = rng.standard_normal(basis.retained.size)
        edges = disc.mesh.cell_edges(cell)
        coordinates = []
        for edge in EDGES:
            proj = disc.projections[edges[edge]]
            x, y = proj.interface.midpoint
            values = basis.values(x, y)[:, basis.retained] @ coefficients
            coordinates.append(
                project(proj, proj.restrict(values))[
                    proj.own_components(cell)
                ]
            )
        recovered = cell_basis.expansion @ np.concatenate(coordinates)
        worst = max(worst, _relative(recovered - coefficients, coefficients))
    return worst


def two_level_residual(build: RsmBuild, level: int, rng) -> float:
    """Recursive inverse from level l against a dense LU of B_l."""
    op = build.operators[level]
    v = rng.standard_normal(op.B.shape[0])
    dense = DenseInverse(op.B).solve(v)
    recursive = apply_inverse(build.factorization, v, start_level=level)
    return _relative(recursive - dense, dense)


def nested_checks(
    I: int, L: int, delta: float, seed: int = 0, threads: int = 1
) -> List[CheckResult]:
    """Nested-space properties in a diffusive constant medium."""
    rng = np.random.default_rng(seed)
    disc = build_case(
        I, L, 1, 1, delta, params={"epsilon": 1e-3}, threads=threads
    )
    build = build_factorization(disc, threads=threads)
    label = f"I={I},L={L},delta={delta:g}"
    results = [
        CheckResult(
            "nested",
            f"recovery[{label}]",
            recovery_residual(disc, build, rng),
            RECOVERY_TOLERANCE,
        )
    ]
    for level in range(1, L + 1):
        results.append(
            CheckResult(
                "nested",
                f"split[{label},l={level}]",
                split_residual(build, level, rng),
                SPLIT_TOLERANCE,
            )
        )
        results.append(
            CheckResult(
                "nested",
                f"localization[{label},l={level}]",
                localization_residual(disc, build, level),
                0.0,
            )
        )
    for level in range(L):
        results.append(
            CheckResult(
                "nested",
                f"two_level[{label},l={level}]",
                two_level_residual(build, level, rng),
                TWO_LEVEL_TOLERANCE,
            )
        )
    return results + dimension_checks(build, label)


def run_verification(
    max_I: int = 16, seed: int = 0, threads: int = 1
) -> List[CheckResult]:
    results = eigen_checks(seed)
    for I, L in ((4, 1), (8, 1), (8, 2)):
        if I <= max_I:
            results.extend(oracle_checks(I, L, seed, threads))
    nested_I = 8 if max_I >= 8 else 4
    nested_L = 2 if nested_I == 8 else 1
    for delta in (0.0, 1e-3):
        results.extend(nested_checks(nested_I, nested_L, delta, seed, threads))
    for result in results:
        logger.info(str(result))
    return results
