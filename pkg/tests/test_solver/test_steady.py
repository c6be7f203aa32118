import numpy as np
import pytest

from rte_tools.oracle.checks import build_case
from rte_tools.solver import assemble_solver
from rte_tools.solver.field import (
    SolutionField,
    center_values,
    cell_means,
    evaluate,
)
from rte_tools.solver.steady import (
    SteadyProblem,
    interface_residuals,
    projected_residuals,
    reconstruct_layers,
    solve_particular,
    steady_solve,
)


SIGMA_T = 1.0
SIGMA_A = 0.5
PHI = 1.7


@pytest.fixture(scope="module")
def full_solver():
    disc = build_case(
        4,
        1,
        1,
        1,
        0.0,
        params={"sigma_T": SIGMA_T, "sigma_a": SIGMA_A, "epsilon": 0.5},
    )
    return assemble_solver(disc)


@pytest.fixture(scope="module")
def compressed_solver():
    disc = build_case(8, 2, 1, 1, 1e-3, params={"epsilon": 1e-3})
    return assemble_solver(disc)


def _random_problem(system, seed=0) -> SteadyProblem:
    rng = np.random.default_rng(seed)
    return SteadyProblem(
        rhs=rng.standard_normal((system.n_cells, system.n_directions)),
        boundary=rng.standard_normal(system.boundary_size),
    )


def test_particular_part_inverts_the_collision_matrix(full_solver):
    system = full_solver.system
    rhs = _random_problem(system).rhs
    particular = solve_particular(rhs, system)
    assert particular.shape == rhs.shape
    recovered = (system.collision @ particular.ravel()).reshape(rhs.shape)
    assert np.allclose(recovered, rhs, atol=1e-10)


def test_constant_equilibrium_has_no_fundamental_part(full_solver):
    system = full_solver.system
    problem = SteadyProblem(
        rhs=np.full((system.n_cells, system.n_directions), SIGMA_A * PHI),
        boundary=np.full(system.boundary_size, PHI),
    )
    field = steady_solve(problem, full_solver)
    assert np.allclose(field.particular, PHI, atol=1e-10)
    assert np.allclose(field.fundamental, 0.0, atol=1e-10)
    assert np.allclose(center_values(field, system), PHI, atol=1e-10)
    assert np.allclose(cell_means(field, system), PHI, atol=1e-10)


def test_zero_data_gives_zero_field(full_solver):
    system = full_solver.system
    field = steady_solve(
        SteadyProblem(
            rhs=np.zeros((system.n_cells, system.n_directions)),
            boundary=np.zeros(system.boundary_size),
        ),
        full_solver,
    )
    assert not np.any(field.particular)
    assert np.allclose(field.modes, 0.0)


def test_uncompressed_solve_is_continuous(full_solver):
    system = full_solver.system
    problem = _random_problem(system)
    field = steady_solve(problem, full_solver)
    residuals = interface_residuals(field, system, problem.boundary)
    assert len(residuals) == len(system.disc.projections)
    scale = np.linalg.norm(problem.boundary) + np.linalg.norm(problem.rhs)
    for residual in residuals.values():
        assert np.max(np.abs(residual)) <= 1e-9 * scale


def test_compressed_solve_meets_projected_conditions(compressed_solver):
    system = compressed_solver.system
    problem = _random_problem(system, seed=3)
    field = steady_solve(problem, compressed_solver)
    scale = np.linalg.norm(problem.boundary) + np.linalg.norm(problem.rhs)
    for j, residual in projected_residuals(
        field, system, problem.boundary
    ).items():
        assert residual.shape == (system.disc.projections[j].n_slow,)
        assert np.max(np.abs(residual), initial=0.0) <= 1e-8 * scale


def test_fundamental_part_only_uses_retained_modes(compressed_solver):
    system = compressed_solver.system
    field = steady_solve(_random_problem(system, seed=4), compressed_solver)
    for cell, basis in enumerate(system.disc.bases):
        discarded = np.setdiff1d(np.arange(system.n_modes), basis.retained)
        assert not np.any(field.fundamental[cell, discarded])


def test_layers_only_fill_discarded_modes(compressed_solver):
    system = compressed_solver.system
    field = steady_solve(_random_problem(system, seed=5), compressed_solver)
    for cell, basis in enumerate(system.disc.bases):
        assert not np.any(field.layer[cell, basis.retained])


def test_reconstruction_can_be_switched_off(compressed_solver):
    system = compressed_solver.system
    problem = _random_problem(system, seed=6)
    plain = assemble_solver(system.disc, reconstruct=False)
    field = steady_solve(problem, plain)
    assert not np.any(field.layer)

    restored = reconstruct_layers(field, compressed_solver, problem.boundary)
    expected = steady_solve(problem, compressed_solver)
    assert np.allclose(restored.fundamental, field.fundamental)
    assert np.allclose(restored.layer, expected.layer, atol=1e-12)


def test_evaluate_matches_center_values(compressed_solver):
    system = compressed_solver.system
    field = steady_solve(_random_problem(system, seed=7), compressed_solver)
    centers = center_values(field, system)
    mesh = system.disc.mesh
    for cell in (0, mesh.n_cells // 2 + 3, mesh.n_cells - 1):
        x, y = mesh.cell_centers[cell]
        assert np.allclose(
            evaluate(field, system.disc, (x, y)), centers[cell]
        )


def test_blend_is_affine():
    first = SolutionField.zeros(2, 4)
    second = SolutionField(
        particular=np.ones((2, 4)),
        fundamental=np.full((2, 8), 2.0),
        layer=np.full((2, 8), 4.0),
        t=0.5,
    )
    blended = first.blend(second, 0.25)
    assert np.allclose(blended.particular, 0.25)
    assert np.allclose(blended.fundamental, 0.5)
    assert np.allclose(blended.modes, 1.5)
    assert blended.t == 0.5
