import numpy as np
import pytest

from rte_tools.exceptions import SizeGuard
from rte_tools.oracle import (
    FullOrderSolver,
    check_size,
    full_order_steady_solve,
)
from rte_tools.oracle.checks import (
    CheckResult,
    build_case,
    eigen_checks,
    nested_checks,
    midpoint_values,
    oracle_checks,
)
from rte_tools.solver.steady import SteadyProblem


@pytest.fixture(scope="module")
def oracle_solver():
    disc = build_case(
        4,
        1,
        1,
        1,
        0.0,
        params={"sigma_T": 1.0, "sigma_a": 0.5, "epsilon": 0.5},
    )
    return FullOrderSolver(disc)


def test_check_result_reports_failures():
    ok = CheckResult("oracle", "inverse", 1e-12, 1e-9)
    failed = CheckResult("oracle", "inverse", 1e-6, 1e-9)
    nan = CheckResult("oracle", "inverse", float("nan"), 1e-9)
    assert ok.passed
    assert not failed.passed
    assert not nan.passed
    assert str(ok).startswith("[ok] oracle/inverse")
    assert str(failed).startswith("[FAILED]")


def test_size_guard():
    disc = build_case(2, 0, 2, 2, 0.0)
    assert disc.quad.M == 4
    with pytest.raises(SizeGuard):
        FullOrderSolver(disc)
    small = build_case(4, 1, 1, 1, 0.0)
    check_size(small)
    with pytest.raises(SizeGuard):
        check_size(small, max_I=2)


def test_dense_system_is_square(oracle_solver):
    dense = oracle_solver.dense
    system = oracle_solver.system
    assert dense.matrix.shape == (dense.size, dense.size)
    assert dense.size == system.n_cells * system.n_modes
    assert dense.row_interfaces.size == dense.size
    boundary = set(system.boundary_interfaces.tolist())
    first = dense.row_interfaces[: system.boundary_size]
    assert set(first.tolist()) == boundary


def test_constant_equilibrium_has_no_modes(oracle_solver):
    system = oracle_solver.system
    problem = SteadyProblem(
        rhs=np.full((system.n_cells, system.n_directions), 0.5 * 3.0),
        boundary=np.full(system.boundary_size, 3.0),
    )
    field = full_order_steady_solve(problem, oracle_solver)
    assert np.allclose(field.particular, 3.0)
    assert np.allclose(field.modes, 0.0, atol=1e-10)


def test_dense_solve_is_continuous(oracle_solver):
    system = oracle_solver.system
    rng = np.random.default_rng(2)
    problem = SteadyProblem(
        rhs=rng.standard_normal((system.n_cells, system.n_directions)),
        boundary=rng.standard_normal(system.boundary_size),
    )
    field = full_order_steady_solve(problem, oracle_solver)
    assert oracle_solver.relative_residual(field, problem.boundary) < 1e-10
    values = midpoint_values(field, system.disc)
    interfaces = system.disc.mesh.interfaces
    sides = sum(len(interface.cells) for interface in interfaces)
    assert values.size == sides * system.n_directions


@pytest.mark.parametrize("I, L", [(4, 1), (8, 2)])
def test_oracle_checks_pass(I, L):
    results = oracle_checks(I, L, seed=1)
    assert len(results) > 2
    failed = [str(result) for result in results if not result.passed]
    assert not failed


def test_eigen_checks_pass():
    results = eigen_checks(seed=3, draws=5)
    assert all(result.suite == "eigen" for result in results)
    assert all(result.passed for result in results)


@pytest.mark.parametrize("delta", [0.0, 1e-3])
def test_nested_checks_pass(delta):
    results = nested_checks(4, 1, delta, seed=0)
    failed = [str(result) for result in results if not result.passed]
    assert not failed
