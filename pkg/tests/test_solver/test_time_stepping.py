import numpy as np
import pytest

from rte_tools.exceptions import ConfigurationError, NoConvergence
from rte_tools.experiments.studies import (
    benchmark_problem,
    constant_problem,
    delta_for_rank_ratio,
    rank_sweep,
)
from rte_tools.oracle import FullOrderSolver, full_order_time_series
from rte_tools.oracle.checks import build_case
from rte_tools.solver import assemble_solver
from rte_tools.solver.field import SolutionField, center_grid, center_values
from rte_tools.solver.steady import reconstruct_layers
from rte_tools.solver.time_stepping import (
    COUPLING_MARGIN,
    StepReport,
    SteppingMode,
    TimeSteppingConfig,
    _iterate,
    initial_field,
    mean_coupling,
    relaxation_weight,
    run_time_series,
)


SIGMA_A = 0.5
PHI = 2.0


@pytest.fixture(scope="module")
def constant_solver():
    disc = build_case(
        4,
        1,
        1,
        1,
        0.0,
        params={"sigma_T": 1.0, "sigma_a": SIGMA_A, "epsilon": 0.5},
    )
    return assemble_solver(disc)


@pytest.fixture(scope="module")
def lattice_solver():
    disc = build_case(8, 2, 1, 1, 1e-3, material="lattice")
    return assemble_solver(disc)


@pytest.mark.parametrize(
    "dt, T, mode",
    [
        (0.0, 1.0, SteppingMode.CELL_CENTER),
        (2.0, 1.0, SteppingMode.CELL_CENTER),
        (0.3, 1.0, SteppingMode.CELL_AVERAGE),
        (1.0, 2.0, SteppingMode.CELL_AVERAGE),
    ],
)
def test_invalid_time_stepping(dt, T, mode):
    with pytest.raises(ConfigurationError) as e:
        TimeSteppingConfig(dt=dt, T=T, mode=mode)
    assert e.value.errors


def test_large_steps_need_cell_center_mode():
    with pytest.raises(ConfigurationError) as e:
        TimeSteppingConfig(dt=2.0, T=4.0)
    assert "cell_center" in e.value.errors[0]
    cfg = TimeSteppingConfig(dt=2.0, T=4.0, mode=SteppingMode.CELL_CENTER)
    assert cfg.steps == 2


def test_invalid_tolerances():
    with pytest.raises(ConfigurationError) as e:
        TimeSteppingConfig(dt=0.5, T=1.0, tol=0.0, max_iters=0)
    assert len(e.value.errors) == 2


def test_step_report_contraction():
    report = StepReport(step=1, t=0.5, iterations=3)
    report.history.extend([1.0, 0.5, 0.0, 0.0])
    assert report.contraction == [0.5, 0.0]


def test_initial_field_samples_cell_centers(constant_solver):
    field = initial_field(
        lambda x, y, t: (x + 2 * y)[:, None], constant_solver
    )
    centers = constant_solver.system.disc.mesh.cell_centers
    expected = centers[:, 0] + 2 * centers[:, 1]
    assert field.t == 0.0
    assert np.allclose(field.particular, expected[:, None])
    assert not np.any(field.modes)


@pytest.mark.parametrize(
    "mode", [SteppingMode.CELL_AVERAGE, SteppingMode.CELL_CENTER]
)
def test_constant_equilibrium_is_stationary(constant_solver, mode):
    problem = constant_problem(PHI, SIGMA_A)
    cfg = TimeSteppingConfig(dt=0.25, T=0.5, mode=mode)
    series = run_time_series(
        problem.initial, problem.boundary, problem.source, cfg, constant_solver
    )
    assert len(series.fields) == cfg.steps + 1
    assert len(series.reports) == cfg.steps
    for n, field in enumerate(series.fields):
        assert field.t == pytest.approx(n * cfg.dt)
        assert np.allclose(
            center_values(field, constant_solver.system), PHI, atol=1e-9
        )
    assert max(series.iterations) <= 2


@pytest.mark.parametrize(
    "mode", [SteppingMode.CELL_AVERAGE, SteppingMode.CELL_CENTER]
)
def test_zero_data_stays_zero(constant_solver, mode):
    def zero(x, y, t):
        return np.zeros((np.size(x), 1))

    cfg = TimeSteppingConfig(dt=0.5, T=1.0, mode=mode)
    series = run_time_series(zero, zero, zero, cfg, constant_solver)
    for field in series.fields:
        assert not np.any(field.particular)
        assert not np.any(field.modes)
    assert series.iterations == [1, 1]


def test_uncompressed_series_matches_full_order(constant_solver):
    problem = benchmark_problem()
    cfg = TimeSteppingConfig(dt=0.25, T=0.5)
    series = run_time_series(
        problem.initial,
        problem.boundary,
        problem.source,
        cfg,
        constant_solver,
    )
    disc = constant_solver.system.disc
    oracle = FullOrderSolver(disc)
    reference = full_order_time_series(
        disc,
        problem.initial,
        problem.boundary,
        problem.source,
        cfg,
        solver=oracle,
    )
    approximation = center_grid(series.final, constant_solver.system)
    expected = center_grid(reference.final, oracle.system)
    assert np.linalg.norm(expected) > 0.0
    assert np.linalg.norm(approximation - expected) <= 1e-7 * (
        np.linalg.norm(expected)
    )


@pytest.mark.parametrize("dt", [1 / 4, 1 / 8])
def test_cell_average_iteration_contracts_with_one_minus_weight(
    lattice_solver, dt
):
    problem = benchmark_problem()
    cfg = TimeSteppingConfig(dt=dt, T=dt, tol=1e-12)
    series = run_time_series(
        problem.initial, problem.boundary, problem.source, cfg, lattice_solver
    )
    report = series.reports[0]
    ratios = [r for r in report.contraction[3:] if r > 0.0]
    assert len(ratios) > 5
    measured = float(np.median(ratios))
    weight = report.weight
    assert 0.0 < weight <= dt
    assert 0.8 * (1 - weight) <= measured <= 1.2 * (1 - weight)


def test_iteration_limit(constant_solver):
    problem = benchmark_problem()
    cfg = TimeSteppingConfig(dt=0.25, T=0.25, tol=1e-14, max_iters=2)
    with pytest.raises(NoConvergence) as e:
        run_time_series(
            problem.initial,
            problem.boundary,
            problem.source,
            cfg,
            constant_solver,
        )
    assert e.value.iterations == 2


def test_relaxation_weight_is_dt_for_weak_coupling():
    assert relaxation_weight(0.25, 0.5) == 0.25
    assert relaxation_weight(0.125, 0.0) == 0.125


def test_relaxation_weight_shrinks_for_strong_coupling():
    weight = relaxation_weight(0.25, 2.0)
    assert weight == pytest.approx(0.25 / (0.25 + 2.0 * COUPLING_MARGIN))
    assert weight < 0.25
    # both ends of the spectrum [0, coupling] stay inside the unit disc
    for eigenvalue in (0.0, 2.0):
        assert abs(1 - weight - 2 * weight * eigenvalue / 0.25) < 1.0


def test_mean_coupling_is_deterministic(lattice_solver):
    first = mean_coupling(lattice_solver, iterations=10)
    assert first > 0.0
    assert mean_coupling(lattice_solver, iterations=10) == first


def test_cell_average_runs_on_lattice_over_several_steps(lattice_solver):
    problem = benchmark_problem()
    cfg = TimeSteppingConfig(dt=0.25, T=1.0)
    series = run_time_series(
        problem.initial, problem.boundary, problem.source, cfg, lattice_solver
    )
    assert len(series.reports) == 4
    assert all(r.iterations < cfg.max_iters for r in series.reports)
    values = center_grid(series.final, lattice_solver.system)
    assert np.all(np.isfinite(values))


@pytest.fixture(scope="module")
def bufferzone_solver():
    full = build_case(8, 2, 1, 1, 0.0, material="bufferzone")
    delta = delta_for_rank_ratio(full.bases, 0.25)
    disc = build_case(8, 2, 1, 1, delta, material="bufferzone")
    return assemble_solver(disc)


def test_layers_are_reconstructed_on_stored_fields(bufferzone_solver):
    problem = benchmark_problem()
    cfg = TimeSteppingConfig(dt=0.125, T=0.25)
    series = run_time_series(
        problem.initial,
        problem.boundary,
        problem.source,
        cfg,
        bufferzone_solver,
    )
    system = bufferzone_solver.system
    final = series.final
    assert np.any(final.layer)
    slow = SolutionField(
        particular=final.particular,
        fundamental=final.fundamental,
        layer=np.zeros_like(final.layer),
        t=final.t,
    )
    boundary = system.sample_boundary(problem.boundary, final.t)
    expected = reconstruct_layers(slow, bufferzone_solver, boundary)
    assert np.array_equal(final.layer, expected.layer)


def test_low_rank_bufferzone_sweep_converges():
    result = rank_sweep("bufferzone", [1], rank_ratios=[0.25], I=8, dt=1 / 8)
    assert len(result.rows) == 1
    row = result.rows[0]
    assert np.isfinite(row.angular_error)
    assert np.isfinite(row.scalar_error)


def _geometric_steps(factor):
    state = {"difference": 1.0}

    def step():
        state["difference"] *= factor
        return 0.9, state["difference"]

    return step


def test_divergence_is_detected_from_absolute_growth():
    cfg = TimeSteppingConfig(dt=0.5, T=1.0, max_iters=1000)
    report = StepReport(step=1, t=0.5, iterations=0)
    with pytest.raises(NoConvergence) as e:
        _iterate(_geometric_steps(10.0), cfg, report)
    assert e.value.iterations <= 10
    assert report.history == [0.9] * e.value.iterations


def test_non_finite_iterates_stop_the_iteration():
    cfg = TimeSteppingConfig(dt=0.5, T=1.0, max_iters=1000)
    report = StepReport(step=1, t=0.5, iterations=0)
    with pytest.raises(NoConvergence) as e:
        _iterate(lambda: (np.nan, np.nan), cfg, report)
    assert e.value.iterations == 1
