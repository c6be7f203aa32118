"""
Implicit midpoint time stepping with inner fixed-point iterations around
the steady solver.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from rte_tools.exceptions import ConfigurationError, NoConvergence
from rte_tools.solver.field import SolutionField, cell_means, center_values
from rte_tools.solver.steady import (
    SteadyProblem,
    SteadySolver,
    reconstruct_layers,
    solve_with_particular,
    steady_solve,
)
from rte_tools.solver.system import AngularFunction


logger = logging.getLogger()

DIVERGENCE_FACTOR = 1e8
COUPLING_ITERATIONS = 30
COUPLING_MARGIN = 1.1


class SteppingMode(str, Enum):
    CELL_AVERAGE = "cell_average"
    CELL_CENTER = "cell_center"


@dataclass(frozen=True, slots=True)
class TimeSteppingConfig:
    dt: float
    T: float
    tol: float = 1e-10
    max_iters: int = 10000
    mode: SteppingMode = SteppingMode.CELL_AVERAGE

    def __post_init__(self):
        errors = []
        if not 0.0 < self.dt <= self.T:
            errors.append(f"dt must satisfy 0 < dt <= T, got {self.dt}")
        if not self.tol > 0.0:
            errors.append(f"tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            errors.append(f"max_iters must be positive, got {self.max_iters}")
        if self.mode == SteppingMode.CELL_AVERAGE and not self.dt < 1.0:
            errors.append(
                "cell_average mode relaxes with weight dt and needs dt < 1; "
                "use cell_center mode for larger steps"
            )
        if not errors and abs(self.T / self.dt - round(self.T / self.dt)) > (
            1e-9 * self.T / self.dt
        ):
            errors.append(f"T={self.T} is not a multiple of dt={self.dt}")
        if errors:
            raise ConfigurationError("time stepping", errors)

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))


@dataclass
class StepReport:
    step: int
    t: float
    iterations: int
    weight: float = 1.0
    history: List[float] = field(default_factory=list)

    @property
    def contraction(self) -> List[float]:
        """Ratios of consecutive successive differences."""
        return [
            later / earlier
            for earlier, later in zip(self.history, self.history[1:])
            if earlier > 0.0
        ]


@dataclass
class TimeSeries:
    fields: List[SolutionField]
    reports: List[StepReport]

    @property
    def final(self) -> SolutionField:
        return self.fields[-1]

    @property
    def iterations(self) -> List[int]:
        return [report.iterations for report in self.reports]


def _changes(new: np.ndarray, old: np.ndarray) -> Tuple[float, float]:
    """Relative and absolute successive change of cell-center values."""
    change = float(np.linalg.norm(new - old))
    if change == 0.0:
        return 0.0, 0.0
    scale = max(float(np.linalg.norm(new)), np.finfo(float).tiny)
    return change / scale, change


def _iterate(step, cfg: TimeSteppingConfig, report: StepReport):
    first = None
    for iteration in range(1, cfg.max_iters + 1):
        relative, absolute = step()
        report.history.append(relative)
        report.iterations = iteration
        if first is None:
            first = absolute
        if not (np.isfinite(relative) and np.isfinite(absolute)) or (
            first > 0.0 and absolute > DIVERGENCE_FACTOR * first
        ):
            logger.error(
                f"Fixed-point iteration diverged at step {report.step} "
                f"after {iteration} iterations"
            )
            raise NoConvergence(iteration, relative)
        if relative <= cfg.tol:
            return
    raise NoConvergence(cfg.max_iters, report.history[-1])


def mean_coupling(
    solver: SteadySolver,
    iterations: int = COUPLING_ITERATIONS,
    seed: int = 0,
) -> float:
    """
    Power-iteration estimate of the spectral radius of
    v -> mean(L^-1 v), the steady solve with zero inflow followed by
    cell means. The cell_average iteration lags exactly this map.
    """
    system = solver.system
    values = np.random.default_rng(seed).standard_normal(
        (system.n_cells, system.n_directions)
    )
    boundary = np.zeros(system.boundary_size)
    growth = 0.0
    for _ in range(iterations):
        norm = np.linalg.norm(values)
        if norm == 0.0:
            return 0.0
        solved = steady_solve(
            SteadyProblem(values / norm, boundary), solver, layers=False
        )
        values = cell_means(solved, system)
        growth = float(np.linalg.norm(values))
    return growth


def relaxation_weight(dt: float, coupling: float) -> float:
    """
    Weight of the new iterate in the cell_average iteration. The
    iteration map is (1 - w) I - (2 w / dt) mean L^-1. Weak coupling keeps
    w = dt; stronger coupling lowers w so that both ends of the spectrum
    [0, coupling] stay inside the unit disc.
    """
    coupling = COUPLING_MARGIN * coupling
    return min(dt, dt / (dt + coupling))


def midpoint_step_cell_average(
    previous: SolutionField,
    source_mean: np.ndarray,
    boundary: np.ndarray,
    cfg: TimeSteppingConfig,
    solver: SteadySolver,
    step: int = 1,
    weight: Optional[float] = None,
):
    """
    One midpoint step. Each inner iteration solves
    L psi_ds = 2 (q - (mean(psi_s) - mean(psi_prev)) / dt) - L psi_prev
    and relaxes psi_s = (1 - w) psi_s + w psi_ds, with w = dt unless the
    mean coupling of the medium needs a smaller weight. Iterates carry no
    layer; the caller reconstructs layers on the converged field.
    """
    if weight is None:
        weight = relaxation_weight(cfg.dt, mean_coupling(solver))
    system = solver.system
    t = previous.t + cfg.dt
    previous = _without_layer(previous)
    previous_means = cell_means(previous, system)
    previous_collision = (
        system.collision @ previous.particular.ravel()
    ).reshape(previous.particular.shape)
    report = StepReport(step=step, t=t, iterations=0, weight=weight)
    state = {"field": previous.at_time(t)}

    def inner() -> Tuple[float, float]:
        current = state["field"]
        means = cell_means(current, system)
        rhs = (
            2.0 * (source_mean - (means - previous_means) / cfg.dt)
            - previous_collision
        )
        update = steady_solve(
            SteadyProblem(rhs, boundary), solver, t, layers=False
        )
        relaxed = current.blend(update, weight)
        state["field"] = relaxed
        return _changes(
            center_values(relaxed, system), center_values(current, system)
        )

    _iterate(inner, cfg, report)
    return state["field"], report


def midpoint_step_cell_center(
    previous: SolutionField,
    source_center: np.ndarray,
    boundary: np.ndarray,
    cfg: TimeSteppingConfig,
    solver: SteadySolver,
    step: int = 1,
):
    """
    One midpoint step on cell-center values:
    psi_c = psi_c_prev + dt (q_c - A (v_s + v_prev) / 2), the particular
    part takes psi_c minus the slow fundamental center values, and a
    steady solve with that particular part fixes the modes.
    """
    system = solver.system
    t = previous.t + cfg.dt
    previous = _without_layer(previous)
    shape = previous.particular.shape
    previous_centers = center_values(previous, system)
    previous_collision = (
        system.collision @ previous.particular.ravel()
    ).reshape(shape)
    report = StepReport(step=step, t=t, iterations=0)
    state = {"field": previous.at_time(t)}

    def inner() -> Tuple[float, float]:
        current = state["field"]
        collision = (system.collision @ current.particular.ravel()).reshape(
            shape
        )
        centers = previous_centers + cfg.dt * (
            source_center - 0.5 * (collision + previous_collision)
        )
        slow_centers = (
            system.centers @ current.fundamental.ravel()
        ).reshape(shape)
        update = solve_with_particular(
            centers - slow_centers, boundary, solver, t, layers=False
        )
        state["field"] = update
        return _changes(
            center_values(update, system), center_values(current, system)
        )

    _iterate(inner, cfg, report)
    return state["field"], report


def _without_layer(field_: SolutionField) -> SolutionField:
    return SolutionField(
        particular=field_.particular,
        fundamental=field_.fundamental,
        layer=np.zeros_like(field_.layer),
        t=field_.t,
    )


def initial_field(
    initial: AngularFunction, solver: SteadySolver
) -> SolutionField:
    """Cell-center samples of the initial data in the particular part."""
    system = solver.system
    field_ = SolutionField.zeros(system.n_cells, system.n_directions)
    particular = system.sample_centers(initial, 0.0)
    return SolutionField(
        particular=particular,
        fundamental=field_.fundamental,
        layer=field_.layer,
        t=0.0,
    )


def run_time_series(
    initial: AngularFunction,
    boundary: AngularFunction,
    source: AngularFunction,
    cfg: TimeSteppingConfig,
    solver: SteadySolver,
) -> TimeSeries:
    """
    Boundary data is sampled at t_n and the source at t_{n-1/2}. Steps
    advance the slow state; every stored field gets its layers
    reconstructed from that state.
    """
    system = solver.system
    state = initial_field(initial, solver)
    fields = [state]
    reports = []
    weight = None
    if cfg.mode == SteppingMode.CELL_AVERAGE:
        coupling = mean_coupling(solver)
        weight = relaxation_weight(cfg.dt, coupling)
        logger.info(
            f"Mean coupling {coupling:.4g}: relaxation weight {weight:.4g}"
        )
    for n in range(1, cfg.steps + 1):
        t_half = (n - 0.5) * cfg.dt
        boundary_data = system.sample_boundary(boundary, n * cfg.dt)
        if cfg.mode == SteppingMode.CELL_AVERAGE:
            state, report = midpoint_step_cell_average(
                state,
                system.sample_averages(source, t_half),
                boundary_data,
                cfg,
                solver,
                step=n,
                weight=weight,
            )
        else:
            state, report = midpoint_step_cell_center(
                state,
                system.sample_centers(source, t_half),
                boundary_data,
                cfg,
                solver,
                step=n,
            )
        state = state.at_time(n * cfg.dt)
        fields.append(reconstruct_layers(state, solver, boundary_data))
        reports.append(report)
        logger.info(
            f"Step {n}/{cfg.steps} t={n * cfg.dt:.6g}: "
            f"{report.iterations} iterations"
        )
    return TimeSeries(fields=fields, reports=reports)
