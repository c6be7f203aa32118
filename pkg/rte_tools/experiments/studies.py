"""
Problem definitions and the studies built on them: manufactured-solution
convergence and threshold sweeps on the multiscale benchmarks.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from rte_tools._utils import parallel_map
from rte_tools.discretization import Discretization, discretize
from rte_tools.discretization.angular import (
    QuadratureSet,
    build_quadrature,
    discrete_kernel,
    scalar_flux,
)
from rte_tools.discretization.materials import builtin_fields
from rte_tools.discretization.mesh import build_hierarchy, levels_for
from rte_tools.exceptions import ConfigurationError, SizeGuard
from rte_tools.experiments.manufactured import (
    ManufacturedCase,
    build_manufactured_case,
    manufactured_reference,
    source,
)
from rte_tools.experiments.metrics import (
    convergence_orders,
    promote_scalar,
    rank_ratio,
    relative_error,
    timing_orders,
)
from rte_tools.oracle import (
    MAX_I,
    MAX_M,
    FullOrderSolver,
    full_order_time_series,
)
from rte_tools.solver import CompressedSolver, assemble_solver
from rte_tools.solver.field import center_grid
from rte_tools.solver.system import AngularFunction
from rte_tools.solver.time_stepping import (
    SteppingMode,
    TimeSeries,
    TimeSteppingConfig,
    run_time_series,
)


logger = logging.getLogger()

BENCHMARKS = ("lattice", "bufferzone")


def _isotropic(value_of_t) -> AngularFunction:
    def function(x, y, t):
        return np.full((np.size(x), 1), value_of_t(t))

    return function


@dataclass(frozen=True)
class Problem:
    initial: AngularFunction
    boundary: AngularFunction
    source: AngularFunction
    reference: Optional[AngularFunction] = None


def manufactured_problem(case: ManufacturedCase) -> Problem:
    def reference(x, y, t):
        return manufactured_reference(case, x, y, t)

    return Problem(
        initial=reference,
        boundary=reference,
        source=lambda x, y, t: source(case, x, y, t),
        reference=reference,
    )


def benchmark_problem() -> Problem:
    """Zero initial data and source, isotropic inflow t / (1 + t)."""
    return Problem(
        initial=_isotropic(lambda t: 0.0),
        boundary=_isotropic(lambda t: t / (1.0 + t)),
        source=_isotropic(lambda t: 0.0),
    )


def constant_problem(value: float, sigma_a: float) -> Problem:
    """
    Isotropic equilibrium phi = value of a constant medium: source
    sigma_a * value, boundary and initial data value.
    """
    state = _isotropic(lambda t: value)
    return Problem(
        initial=state,
        boundary=state,
        source=_isotropic(lambda t: sigma_a * value),
        reference=state,
    )


def quadrature_for(M: int) -> QuadratureSet:
    """Product rule with M ordinates per quadrant, azimuths <= polars."""
    n_azimuth = max(
        d for d in range(1, int(np.sqrt(M)) + 1) if M % d == 0
    )
    return build_quadrature(M // n_azimuth, n_azimuth)


def build_discretization(
    I: int,
    quad: QuadratureSet,
    material: str,
    params: Optional[Dict] = None,
    delta: float = 0.0,
    g: float = 0.0,
    L: Optional[int] = None,
    threads: int = 1,
) -> Discretization:
    if L is None:
        L = levels_for(I, 2) if I >= 2 else 0
    return discretize(
        build_hierarchy(I, L),
        builtin_fields(material, params),
        quad,
        discrete_kernel(quad, g),
        delta,
        threads=threads,
    )


@dataclass
class RunResult:
    series: TimeSeries
    solver: CompressedSolver
    rank_ratio: float
    offline_seconds: float
    online_seconds: float
    apply_calls: int


def run_problem(
    disc: Discretization,
    problem: Problem,
    cfg: TimeSteppingConfig,
    threads: int = 1,
) -> RunResult:
    solver = assemble_solver(disc, threads=threads)
    series = run_time_series(
        problem.initial, problem.boundary, problem.source, cfg, solver
    )
    return RunResult(
        series=series,
        solver=solver,
        rank_ratio=disc.rank_ratio,
        offline_seconds=solver.build.seconds,
        online_seconds=solver.apply_seconds,
        apply_calls=solver.apply_calls,
    )


def reference_grid(disc: Discretization, function, t: float) -> np.ndarray:
    """(I, I, 4M) samples of function at the cell centers."""
    centers = disc.mesh.cell_centers
    values = np.asarray(function(centers[:, 0], centers[:, 1], t))
    I = disc.mesh.I
    return np.broadcast_to(values, (I * I, disc.quad.size)).reshape(
        I, I, -1
    )


def flux_errors(
    approximation: np.ndarray, reference: np.ndarray, quad: QuadratureSet
):
    """Relative angular and scalar flux errors of two center grids."""
    I, M = approximation.shape[0], quad.M
    angular = relative_error(approximation, reference, I, M)
    scalar = relative_error(
        promote_scalar(scalar_flux(quad, approximation), M),
        promote_scalar(scalar_flux(quad, reference), M),
        I,
        M,
    )
    return angular, scalar


@dataclass
class ErrorRow:
    M: int
    epsilon: float
    h: float
    I: int
    angular_error: float
    scalar_error: float
    offline_seconds: float
    online_seconds: float
    iterations: int
    angular_order: Optional[float] = None
    scalar_order: Optional[float] = None
    offline_order: Optional[float] = None
    online_order: Optional[float] = None


@dataclass
class ErrorReport:
    rows: List[ErrorRow] = field(default_factory=list)

    def series(self, M: int, epsilon: float) -> List[ErrorRow]:
        return [
            row for row in self.rows if row.M == M and row.epsilon == epsilon
        ]


def _convergence_point(
    M: int,
    epsilon: float,
    h: float,
    delta: float,
    sigma_T: float,
    sigma_a: float,
    T: float,
    mode: SteppingMode,
) -> ErrorRow:
    I = int(round(1.0 / h))
    if not np.isclose(I * h, 1.0):
        raise ConfigurationError(
            "convergence study", [f"h={h} does not divide the unit square"]
        )
    quad = quadrature_for(M)
    case = build_manufactured_case(sigma_T, sigma_a, epsilon, quad)
    disc = build_discretization(
        I,
        quad,
        "constant",
        {"sigma_T": sigma_T, "sigma_a": sigma_a, "epsilon": epsilon},
        delta=delta,
    )
    problem = manufactured_problem(case)
    cfg = TimeSteppingConfig(dt=h, T=T, mode=mode)
    result = run_problem(disc, problem, cfg)
    final = result.series.final
    approximation = center_grid(final, result.solver.system)
    angular, scalar = flux_errors(
        approximation, reference_grid(disc, problem.reference, T), quad
    )
    row = ErrorRow(
        M=M,
        epsilon=epsilon,
        h=h,
        I=I,
        angular_error=angular,
        scalar_error=scalar,
        offline_seconds=result.offline_seconds,
        online_seconds=result.online_seconds,
        iterations=int(sum(result.series.iterations)),
    )
    logger.info(
        f"Convergence M={M} eps={epsilon:g} h={h:g}: angular error "
        f"{angular:.3e}, scalar error {scalar:.3e}"
    )
    return row


def convergence_study(
    Ms: Sequence[int],
    epsilons: Sequence[float],
    hs: Sequence[float],
    delta: float = 1e-3,
    sigma_T: float = 1.0,
    sigma_a: float = 0.5,
    T: float = 1.0,
    mode: SteppingMode = SteppingMode.CELL_AVERAGE,
    threads: int = 1,
) -> ErrorReport:
    """
    Manufactured runs for every (M, eps, h) with dt = h, and fitted
    error and timing orders along each h series.
    """
    hs = sorted(hs, reverse=True)
    points = [(M, eps, h) for M in Ms for eps in epsilons for h in hs]
    rows = parallel_map(
        lambda point: _convergence_point(
            *point, delta, sigma_T, sigma_a, T, mode
        ),
        points,
        threads,
    )
    report = ErrorReport(rows=rows)
    for M in Ms:
        for eps in epsilons:
            series = report.series(M, eps)
            step = [row.h for row in series]
            for row, angular, scalar, offline, online in zip(
                series,
                convergence_orders([row.angular_error for row in series]),
                convergence_orders([row.scalar_error for row in series]),
                timing_orders([row.offline_seconds for row in series], step),
                timing_orders([row.online_seconds for row in series], step),
            ):
                row.angular_order = angular
                row.scalar_order = scalar
                row.offline_order = offline
                row.online_order = online
    return report


def delta_for_rank_ratio(bases: Sequence, target: float) -> float:
    """
    Threshold whose rank ratio is closest to target. Only counts that
    separate distinct center magnitudes are reachable.
    """
    if not 0.0 <= target <= 1.0:
        raise ConfigurationError(
            "rank ratio", [f"target must lie in [0, 1], got {target}"]
        )
    magnitudes = np.sort(
        np.concatenate([basis.center_magnitude for basis in bases])
    )[::-1]
    total = magnitudes.size
    best_count, best_gap = total, abs(1.0 - target)
    for count in range(total):
        if count and magnitudes[count - 1] == magnitudes[count]:
            continue
        gap = abs(count / total - target)
        if gap < best_gap:
            best_count, best_gap = count, gap
    if best_count == total:
        return 0.0
    return float(magnitudes[best_count])


def basis_count_grid(disc: Discretization) -> np.ndarray:
    """(I, I) retained basis count indexed [ix, iy]."""
    I = disc.mesh.I
    counts = np.array([basis.retained.size for basis in disc.bases])
    return counts.reshape(I, I)


@dataclass
class SweepRow:
    benchmark: str
    M: int
    delta: float
    rank_ratio: float
    angular_error: float
    scalar_error: float


@dataclass
class SweepResult:
    rows: List[SweepRow] = field(default_factory=list)
    # scalar flux at T per M: "full" and "low_rank" (I, I) grids
    flux_grids: Dict[int, Dict[str, np.ndarray]] = field(
        default_factory=dict
    )
    basis_counts: Dict[int, np.ndarray] = field(default_factory=dict)


def _reference_series(
    disc: Discretization,
    problem: Problem,
    cfg: TimeSteppingConfig,
    threads: int,
):
    """Full-order series and the system to sample it with."""
    if disc.mesh.I <= MAX_I and disc.quad.M <= MAX_M:
        solver = FullOrderSolver(disc)
        series = full_order_time_series(
            disc,
            problem.initial,
            problem.boundary,
            problem.source,
            cfg,
            solver=solver,
        )
        return series, solver.system
    logger.info(
        f"Dense reference refused for I={disc.mesh.I}, M={disc.quad.M}; "
        "using the uncompressed multilevel solve"
    )
    result = run_problem(disc, problem, cfg, threads)
    return result.series, result.solver.system


def rank_sweep(
    benchmark: str,
    Ms: Sequence[int],
    deltas: Optional[Sequence[float]] = None,
    rank_ratios: Optional[Sequence[float]] = None,
    I: int = 16,
    dt: float = 1.0 / 16.0,
    T: float = 1.0,
    g: float = 0.0,
    params: Optional[Dict] = None,
    flux_delta: Optional[float] = None,
    mode: SteppingMode = SteppingMode.CELL_AVERAGE,
    threads: int = 1,
) -> SweepResult:
    """
    Low-rank runs with layer reconstruction for every threshold, compared
    at T against the full-order solution of the same benchmark.
    """
    if benchmark not in BENCHMARKS:
        raise ConfigurationError(
            "sweep", [f"Unknown benchmark '{benchmark}', use {BENCHMARKS}"]
        )
    if (deltas is None) == (rank_ratios is None):
        raise ConfigurationError(
            "sweep", ["Give exactly one of deltas and rank_ratios"]
        )
    problem = benchmark_problem()
    cfg = TimeSteppingConfig(dt=dt, T=T, mode=mode)
    result = SweepResult()
    for M in Ms:
        quad = quadrature_for(M)
        full = build_discretization(
            I, quad, benchmark, params, delta=0.0, g=g, threads=threads
        )
        try:
            series, system = _reference_series(full, problem, cfg, threads)
        except SizeGuard:
            logger.exception("Full-order reference failed")
            raise
        reference = center_grid(series.final, system)
        thresholds = (
            list(deltas)
            if deltas is not None
            else [delta_for_rank_ratio(full.bases, r) for r in rank_ratios]
        )
        for delta in thresholds:
            disc = build_discretization(
                I, quad, benchmark, params, delta=delta, g=g, threads=threads
            )
            run = run_problem(disc, problem, cfg, threads)
            approximation = center_grid(run.series.final, run.solver.system)
            angular, scalar = flux_errors(approximation, reference, quad)
            result.rows.append(
                SweepRow(
                    benchmark=benchmark,
                    M=M,
                    delta=float(delta),
                    rank_ratio=rank_ratio(disc.bases),
                    angular_error=angular,
                    scalar_error=scalar,
                )
            )
            logger.info(
                f"Sweep {benchmark} M={M} delta={delta:.3e}: rank ratio "
                f"{disc.rank_ratio:.4f}, angular error {angular:.3e}"
            )
            if flux_delta is not None and np.isclose(delta, flux_delta):
                result.flux_grids[M] = {
                    "full": scalar_flux(quad, reference),
                    "low_rank": scalar_flux(quad, approximation),
                }
                result.basis_counts[M] = basis_count_grid(disc)
    result.rows.sort(key=lambda row: (row.M, row.rank_ratio))
    return result
