import logging
import time
from dataclasses import asdict
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from rte_tools.adapter import local_storage
from rte_tools.discretization import Discretization, discretize
from rte_tools.discretization.angular import (
    QuadratureSet,
    build_quadrature,
    discrete_kernel,
    scalar_flux,
)
from rte_tools.discretization.expressions import parse_expression
from rte_tools.discretization.materials import builtin_fields
from rte_tools.discretization.mesh import build_hierarchy
from rte_tools.exceptions import (
    ConfigurationError,
    NumericalError,
    VerificationFailure,
)
from rte_tools.experiments.manufactured import (
    ManufacturedCase,
    build_manufactured_case,
)
from rte_tools.experiments.studies import (
    Problem,
    basis_count_grid,
    benchmark_problem,
    constant_problem,
    convergence_study,
    flux_errors,
    manufactured_problem,
    rank_sweep,
    reference_grid,
)
from rte_tools.model import (
    validate_convergence_config,
    validate_run_config,
    validate_sweep_config,
)
from rte_tools.model.run_config import (
    Artifact,
    OutputConfig,
    ProblemConfig,
    ProblemKind,
    RunConfig,
)
from rte_tools.oracle.checks import CheckResult, run_verification
from rte_tools.solver import assemble_solver
from rte_tools.solver.field import center_grid
from rte_tools.solver.system import AngularFunction
from rte_tools.solver.time_stepping import (
    TimeSteppingConfig,
    run_time_series,
)


logger = logging.getLogger()


def _output_directory(output: OutputConfig) -> Path:
    directory = Path(output.directory)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _expression_function(expression: Optional[str]) -> AngularFunction:
    """Isotropic angular function of x, y and t; zero when absent."""
    function = parse_expression(expression or "0", ("x", "y", "t"))

    def angular(x, y, t):
        values = function(np.asarray(x, float), np.asarray(y, float), t)
        return np.broadcast_to(values, np.shape(x)).reshape(-1, 1)

    return angular


def custom_problem(problem: ProblemConfig) -> Problem:
    return Problem(
        initial=_expression_function(problem.initial),
        boundary=_expression_function(problem.boundary),
        source=_expression_function(problem.source),
    )


def build_problem(
    config: RunConfig, quad: QuadratureSet
) -> Tuple[Problem, Optional[ManufacturedCase]]:
    params = config.material.params()
    sigma_T = params.get("sigma_T", 1.0)
    sigma_a = params.get("sigma_a", 0.5)
    epsilon = params.get("epsilon", 1.0)
    kind = config.problem.kind
    if kind == ProblemKind.MANUFACTURED:
        case = build_manufactured_case(sigma_T, sigma_a, epsilon, quad)
        return manufactured_problem(case), case
    if kind == ProblemKind.CONSTANT:
        return constant_problem(config.problem.value, sigma_a), None
    if kind == ProblemKind.BENCHMARK:
        return benchmark_problem(), None
    return custom_problem(config.problem), None


def factorization_key(config: RunConfig) -> str:
    """Content hash of everything the factorization depends on."""
    return local_storage.content_hash(
        {
            "mesh": config.mesh.model_dump(mode="json"),
            "material": config.material.model_dump(mode="json"),
            "quadrature": config.quadrature.model_dump(mode="json"),
            "kernel": config.kernel.model_dump(mode="json"),
            "delta": config.compression.delta,
        }
    )


def discretize_run(config: RunConfig, threads: int = 1) -> Discretization:
    quad = build_quadrature(
        config.quadrature.n_polar, config.quadrature.n_azimuth
    )
    return discretize(
        build_hierarchy(config.mesh.I, config.mesh.L),
        builtin_fields(
            config.material.name.value, config.material.params()
        ),
        quad,
        discrete_kernel(quad, config.kernel.g),
        config.compression.delta,
        threads=threads,
    )


def execute_run(config: RunConfig, threads: int = 1) -> Dict[str, Path]:
    """
    Offline phase (or cache load), time series and artifacts of one run.
    Returns the written artifacts by name.
    """
    directory = _output_directory(config.output)
    disc = discretize_run(config, threads)
    problem, case = build_problem(config, disc.quad)

    key = factorization_key(config)
    cached = local_storage.load_factorization(key)
    solver = assemble_solver(disc, threads=threads, cached=cached)
    if cached is None:
        local_storage.store_factorization(key, solver.build.factorization)

    cfg = TimeSteppingConfig(
        dt=config.time.dt,
        T=config.time.T,
        tol=config.time.tol,
        max_iters=config.time.max_iters,
        mode=config.time.mode,
    )
    series = run_time_series(
        problem.initial, problem.boundary, problem.source, cfg, solver
    )

    written = {}
    artifacts = set(config.output.artifacts)
    if Artifact.SCALAR_FLUX in artifacts:
        for t in config.output.snapshots or [cfg.T]:
            step = int(round(t / cfg.dt))
            grid = center_grid(series.fields[step], solver.system)
            path = directory / f"scalar_flux_t{step * cfg.dt:.6g}.csv"
            local_storage.write_grid(path, scalar_flux(disc.quad, grid))
            written[path.stem] = path
    if Artifact.BASIS_COUNTS in artifacts:
        path = directory / "basis_counts.csv"
        local_storage.write_grid(path, basis_count_grid(disc))
        written["basis_counts"] = path
    if Artifact.MANIFEST in artifacts:
        factorization = solver.build.factorization
        manifest = {
            "I": disc.mesh.I,
            "L": disc.mesh.L,
            "M": disc.quad.M,
            "directions": disc.quad.size,
            "delta": disc.delta,
            "material": disc.field.description,
            "rank_ratio": disc.rank_ratio,
            "retained_modes": disc.retained_count,
            "f_dimensions": factorization.f_dimensions,
            "g_dimensions": factorization.g_dimensions,
            "storage_doubles": factorization.storage_size(),
            "factorization_key": key,
            "factorization_cached": cached is not None,
            "steps": cfg.steps,
            "iterations": series.iterations,
            "offline_seconds": solver.build.seconds,
            "online_seconds": solver.apply_seconds,
            "apply_calls": solver.apply_calls,
        }
        if case is not None:
            angular, scalar = flux_errors(
                center_grid(series.final, solver.system),
                reference_grid(disc, problem.reference, cfg.T),
                disc.quad,
            )
            manifest["lambda_min"] = case.lam_min
            manifest["angular_error"] = angular
            manifest["scalar_error"] = scalar
        path = directory / "manifest.json"
        local_storage.write_json(path, manifest)
        written["manifest"] = path
    return written


def _table(rows: List) -> Dict[str, list]:
    records = [asdict(row) for row in rows]
    if not records:
        return {}
    return {name: [r[name] for r in records] for name in records[0]}


def cmd_run(config_path: Path, threads: int = 1) -> Dict[str, Path]:
    start = time.perf_counter()
    try:
        config = validate_run_config(local_storage.load_json(config_path))
        return execute_run(config, threads)
    except ConfigurationError as e:
        logger.error(f"Invalid run config {config_path}: {e.errors}")
        raise e
    except NumericalError as e:
        logger.error(f"Run {config_path} failed: {e}")
        raise e
    except Exception as e:
        raise e
    finally:
        logger.info(
            f"Run {config_path} ended after "
            f"{time.perf_counter() - start:.3f} s"
        )


def cmd_convergence(config_path: Path, threads: int = 1) -> Dict[str, Path]:
    start = time.perf_counter()
    try:
        config = validate_convergence_config(
            local_storage.load_json(config_path)
        )
        report = convergence_study(
            config.Ms,
            config.epsilons,
            config.hs,
            delta=config.delta,
            sigma_T=config.sigma_T,
            sigma_a=config.sigma_a,
            T=config.T,
            mode=config.mode,
            threads=threads,
        )
        directory = _output_directory(config.output)
        table = _table(report.rows)
        errors_path = directory / "convergence_errors.csv"
        local_storage.write_table(
            errors_path,
            {
                name: table[name]
                for name in (
                    "M",
                    "epsilon",
                    "h",
                    "I",
                    "angular_error",
                    "scalar_error",
                    "iterations",
                )
            },
        )
        orders_path = directory / "convergence_orders.csv"
        local_storage.write_table(
            orders_path,
            {
                name: table[name]
                for name in (
                    "M",
                    "epsilon",
                    "h",
                    "angular_order",
                    "scalar_order",
                    "offline_seconds",
                    "online_seconds",
                    "offline_order",
                    "online_order",
                )
            },
        )
        return {"errors": errors_path, "orders": orders_path}
    except ConfigurationError as e:
        logger.error(f"Invalid convergence config {config_path}: {e.errors}")
        raise e
    except Exception as e:
        raise e
    finally:
        logger.info(
            f"Convergence study ended after "
            f"{time.perf_counter() - start:.3f} s"
        )


def cmd_sweep(config_path: Path, threads: int = 1) -> Dict[str, Path]:
    start = time.perf_counter()
    try:
        config = validate_sweep_config(local_storage.load_json(config_path))
        result = rank_sweep(
            config.benchmark.value,
            config.Ms,
            deltas=config.deltas,
            rank_ratios=config.rank_ratios,
            I=config.I,
            dt=config.dt,
            T=config.T,
            g=config.g,
            flux_delta=config.flux_delta,
            mode=config.mode,
            threads=threads,
        )
        directory = _output_directory(config.output)
        written = {}
        path = directory / f"sweep_{config.benchmark.value}.csv"
        local_storage.write_table(path, _table(result.rows))
        written["sweep"] = path
        for M, grids in result.flux_grids.items():
            for name, grid in grids.items():
                path = directory / f"scalar_flux_{name}_M{M}.csv"
                local_storage.write_grid(path, grid)
                written[path.stem] = path
        for M, counts in result.basis_counts.items():
            path = directory / f"basis_counts_M{M}.csv"
            local_storage.write_grid(path, counts)
            written[path.stem] = path
        return written
    except ConfigurationError as e:
        logger.error(f"Invalid sweep config {config_path}: {e.errors}")
        raise e
    except Exception as e:
        raise e
    finally:
        logger.info(
            f"Sweep ended after {time.perf_counter() - start:.3f} s"
        )


def cmd_verify(
    max_I: int = 16, seed: int = 0, threads: int = 1
) -> List[CheckResult]:
    """Runs every verification suite; raises if any check fails."""
    if max_I < 4:
        raise ConfigurationError(
            "verify", [f"--max-I must be at least 4, got {max_I}"]
        )
    results = run_verification(max_I=max_I, seed=seed, threads=threads)
    failed = [str(result) for result in results if not result.passed]
    if failed:
        raise VerificationFailure("verification suites", errors=failed)
    logger.info(f"All {len(results)} verification checks passed")
    return results


__all__ = [
    "cmd_convergence",
    "cmd_run",
    "cmd_sweep",
    "cmd_verify",
    "execute_run",
]
