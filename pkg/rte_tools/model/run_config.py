from enum import Enum
from typing import List, Optional, Union

from pydantic import BaseModel, Field, conlist, model_validator

from rte_tools.discretization.expressions import parse_expression
from rte_tools.discretization.mesh import COARSEST_CELL_COUNTS
from rte_tools.exceptions import ExpressionError
from rte_tools.solver.time_stepping import SteppingMode


RELATIVE_TOLERANCE = 1e-9


class MaterialName(str, Enum):
    CONSTANT = "constant"
    LATTICE = "lattice"
    BUFFERZONE = "bufferzone"
    EXPRESSION = "expression"


class Benchmark(str, Enum):
    LATTICE = "lattice"
    BUFFERZONE = "bufferzone"


class ProblemKind(str, Enum):
    MANUFACTURED = "manufactured"
    BENCHMARK = "benchmark"
    CONSTANT = "constant"
    CUSTOM = "custom"


class Artifact(str, Enum):
    SCALAR_FLUX = "scalar_flux"
    MANIFEST = "manifest"
    BASIS_COUNTS = "basis_counts"


def _is_multiple(T: float, dt: float) -> bool:
    steps = T / dt
    return abs(steps - round(steps)) <= RELATIVE_TOLERANCE * max(steps, 1.0)


def _time_errors(dt: float, T: float, mode: SteppingMode) -> List[str]:
    errors = []
    if dt > T:
        errors.append(f"dt={dt} exceeds T={T}")
    elif not _is_multiple(T, dt):
        errors.append(f"T={T} is not an integer multiple of dt={dt}")
    if mode == SteppingMode.CELL_AVERAGE and not dt < 1.0:
        errors.append(
            f"dt={dt}: cell_average mode relaxes each iteration with "
            "weight dt and needs dt < 1; use mode cell_center for larger "
            "steps"
        )
    return errors


class MeshConfig(BaseModel, extra="forbid"):
    I: int = Field(ge=1)
    L: int = Field(ge=0)

    @model_validator(mode="after")
    def validate_dyadic(self):
        coarsest, remainder = divmod(self.I, 1 << self.L)
        if remainder or coarsest not in COARSEST_CELL_COUNTS:
            raise ValueError(
                f"I={self.I} must equal I_L * 2^L with I_L in "
                f"{COARSEST_CELL_COUNTS} for L={self.L}"
            )
        return self


class QuadratureConfig(BaseModel, extra="forbid"):
    n_polar: int = Field(ge=1)
    n_azimuth: int = Field(ge=1)


class KernelConfig(BaseModel, extra="forbid"):
    g: float = Field(default=0.0, gt=-1.0, lt=1.0)


class MaterialConfig(BaseModel, extra="forbid"):
    name: MaterialName
    sigma_T: Optional[Union[float, str]] = None
    sigma_a: Optional[Union[float, str]] = None
    epsilon: Optional[Union[float, str]] = None
    rectangles: Optional[
        List[conlist(float, min_length=4, max_length=4)]
    ] = None
    epsilon_diffusive: Optional[float] = Field(default=None, gt=0.0, le=1.0)
    epsilon_transport: Optional[float] = Field(default=None, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def validate_material(self):
        coefficients = {
            "sigma_T": self.sigma_T,
            "sigma_a": self.sigma_a,
            "epsilon": self.epsilon,
        }
        if self.name == MaterialName.EXPRESSION:
            missing = [k for k, v in coefficients.items() if v is None]
            if missing:
                raise ValueError(
                    f"Expression material is missing {', '.join(missing)}"
                )
        elif self.name == MaterialName.CONSTANT:
            strings = [
                k for k, v in coefficients.items() if isinstance(v, str)
            ]
            if strings:
                raise ValueError(
                    "Constant material takes numbers, use name "
                    f"'expression' for {', '.join(strings)}"
                )
        for name, value in coefficients.items():
            if isinstance(value, str):
                try:
                    parse_expression(value)
                except ExpressionError as e:
                    raise ValueError(f"{name}: {e}")
        for rectangle in self.rectangles or []:
            x0, x1, y0, y1 = rectangle
            if not (0.0 <= x0 < x1 <= 1.0 and 0.0 <= y0 < y1 <= 1.0):
                raise ValueError(
                    f"Lattice rectangle {rectangle} is not inside [0,1]^2"
                )
        return self

    def params(self) -> dict:
        return self.model_dump(exclude={"name"}, exclude_none=True)


class CompressionConfig(BaseModel, extra="forbid"):
    delta: float = Field(default=1e-3, ge=0.0)


class TimeConfig(BaseModel, extra="forbid"):
    dt: float = Field(gt=0.0)
    T: float = Field(gt=0.0)
    mode: SteppingMode = SteppingMode.CELL_AVERAGE
    tol: float = Field(default=1e-10, gt=0.0)
    max_iters: int = Field(default=10000, ge=1)

    @model_validator(mode="after")
    def validate_steps(self):
        errors = _time_errors(self.dt, self.T, self.mode)
        if errors:
            raise ValueError("; ".join(errors))
        return self


class ProblemConfig(BaseModel, extra="forbid"):
    kind: ProblemKind
    value: float = 1.0
    initial: Optional[str] = None
    source: Optional[str] = None
    boundary: Optional[str] = None

    @model_validator(mode="after")
    def validate_expressions(self):
        expressions = {
            "initial": self.initial,
            "source": self.source,
            "boundary": self.boundary,
        }
        given = [k for k, v in expressions.items() if v is not None]
        if self.kind != ProblemKind.CUSTOM and given:
            raise ValueError(
                f"{', '.join(given)} only apply to problem kind 'custom'"
            )
        for name, value in expressions.items():
            if value is None:
                continue
            try:
                parse_expression(value, ("x", "y", "t"))
            except ExpressionError as e:
                raise ValueError(f"{name}: {e}")
        return self


class OutputConfig(BaseModel, extra="forbid"):
    directory: str = "output"
    artifacts: List[Artifact] = [Artifact.SCALAR_FLUX, Artifact.MANIFEST]
    snapshots: Optional[conlist(float, min_length=1)] = None


class RunConfig(BaseModel, extra="forbid"):
    mesh: MeshConfig
    quadrature: QuadratureConfig
    kernel: KernelConfig = KernelConfig()
    material: MaterialConfig
    compression: CompressionConfig = CompressionConfig()
    time: TimeConfig
    problem: ProblemConfig
    output: OutputConfig = OutputConfig()

    @model_validator(mode="after")
    def validate_run(self):
        needs_constant = (ProblemKind.MANUFACTURED, ProblemKind.CONSTANT)
        if self.problem.kind in needs_constant:
            if self.material.name != MaterialName.CONSTANT:
                raise ValueError(
                    f"Problem kind '{self.problem.kind.value}' needs a "
                    "constant material"
                )
        if self.problem.kind == ProblemKind.MANUFACTURED and self.kernel.g:
            raise ValueError("The manufactured problem is isotropic, set g=0")
        for t in self.output.snapshots or []:
            if not 0.0 <= t <= self.time.T or not (
                t == 0.0 or _is_multiple(t, self.time.dt)
            ):
                raise ValueError(
                    f"Snapshot t={t} is not a time step in [0, T]"
                )
        return self


class ConvergenceStudyConfig(BaseModel, extra="forbid"):
    Ms: conlist(int, min_length=1)
    epsilons: conlist(float, min_length=1)
    hs: conlist(float, min_length=1)
    delta: float = Field(default=1e-3, ge=0.0)
    sigma_T: float = Field(default=1.0, gt=0.0)
    sigma_a: float = Field(default=0.5, gt=0.0)
    T: float = Field(default=1.0, gt=0.0)
    mode: SteppingMode = SteppingMode.CELL_AVERAGE
    output: OutputConfig = OutputConfig()

    @model_validator(mode="after")
    def validate_grid(self):
        errors = []
        for M in self.Ms:
            if M < 1:
                errors.append(f"M={M} must be positive")
        for eps in self.epsilons:
            if not 0.0 < eps <= 1.0:
                errors.append(f"epsilon={eps} must lie in (0, 1]")
        for h in self.hs:
            I = round(1.0 / h) if h > 0.0 else 0
            if I < 2 or abs(I * h - 1.0) > RELATIVE_TOLERANCE or I & (I - 1):
                errors.append(f"h={h} must be 1/I with I a power of two")
                continue
            errors.extend(_time_errors(h, self.T, self.mode))
        if errors:
            raise ValueError("; ".join(errors))
        return self


class SweepStudyConfig(BaseModel, extra="forbid"):
    benchmark: Benchmark
    Ms: conlist(int, min_length=1)
    deltas: Optional[conlist(float, min_length=1)] = None
    rank_ratios: Optional[conlist(float, min_length=1)] = None
    I: int = 16
    dt: float = Field(default=1.0 / 16.0, gt=0.0)
    T: float = Field(default=1.0, gt=0.0)
    g: float = Field(default=0.0, gt=-1.0, lt=1.0)
    flux_delta: Optional[float] = None
    mode: SteppingMode = SteppingMode.CELL_AVERAGE
    output: OutputConfig = OutputConfig()

    @model_validator(mode="after")
    def validate_sweep(self):
        errors = []
        if (self.deltas is None) == (self.rank_ratios is None):
            errors.append("Give exactly one of deltas and rank_ratios")
        if any(delta < 0.0 for delta in self.deltas or []):
            errors.append("deltas must be nonnegative")
        if any(not 0.0 <= r <= 1.0 for r in self.rank_ratios or []):
            errors.append("rank_ratios must lie in [0, 1]")
        if self.I < 2 or self.I & (self.I - 1):
            errors.append(f"I={self.I} must be a power of two")
        errors.extend(_time_errors(self.dt, self.T, self.mode))
        if errors:
            raise ValueError("; ".join(errors))
        return self
