from typing import List


class QuadratureError(Exception):
    ...


class KernelError(Exception):
    ...


class MaterialError(Exception):
    ...


class ExpressionError(MaterialError):
    ...


class UnknownFieldError(MaterialError):
    ...


class MeshError(Exception):
    ...


class PointOutsideCell(Exception):
    ...


class DimensionMismatch(Exception):
    ...


class SizeGuard(Exception):
    ...


class FactorizationFormatError(Exception):
    ...


class NumericalError(Exception):
    """
    Base class for failures of the numerical pipeline.
    The command line maps these to exit code 2.
    """


class NonRealSpectrum(NumericalError):
    ...


class DegenerateSpectrum(NumericalError):
    ...


class RankDeficient(NumericalError):
    ...


class SingularLocalSystem(NumericalError):
    ...


class CoarseSingular(NumericalError):
    ...


class SingularCellSystem(NumericalError):
    ...


class SingularSystem(NumericalError):
    ...


class NoConvergence(NumericalError):
    iterations: int
    residual: float

    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"Fixed-point iteration stopped after {iterations} iterations "
            f"with successive difference {residual:.3e}"
        )


class ConfigurationError(Exception):
    errors: List[str] = []

    def __init__(self, source: str, errors: List[str]):
        self.errors = errors
        super().__init__(f"Errors found while validating {source}")


class VerificationFailure(Exception):
    errors: List[str] = []

    def __init__(self, source: str, errors: List[str]):
        self.errors = errors
        super().__init__(f"Verification failed for {source}")
