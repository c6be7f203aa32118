import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from rte_tools.discretization.expressions import parse_expression
from rte_tools.exceptions import MaterialError, UnknownFieldError


logger = logging.getLogger()

Coefficient = Callable[[np.ndarray, np.ndarray], np.ndarray]
Rectangle = Tuple[float, float, float, float]

# Diffusive blocks of the lattice benchmark on an 8 x 8 block grid,
# given as (x0, x1, y0, y1). Approximates the usual checkerboard layout
# and stays aligned with dyadic meshes of at least 8 cells per axis.
DEFAULT_LATTICE_RECTANGLES: Tuple[Rectangle, ...] = tuple(
    (i / 8, (i + 1) / 8, j / 8, (j + 1) / 8)
    for i in range(1, 7)
    for j in range(1, 7)
    if (i + j) % 2 == 0 and not (i in (3, 4) and j in (3, 4))
)

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(3)


@dataclass(frozen=True, slots=True, eq=False)
class MaterialField:
    sigma_T: Coefficient
    sigma_a: Coefficient
    epsilon: Coefficient
    description: str

    def __call__(
        self, x, y
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return (
            np.broadcast_to(self.sigma_T(x, y), x.shape),
            np.broadcast_to(self.sigma_a(x, y), x.shape),
            np.broadcast_to(self.epsilon(x, y), x.shape),
        )


@dataclass(frozen=True, slots=True)
class CellOptics:
    cell: Optional[int]
    sigma_T_bar: float
    sigma_a_bar: float
    epsilon_bar: float
    Sigma_t: float
    Sigma_s: float
    rho: float

    @classmethod
    def from_means(
        cls,
        sigma_T_bar: float,
        sigma_a_bar: float,
        epsilon_bar: float,
        cell: Optional[int] = None,
    ) -> "CellOptics":
        if not sigma_T_bar > 0.0:
            raise MaterialError(f"sigma_T must be positive, got {sigma_T_bar}")
        if not sigma_a_bar >= 0.0:
            raise MaterialError(
                f"sigma_a must be nonnegative, got {sigma_a_bar}"
            )
        if not 0.0 < epsilon_bar <= 1.0:
            raise MaterialError(
                f"epsilon must lie in (0, 1], got {epsilon_bar}"
            )
        Sigma_t = sigma_T_bar / epsilon_bar
        Sigma_s = Sigma_t - epsilon_bar * sigma_a_bar
        if Sigma_s < 0.0:
            raise MaterialError(
                "Effective scattering is negative: sigma_T < "
                f"epsilon^2 * sigma_a in cell {cell}"
            )
        return cls(
            cell=cell,
            sigma_T_bar=float(sigma_T_bar),
            sigma_a_bar=float(sigma_a_bar),
            epsilon_bar=float(epsilon_bar),
            Sigma_t=float(Sigma_t),
            Sigma_s=float(Sigma_s),
            rho=float(Sigma_s / Sigma_t),
        )


def gauss_points(
    bounds: Rectangle,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    3 x 3 tensor Gauss points on a rectangle and weights normalized to
    sum to one, so a weighted sum is a cell mean.
    """
    x0, x1, y0, y1 = bounds
    xs = x0 + 0.5 * (x1 - x0) * (_GAUSS_NODES + 1.0)
    ys = y0 + 0.5 * (y1 - y0) * (_GAUSS_NODES + 1.0)
    x, y = np.meshgrid(xs, ys, indexing="ij")
    weights = np.outer(_GAUSS_WEIGHTS, _GAUSS_WEIGHTS).ravel()
    return x.ravel(), y.ravel(), weights / weights.sum()


def _mean(weights: np.ndarray, values: np.ndarray) -> float:
    # rounding may not push a mean outside the sampled range
    return float(np.clip(weights @ values, values.min(), values.max()))


def cell_average(
    field: MaterialField, bounds: Rectangle, cell: Optional[int] = None
) -> CellOptics:
    x, y, weights = gauss_points(bounds)
    sigma_T, sigma_a, epsilon = field(x, y)
    if not (
        np.all(np.isfinite(sigma_T))
        and np.all(np.isfinite(sigma_a))
        and np.all(np.isfinite(epsilon))
    ):
        raise MaterialError(
            f"Field '{field.description}' is not finite on cell {bounds}"
        )
    if np.any(sigma_T <= 0.0) or np.any(epsilon <= 0.0) or np.any(
        epsilon > 1.0
    ):
        raise MaterialError(
            f"Field '{field.description}' violates sigma_T > 0 or "
            f"epsilon in (0, 1] on cell {bounds}"
        )
    return CellOptics.from_means(
        _mean(weights, sigma_T),
        _mean(weights, sigma_a),
        _mean(weights, epsilon),
        cell=cell,
    )


def _constant(value: float) -> Coefficient:
    return lambda x, y: np.full(np.broadcast(x, y).shape, float(value))


def _inside_any(
    x: np.ndarray, y: np.ndarray, rectangles: Sequence[Rectangle]
) -> np.ndarray:
    inside = np.zeros(np.broadcast(x, y).shape, dtype=bool)
    for x0, x1, y0, y1 in rectangles:
        inside |= (x >= x0) & (x < x1) & (y >= y0) & (y < y1)
    return inside


def _constant_field(params: Dict) -> MaterialField:
    sigma_T = params.get("sigma_T", 1.0)
    sigma_a = params.get("sigma_a", 0.5)
    epsilon = params.get("epsilon", 1.0)
    return MaterialField(
        sigma_T=_constant(sigma_T),
        sigma_a=_constant(sigma_a),
        epsilon=_constant(epsilon),
        description=f"constant({sigma_T}, {sigma_a}, {epsilon})",
    )


def _lattice_field(params: Dict) -> MaterialField:
    rectangles = tuple(
        tuple(rectangle)
        for rectangle in (
            params.get("rectangles") or DEFAULT_LATTICE_RECTANGLES
        )
    )
    for rectangle in rectangles:
        x0, x1, y0, y1 = rectangle
        if not (0.0 <= x0 < x1 <= 1.0 and 0.0 <= y0 < y1 <= 1.0):
            raise MaterialError(
                f"Lattice rectangle {rectangle} is not inside [0,1]^2"
            )
    eps_diffusive = params.get("epsilon_diffusive", 0.01)
    eps_transport = params.get("epsilon_transport", 1.0)

    def epsilon(x, y):
        return np.where(
            _inside_any(x, y, rectangles), eps_diffusive, eps_transport
        )

    return MaterialField(
        sigma_T=_constant(params.get("sigma_T", 1.0)),
        sigma_a=_constant(params.get("sigma_a", 0.5)),
        epsilon=epsilon,
        description=f"lattice({len(rectangles)} diffusive blocks)",
    )


def _bufferzone_field(params: Dict) -> MaterialField:
    return MaterialField(
        sigma_T=lambda x, y: 1.0 + x**2 + y**2,
        sigma_a=lambda x, y: 0.5 + x**2 + y**2,
        epsilon=lambda x, y: 0.02 * x + 0.001,
        description="bufferzone",
    )


def _expression_field(params: Dict) -> MaterialField:
    coefficients = {}
    for name in ("sigma_T", "sigma_a", "epsilon"):
        value = params.get(name)
        if value is None:
            raise MaterialError(f"Expression field is missing '{name}'")
        if isinstance(value, str):
            coefficients[name] = parse_expression(value)
        else:
            coefficients[name] = _constant(value)
    return MaterialField(
        **coefficients,
        description="expression("
        + ", ".join(str(params[name]) for name in coefficients)
        + ")",
    )


BUILTIN_FIELDS = {
    "constant": _constant_field,
    "lattice": _lattice_field,
    "bufferzone": _bufferzone_field,
    "expression": _expression_field,
}


def builtin_fields(name: str, params: Optional[Dict] = None) -> MaterialField:
    try:
        factory = BUILTIN_FIELDS[name]
    except KeyError as e:
        raise UnknownFieldError(f"No such material field: {str(e)}") from e
    return factory(params or {})
