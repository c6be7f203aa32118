from typing import Iterable, List, Optional, Sequence

import numpy as np

from rte_tools.exceptions import DimensionMismatch


def error_norm(f: np.ndarray, I: int, M: int) -> float:
    """
    Grid norm (h / sqrt(M)) * sqrt(sum of squares) of cell-center samples
    on the unit square. f has I*I points and 4M components.
    """
    f = np.asarray(f, dtype=float)
    if f.size != I * I * 4 * M or f.shape[-1] != 4 * M:
        raise DimensionMismatch(
            f"Expected {I} x {I} samples of {4 * M} components, "
            f"got shape {f.shape}"
        )
    h = 1.0 / I
    return float(h / np.sqrt(M) * np.sqrt(np.sum(f**2)))


def promote_scalar(phi: np.ndarray, M: int) -> np.ndarray:
    """Copy a scalar field into all 4M components."""
    phi = np.asarray(phi, dtype=float)
    return np.repeat(phi[..., None], 4 * M, axis=-1)


def relative_error(
    approximation: np.ndarray, reference: np.ndarray, I: int, M: int
) -> float:
    scale = error_norm(reference, I, M)
    difference = error_norm(approximation - reference, I, M)
    if scale == 0.0:
        return difference
    return difference / scale


def rank_ratio(bases: Iterable) -> float:
    """Retained over total basis count."""
    retained, total = 0, 0
    for basis in bases:
        retained += basis.retained.size
        total += basis.size
    return retained / total


def convergence_orders(errors: Sequence[float]) -> List[Optional[float]]:
    """log2(e_coarse / e_fine) for consecutive halvings of h."""
    orders: List[Optional[float]] = [None]
    for coarse, fine in zip(errors, errors[1:]):
        if coarse > 0.0 and fine > 0.0:
            orders.append(float(np.log2(coarse / fine)))
        else:
            orders.append(None)
    return orders


def timing_orders(
    seconds: Sequence[float], hs: Sequence[float]
) -> List[Optional[float]]:
    """Growth exponent of run time in 1/h between consecutive runs."""
    orders: List[Optional[float]] = [None]
    for i in range(1, len(seconds)):
        earlier, later = seconds[i - 1], seconds[i]
        if earlier > 0.0 and later > 0.0 and hs[i - 1] != hs[i]:
            orders.append(
                float(np.log(later / earlier) / np.log(hs[i - 1] / hs[i]))
            )
        else:
            orders.append(None)
    return orders


def fit_exponent(sizes: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log(values) against log(sizes)."""
    slope, _ = np.polyfit(np.log(sizes), np.log(values), 1)
    return float(slope)
