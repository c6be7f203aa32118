import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse

from rte_tools.exceptions import CoarseSingular, DimensionMismatch, SizeGuard
from rte_tools.rsm.operators import LevelOperators


logger = logging.getLogger()

MAX_COARSE_CONDITION = 1e12
DENSE_ORACLE_LIMIT = 20000


@dataclass(frozen=True, slots=True, eq=False)
class MultilevelFactorization:
    """
    Recursive representation of B_0^{-1}:
    B_l^{-1} v = P_l B_{l+1}^{-1} (R_l v - R_l B_l Q_l Rc_l v)
                 + Q_l Rc_l v,
    terminating in a dense LU factorization of B_L.
    """

    I: int
    L: int
    levels: Tuple[LevelOperators, ...]
    coarse_matrix: np.ndarray
    coarse_lu: Optional[Tuple[np.ndarray, np.ndarray]]

    @property
    def f_dimensions(self) -> List[int]:
        return [op.f_dimension for op in self.levels] + [
            self.coarse_matrix.shape[1]
        ]

    @property
    def g_dimensions(self) -> List[int]:
        """|G^(l)| for l = 1..L."""
        return [op.g_dimension for op in self.levels]

    @property
    def size(self) -> int:
        return self.f_dimensions[0]

    def storage_size(self) -> int:
        """Stored doubles needed to apply the inverse."""
        stored = self.coarse_matrix.size
        for op in self.levels:
            stored += op.P.nnz + op.Q.nnz + op.RBQ.nnz
        return int(stored)

    def apply_flops(self, start_level: int = 0) -> int:
        """Floating-point operations of one apply from a given level."""
        flops = 2 * self.coarse_matrix.shape[0] ** 2
        for op in self.levels[start_level:]:
            flops += 2 * (op.Q.nnz + op.RBQ.nnz + op.P.nnz)
            flops += op.R.size + op.P.shape[0]
        return int(flops)


def factor_coarse(coarse_matrix: np.ndarray):
    if coarse_matrix.shape[0] != coarse_matrix.shape[1]:
        raise CoarseSingular(
            f"Coarse operator is not square: {coarse_matrix.shape}"
        )
    if coarse_matrix.size == 0:
        return None
    condition = np.linalg.cond(coarse_matrix)
    if not condition <= MAX_COARSE_CONDITION:
        raise CoarseSingular(
            f"Coarse operator of size {coarse_matrix.shape[0]} has "
            f"condition number {condition:.3e}"
        )
    return scipy.linalg.lu_factor(coarse_matrix)


def factorize(
    levels: List[LevelOperators],
    coarse_B: scipy.sparse.spmatrix,
    I: int,
) -> MultilevelFactorization:
    coarse_matrix = np.asarray(coarse_B.toarray(), dtype=float)
    factorization = MultilevelFactorization(
        I=I,
        L=len(levels),
        levels=tuple(levels),
        coarse_matrix=coarse_matrix,
        coarse_lu=factor_coarse(coarse_matrix),
    )
    logger.info(
        f"Factorized I={I}, L={len(levels)}: |F|="
        f"{factorization.f_dimensions}, |G|={factorization.g_dimensions}, "
        f"coarse size {coarse_matrix.shape[0]}"
    )
    return factorization


def apply_inverse(
    fact: MultilevelFactorization,
    v: np.ndarray,
    start_level: int = 0,
) -> np.ndarray:
    """
    B_l^{-1} v for the level the vector lives on; level 0 by default.
    Read-only on the factorization.
    """
    v = np.asarray(v, dtype=float)
    expected = (
        fact.levels[start_level].B.shape[0]
        if start_level < fact.L
        else fact.coarse_matrix.shape[0]
    )
    if v.shape[0] != expected:
        raise DimensionMismatch(
            f"Level-{start_level} right-hand side must have {expected} "
            f"rows, got {v.shape[0]}"
        )
    corrections = []
    for op in fact.levels[start_level:]:
        jumps = v[op.R_check]
        correction = op.Q @ jumps
        v = v[op.R] - op.RBQ @ jumps
        corrections.append((op, correction))
    if fact.coarse_lu is None:
        x = np.zeros(v.shape)
    else:
        x = scipy.linalg.lu_solve(fact.coarse_lu, v)
    for op, correction in reversed(corrections):
        x = op.P @ x + correction
    return x


class DenseInverse:
    """Dense LU of an assembled level operator, for verification."""

    def __init__(self, matrix):
        n = matrix.shape[0]
        if n > DENSE_ORACLE_LIMIT:
            raise SizeGuard(
                f"Dense oracle refused for size {n} > {DENSE_ORACLE_LIMIT}"
            )
        self.matrix = (
            matrix.toarray()
            if scipy.sparse.issparse(matrix)
            else np.asarray(matrix, dtype=float)
        )
        self._lu = scipy.linalg.lu_factor(self.matrix)

    def solve(self, v: np.ndarray) -> np.ndarray:
        return scipy.linalg.lu_solve(self._lu, v)


def dense_oracle_inverse(B0) -> DenseInverse:
    return DenseInverse(B0)
