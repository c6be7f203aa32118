"""
Binary factorization files.

Layout, little endian throughout: magic b"RSMF", u32 version, u32 I,
u32 L, the dimension table (L + 1 values of |F^(l)| then L values of
|G^(l)|, all u32), then per level the sparse matrices B, P, Q, RBQ and
the index arrays R, Rc, and finally the dense coarse matrix. A sparse
matrix is u32 rows, u32 cols, u32 nnz, u32 indptr[rows + 1],
u32 indices[nnz], f8 data[nnz]; an index array is u32 length followed
by u32 values.
"""
import logging

import numpy as np
import scipy.sparse

from rte_tools.exceptions import FactorizationFormatError
from rte_tools.rsm.factorization import (
    MultilevelFactorization,
    factor_coarse,
)
from rte_tools.rsm.operators import LevelOperators


logger = logging.getLogger()

MAGIC = b"RSMF"
VERSION = 1
_U32 = np.dtype("<u4")
_F8 = np.dtype("<f8")


def _u32(*values) -> bytes:
    return np.asarray(values, dtype=_U32).tobytes()


def _sparse_bytes(matrix: scipy.sparse.csr_matrix) -> bytes:
    matrix = matrix.tocsr()
    rows, cols = matrix.shape
    return b"".join(
        [
            _u32(rows, cols, matrix.nnz),
            np.asarray(matrix.indptr, dtype=_U32).tobytes(),
            np.asarray(matrix.indices, dtype=_U32).tobytes(),
            np.asarray(matrix.data, dtype=_F8).tobytes(),
        ]
    )


def _index_bytes(values: np.ndarray) -> bytes:
    return _u32(values.size) + np.asarray(values, dtype=_U32).tobytes()


def to_bytes(fact: MultilevelFactorization) -> bytes:
    parts = [
        MAGIC,
        _u32(VERSION, fact.I, fact.L),
        _u32(*fact.f_dimensions),
    ]
    if fact.L:
        parts.append(_u32(*fact.g_dimensions))
    for op in fact.levels:
        for matrix in (op.B, op.P, op.Q, op.RBQ):
            parts.append(_sparse_bytes(matrix))
        parts.append(_index_bytes(op.R))
        parts.append(_index_bytes(op.R_check))
    n = fact.coarse_matrix.shape[0]
    parts.append(_u32(n, fact.coarse_matrix.shape[1]))
    parts.append(np.asarray(fact.coarse_matrix, dtype=_F8).tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.cursor = 0

    def take(self, dtype: np.dtype, count: int) -> np.ndarray:
        size = dtype.itemsize * count
        if self.cursor + size > len(self.data):
            raise FactorizationFormatError("Factorization file is truncated")
        values = np.frombuffer(
            self.data, dtype=dtype, count=count, offset=self.cursor
        )
        self.cursor += size
        return values

    def u32(self, count: int = 1) -> np.ndarray:
        return self.take(_U32, count).astype(np.int64)

    def sparse(self) -> scipy.sparse.csr_matrix:
        rows, cols, nnz = self.u32(3)
        indptr = self.u32(rows + 1)
        indices = self.u32(nnz)
        data = self.take(_F8, nnz).copy()
        return scipy.sparse.csr_matrix(
            (data, indices, indptr), shape=(rows, cols)
        )

    def index(self) -> np.ndarray:
        (size,) = self.u32(1)
        return self.u32(size)


def from_bytes(data: bytes) -> MultilevelFactorization:
    if data[:4] != MAGIC:
        raise FactorizationFormatError("Not a factorization file")
    reader = _Reader(data)
    reader.cursor = 4
    version, I, L = reader.u32(3)
    if version != VERSION:
        raise FactorizationFormatError(
            f"Unsupported factorization version {version}"
        )
    f_dimensions = reader.u32(L + 1)
    g_dimensions = reader.u32(L) if L else np.zeros(0, dtype=int)
    levels = []
    for level in range(L):
        B, P, Q, RBQ = (reader.sparse() for _ in range(4))
        R, R_check = reader.index(), reader.index()
        levels.append(
            LevelOperators(
                level=level, B=B, P=P, Q=Q, R=R, R_check=R_check, RBQ=RBQ
            )
        )
    rows, cols = reader.u32(2)
    coarse_matrix = reader.take(_F8, rows * cols).reshape(rows, cols).copy()
    if reader.cursor != len(data):
        raise FactorizationFormatError("Trailing bytes in factorization file")

    fact = MultilevelFactorization(
        I=int(I),
        L=int(L),
        levels=tuple(levels),
        coarse_matrix=coarse_matrix,
        coarse_lu=factor_coarse(coarse_matrix),
    )
    if list(f_dimensions) != fact.f_dimensions or list(
        g_dimensions
    ) != fact.g_dimensions:
        raise FactorizationFormatError(
            "Dimension table does not match the stored operators"
        )
    logger.debug(f"Read factorization I={I}, L={L} ({len(data)} bytes)")
    return fact
