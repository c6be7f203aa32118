import numpy as np
import pytest

from rte_tools.exceptions import DimensionMismatch
from rte_tools.oracle.checks import build_case
from rte_tools.rsm import build_factorization
from rte_tools.rsm.factorization import DenseInverse, apply_inverse


CASES = [(4, 1), (8, 1), (8, 2)]


def _relative(error, reference):
    return np.linalg.norm(error) / np.linalg.norm(reference)


@pytest.mark.parametrize("I, L", CASES)
def test_apply_inverse_matches_dense_solve(I, L):
    disc = build_case(I, L, 1, 1, 0.0, params={"epsilon": 0.5})
    build = build_factorization(disc)
    fact = build.factorization
    v = np.random.default_rng(0).standard_normal(fact.size)
    dense = DenseInverse(build.operators[0].B).solve(v)
    assert _relative(apply_inverse(fact, v) - dense, dense) < 1e-9


@pytest.mark.parametrize("delta", [0.0, 1e-3])
def test_dimension_identities(delta):
    disc = build_case(8, 2, 1, 1, delta, params={"epsilon": 1e-3})
    fact = build_factorization(disc).factorization
    f, g = fact.f_dimensions, fact.g_dimensions
    assert len(f) == fact.L + 1 and len(g) == fact.L
    for level in range(1, fact.L + 1):
        assert f[level - 1] == f[level] + g[level - 1]
    assert f[0] == disc.retained_count


def test_compression_shrinks_the_system():
    full = build_case(8, 2, 1, 1, 0.0, params={"epsilon": 1e-3})
    compressed = build_case(8, 2, 1, 1, 1e-3, params={"epsilon": 1e-3})
    assert compressed.retained_count == 4 * compressed.mesh.n_cells
    assert (
        build_factorization(compressed).factorization.size
        < build_factorization(full).factorization.size
    )


def test_single_level():
    disc = build_case(2, 0, 1, 1, 0.0, params={"epsilon": 0.5})
    fact = build_factorization(disc).factorization
    assert fact.L == 0 and fact.levels == ()
    v = np.random.default_rng(1).standard_normal(fact.size)
    x = apply_inverse(fact, v)
    assert np.allclose(fact.coarse_matrix @ x, v)


def test_apply_inverse_leaves_factorization_untouched():
    disc = build_case(4, 1, 1, 1, 0.0, params={"epsilon": 0.5})
    fact = build_factorization(disc).factorization
    coarse = fact.coarse_matrix.copy()
    P = fact.levels[0].P.toarray()
    v = np.random.default_rng(2).standard_normal(fact.size)
    first = apply_inverse(fact, v)
    second = apply_inverse(fact, v)
    assert np.array_equal(first, second)
    assert np.array_equal(coarse, fact.coarse_matrix)
    assert np.array_equal(P, fact.levels[0].P.toarray())


def test_wrong_right_hand_side():
    disc = build_case(4, 1, 1, 1, 0.0, params={"epsilon": 0.5})
    fact = build_factorization(disc).factorization
    with pytest.raises(DimensionMismatch):
        apply_inverse(fact, np.zeros(fact.size + 1))


def test_thread_count_does_not_change_results():
    serial = build_case(8, 2, 1, 1, 1e-3, params={"epsilon": 0.01})
    parallel = build_case(
        8, 2, 1, 1, 1e-3, params={"epsilon": 0.01}, threads=4
    )
    first = build_factorization(serial, threads=1).factorization
    second = build_factorization(parallel, threads=4).factorization
    v = np.random.default_rng(3).standard_normal(first.size)
    assert np.array_equal(first.coarse_matrix, second.coarse_matrix)
    assert np.array_equal(apply_inverse(first, v), apply_inverse(second, v))


def test_accounting():
    disc = build_case(8, 2, 1, 1, 0.0, params={"epsilon": 0.5})
    fact = build_factorization(disc).factorization
    assert fact.storage_size() >= fact.coarse_matrix.size
    assert fact.apply_flops(0) > fact.apply_flops(1) > 0
