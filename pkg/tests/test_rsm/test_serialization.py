import numpy as np
import pytest

from rte_tools.exceptions import FactorizationFormatError
from rte_tools.oracle.checks import build_case
from rte_tools.rsm import build_factorization, serialization
from rte_tools.rsm.factorization import apply_inverse


@pytest.fixture(scope="module")
def factorization():
    disc = build_case(8, 2, 1, 1, 1e-3, params={"epsilon": 0.01})
    return build_factorization(disc).factorization


def test_stored_factorization_applies_identically(factorization):
    restored = serialization.from_bytes(serialization.to_bytes(factorization))
    assert restored.I == factorization.I and restored.L == factorization.L
    assert restored.f_dimensions == factorization.f_dimensions
    assert restored.g_dimensions == factorization.g_dimensions
    v = np.random.default_rng(0).standard_normal(factorization.size)
    expected = apply_inverse(factorization, v)
    assert np.max(np.abs(apply_inverse(restored, v) - expected)) <= 1e-12 * (
        np.max(np.abs(expected))
    )


def test_header(factorization):
    data = serialization.to_bytes(factorization)
    assert data[:4] == b"RSMF"
    version, I, L = np.frombuffer(data[4:16], dtype="<u4")
    assert (version, I, L) == (serialization.VERSION, 8, 2)


def test_bad_magic(factorization):
    data = serialization.to_bytes(factorization)
    with pytest.raises(FactorizationFormatError):
        serialization.from_bytes(b"XXXX" + data[4:])


def test_truncated(factorization):
    data = serialization.to_bytes(factorization)
    with pytest.raises(FactorizationFormatError) as e:
        serialization.from_bytes(data[: len(data) // 2])
    assert "truncated" in str(e)


def test_trailing_bytes(factorization):
    data = serialization.to_bytes(factorization)
    with pytest.raises(FactorizationFormatError):
        serialization.from_bytes(data + b"\x00" * 8)


def test_unsupported_version(factorization):
    data = bytearray(serialization.to_bytes(factorization))
    data[4:8] = np.array([99], dtype="<u4").tobytes()
    with pytest.raises(FactorizationFormatError) as e:
        serialization.from_bytes(bytes(data))
    assert "version" in str(e)
