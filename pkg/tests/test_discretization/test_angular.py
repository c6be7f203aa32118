import numpy as np
import pytest

from rte_tools.discretization.angular import (
    QUADRANT_SIGNS,
    build_quadrature,
    discrete_kernel,
    scalar_flux,
)
from rte_tools.exceptions import KernelError, QuadratureError


QUADRATURES = [(1, 1), (2, 1), (1, 3), (3, 2), (5, 2)]


@pytest.mark.parametrize("n_polar, n_azimuth", QUADRATURES)
def test_weights_sum_to_one(n_polar, n_azimuth):
    quad = build_quadrature(n_polar, n_azimuth)
    assert quad.size == 4 * n_polar * n_azimuth
    assert np.isclose(quad.weights.sum(), 1.0, atol=1e-14)
    assert np.all(quad.weights > 0.0)


def test_directions_ordered_by_quadrant():
    quad = build_quadrature(2, 3)
    for quadrant, (sign_c, sign_s) in enumerate(QUADRANT_SIGNS):
        block = slice(quadrant * quad.M, (quadrant + 1) * quad.M)
        assert np.all(np.sign(quad.c[block]) == sign_c)
        assert np.all(np.sign(quad.s[block]) == sign_s)
    # polar node outer, azimuth inner
    first = quad.c[:3] ** 2 + quad.s[:3] ** 2
    assert np.allclose(first, first[0])


def test_projected_directions_inside_unit_disc():
    quad = build_quadrature(3, 2)
    radius = quad.c**2 + quad.s**2
    assert np.all(radius < 1.0)
    assert np.all(quad.c != 0.0) and np.all(quad.s != 0.0)


def test_invalid_quadrature():
    with pytest.raises(QuadratureError) as e:
        build_quadrature(0, 2)
    assert "positive" in str(e)


def test_incoming_directions():
    quad = build_quadrature(2, 2)
    left = quad.incoming((-1.0, 0.0))
    assert left.size == 2 * quad.M
    assert np.all(quad.c[left] > 0.0)
    top = quad.incoming((0.0, 1.0))
    assert np.all(quad.s[top] < 0.0)


def test_mirror_flips_signs():
    quad = build_quadrature(2, 2)
    permutation = quad.mirror(flip_c=True, flip_s=False)
    assert np.allclose(quad.c[permutation], -quad.c)
    assert np.allclose(quad.s[permutation], quad.s)
    both = quad.mirror(flip_c=True, flip_s=True)
    assert np.allclose(quad.c[both], -quad.c)
    assert np.allclose(quad.s[both], -quad.s)


def test_isotropic_kernel_is_all_ones():
    quad = build_quadrature(2, 1)
    kernel = discrete_kernel(quad, 0.0)
    assert kernel.is_isotropic
    assert np.array_equal(kernel.entries, np.ones((quad.size, quad.size)))


@pytest.mark.parametrize("g", [-0.5, 0.3, 0.9])
def test_anisotropic_kernel_is_normalized(g):
    quad = build_quadrature(3, 2)
    kernel = discrete_kernel(quad, g)
    assert not kernel.is_isotropic
    assert np.allclose(kernel.entries @ quad.weights, 1.0, atol=1e-13)
    assert np.all(kernel.entries > 0.0)


@pytest.mark.parametrize("g", [1.0, -1.0, 1.5])
def test_invalid_anisotropy(g):
    quad = build_quadrature(1, 1)
    with pytest.raises(KernelError):
        discrete_kernel(quad, g)


def test_scalar_flux():
    quad = build_quadrature(2, 2)
    assert np.isclose(scalar_flux(quad, np.ones(quad.size)), 1.0)
    grid = np.ones((3, 3, quad.size)) * 2.0
    assert np.allclose(scalar_flux(quad, grid), 2.0)
