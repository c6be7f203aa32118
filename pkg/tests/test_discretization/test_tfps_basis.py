import numpy as np
import pytest

from rte_tools.discretization.angular import build_quadrature, discrete_kernel
from rte_tools.discretization.materials import CellOptics
from rte_tools.discretization.mesh import Edge
from rte_tools.discretization.tfps_basis import (
    EIGEN_CACHE,
    Axis,
    apply_cell_operator,
    axis_eigensystem,
    build_cell_basis,
    eigen_systems,
    evaluate_basis,
    exponential_means,
    select_slow_basis,
    transport_matrix,
)
from rte_tools.exceptions import (
    ConfigurationError,
    DegenerateSpectrum,
    PointOutsideCell,
)


def _basis(epsilon=0.5, h=0.25, n_polar=2, n_azimuth=1, g=0.0, delta=0.0):
    quad = build_quadrature(n_polar, n_azimuth)
    kernel = discrete_kernel(quad, g)
    optics = CellOptics.from_means(1.0, 0.5, epsilon, cell=0)
    x_sys, y_sys = eigen_systems(optics, quad, kernel)
    basis = build_cell_basis(optics, x_sys, y_sys, (0.0, h, 0.0, h), 0)
    return quad, kernel, optics, select_slow_basis(basis, delta)


@pytest.mark.parametrize("axis", [Axis.X, Axis.Y])
def test_eigen_residual(axis):
    quad = build_quadrature(2, 2)
    kernel = discrete_kernel(quad, 0.0)
    system = axis_eigensystem(0.9, quad, kernel, axis)
    matrix = transport_matrix(0.9, quad, kernel, axis)
    residual = (
        matrix @ system.eigenvectors
        - system.eigenvectors * system.eigenvalues[None, :]
    )
    assert np.max(np.abs(residual)) < 1e-10 * np.max(
        np.abs(system.eigenvalues)
    )
    assert np.all(np.diff(system.eigenvalues) >= 0.0)
    assert np.allclose(np.max(np.abs(system.eigenvectors), axis=0), 1.0)


def test_spectrum_is_paired():
    quad = build_quadrature(3, 1)
    kernel = discrete_kernel(quad, 0.0)
    lambdas = axis_eigensystem(0.99, quad, kernel, Axis.X).eigenvalues
    assert np.allclose(lambdas, -lambdas[::-1], atol=1e-10)
    assert np.all(lambdas != 0.0)


def test_basis_layout():
    quad, _, optics, basis = _basis()
    assert basis.size == 2 * quad.size
    assert basis.axes == (Axis.X,) * quad.size + (Axis.Y,) * quad.size
    for k in range(basis.size):
        if basis.axes[k] == Axis.X:
            expected = Edge.LEFT if basis.lambdas[k] <= 0 else Edge.RIGHT
        else:
            expected = Edge.BOTTOM if basis.lambdas[k] <= 0 else Edge.TOP
        assert basis.anchors[k] == expected
    assert len(basis.anchored_at(Edge.LEFT)) == quad.size // 2
    assert np.allclose(
        basis.center_magnitude,
        np.exp(-np.abs(basis.lambdas) * optics.Sigma_t * basis.h / 2.0),
    )


def test_basis_functions_are_annihilated():
    quad, kernel, optics, basis = _basis(epsilon=0.2)
    rng = np.random.default_rng(0)
    collision = optics.sigma_T_bar / optics.epsilon_bar**2
    for x, y in rng.uniform(0.0, basis.h, size=(5, 2)):
        for f in basis.functions:
            value = evaluate_basis(f, (x, y))
            rate = f.lam * f.Sigma_t
            dx = rate * value if f.axis == Axis.X else 0.0 * value
            dy = rate * value if f.axis == Axis.Y else 0.0 * value
            applied = apply_cell_operator(
                optics, quad, kernel, value, dx, dy
            )
            assert np.max(np.abs(applied)) <= 1e-9 * collision * np.max(
                np.abs(value)
            )


def test_values_match_single_functions():
    _, _, _, basis = _basis()
    values = basis.values(0.1, 0.2)
    for k, f in enumerate(basis.functions):
        assert np.allclose(values[:, k], evaluate_basis(f, (0.1, 0.2)))


def test_averages_are_cell_means():
    _, _, _, basis = _basis(epsilon=0.1)
    nodes, weights = np.polynomial.legendre.leggauss(20)
    points = 0.5 * basis.h * (nodes + 1.0)
    mean = sum(
        wx * wy * basis.values(x, y)
        for x, wx in zip(points, weights)
        for y, wy in zip(points, weights)
    ) / 4.0
    assert np.allclose(basis.averages(), mean, atol=1e-12)


def test_exponential_means():
    means = exponential_means(np.array([0.0, 1e-8, 1.0, 1e3]))
    assert means[0] == 1.0
    assert means[1] == pytest.approx(1.0)
    assert means[2] == pytest.approx(1.0 - np.exp(-1.0))
    assert means[3] == pytest.approx(1e-3)


def test_point_outside_cell():
    _, _, _, basis = _basis()
    with pytest.raises(PointOutsideCell):
        evaluate_basis(basis.function(0), (0.5, 0.1))


def test_threshold_zero_keeps_everything():
    _, _, _, basis = _basis(delta=0.0)
    assert basis.retained.size == basis.size
    assert basis.discarded.size == 0


def test_threshold_one_discards_everything():
    _, _, _, basis = _basis(delta=1.0)
    assert basis.retained.size == 0
    assert all(v.size == 0 for v in basis.retained_by_edge.values())


def test_negative_threshold():
    _, _, _, basis = _basis()
    with pytest.raises(ConfigurationError):
        select_slow_basis(basis, -1e-3)


def test_diffusive_cell_keeps_four_modes():
    _, _, _, basis = _basis(
        epsilon=1e-3, h=1.0 / 32, n_polar=1, n_azimuth=1, delta=1e-3
    )
    assert basis.retained.size == 4
    assert all(v.size == 1 for v in basis.retained_by_edge.values())


def test_diffusive_cell_spectral_gap():
    # eps = 0.01 and h = 1/32: the cell is three mean free paths wide, so
    # the fast modes still reach the center at a few percent
    _, _, optics, basis = _basis(
        epsilon=0.01, h=1.0 / 32, n_polar=1, n_azimuth=1, delta=1e-3
    )
    assert optics.Sigma_t == pytest.approx(100.0)
    order = np.argsort(np.abs(basis.lambdas))
    slow, fast = order[:4], order[4:]
    assert np.all(basis.center_magnitude[slow] > 0.9)
    assert np.all(basis.center_magnitude[fast] < 0.25)
    assert np.all(basis.center_magnitude[fast] > 1e-3)
    assert basis.retained.size == basis.size
    gap = select_slow_basis(basis, 0.5)
    assert sorted(gap.retained) == sorted(slow)
    assert all(v.size == 1 for v in gap.retained_by_edge.values())


def test_thick_diffusive_cell_keeps_four_modes():
    _, _, _, basis = _basis(
        epsilon=0.01, h=1.0 / 8, n_polar=1, n_azimuth=1, delta=1e-3
    )
    assert basis.retained.size == 4


def test_transport_cell_keeps_all_modes():
    quad, _, _, basis = _basis(
        epsilon=1.0, h=1.0 / 32, n_polar=1, n_azimuth=1, delta=1e-3
    )
    assert basis.retained.size == 2 * quad.size


def test_threshold_monotone():
    _, _, _, basis = _basis(epsilon=0.01, h=1.0 / 16, n_polar=3)
    counts = [
        select_slow_basis(basis, delta).retained.size
        for delta in (0.0, 1e-8, 1e-4, 1e-2, 0.5, 1.0)
    ]
    assert counts == sorted(counts, reverse=True)


def test_eigen_memo_reuses_systems():
    quad = build_quadrature(1, 2)
    kernel = discrete_kernel(quad, 0.0)
    EIGEN_CACHE.clear()
    first = eigen_systems(CellOptics.from_means(1.0, 0.5, 0.5), quad, kernel)
    second = eigen_systems(CellOptics.from_means(2.0, 1.0, 0.5), quad, kernel)
    assert first is second
    assert len(EIGEN_CACHE) == 1


def test_absorption_free_cell():
    quad = build_quadrature(1, 1)
    kernel = discrete_kernel(quad, 0.0)
    with pytest.raises(DegenerateSpectrum):
        eigen_systems(CellOptics.from_means(1.0, 0.0, 0.5), quad, kernel)
