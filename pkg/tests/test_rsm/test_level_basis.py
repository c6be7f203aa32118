import numpy as np
import pytest

from rte_tools.oracle.checks import (
    RECOVERY_TOLERANCE,
    SPLIT_TOLERANCE,
    TWO_LEVEL_TOLERANCE,
    build_case,
    localization_residual,
    recovery_residual,
    split_residual,
    two_level_residual,
)
from rte_tools.rsm import build_factorization
from rte_tools.rsm.level_basis import lift_F_basis, lift_G_basis


@pytest.fixture(scope="module", params=[0.0, 1e-3])
def diffusive_build(request):
    disc = build_case(8, 2, 1, 1, request.param, params={"epsilon": 1e-3})
    return disc, build_factorization(disc)


def test_coefficient_recovery(diffusive_build):
    disc, build = diffusive_build
    rng = np.random.default_rng(0)
    assert recovery_residual(disc, build, rng) <= RECOVERY_TOLERANCE


@pytest.mark.parametrize("level", [1, 2])
def test_split_of_nested_spaces(diffusive_build, level):
    _, build = diffusive_build
    rng = np.random.default_rng(level)
    assert split_residual(build, level, rng) <= SPLIT_TOLERANCE


@pytest.mark.parametrize("level", [1, 2])
def test_g_functions_are_local(diffusive_build, level):
    disc, build = diffusive_build
    assert localization_residual(disc, build, level) == 0.0


@pytest.mark.parametrize("level", [0, 1])
def test_two_level_inversion(diffusive_build, level):
    _, build = diffusive_build
    rng = np.random.default_rng(10 + level)
    assert two_level_residual(build, level, rng) <= TWO_LEVEL_TOLERANCE


def test_level_basis_sizes(diffusive_build):
    disc, build = diffusive_build
    bases = build.level_bases
    assert [basis.level for basis in bases] == [0, 1, 2]
    for level, basis in enumerate(bases):
        assert len(basis.cells) == disc.mesh.cells_per_axis(level) ** 2
        assert basis.offsets[-1] == basis.dimension
    assert bases[0].dimension == disc.retained_count
    for level in (1, 2):
        assert (
            bases[level - 1].dimension
            == bases[level].dimension + bases[level].g_dimension
        )


def _inner_jumps(disc, previous, level, cell):
    """Projected jumps at the removed interfaces inside a level-l cell."""
    mesh = disc.mesh
    children = mesh.children(level, cell)
    sizes = [previous.cells[child].size for child in children]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    blocks = []
    for j in mesh.inner_interfaces(level, cell):
        interface = disc.projections[j].interface
        block = np.zeros((disc.projections[j].n_slow, offsets[-1]))
        for fine_cell, sign in (
            (interface.plus_cell, 1.0),
            (interface.minus_cell, -1.0),
        ):
            index = children.index(
                mesh.level_cell_of_fine(level - 1, fine_cell)
            )
            block[:, offsets[index]:offsets[index + 1]] += (
                sign * previous.cells[children[index]].traces[j]
            )
        blocks.append(block)
    return np.vstack(blocks)


def test_lifted_f_and_g_functions(diffusive_build):
    disc, build = diffusive_build
    previous = build.level_bases[0]
    lifted = build.level_bases[1]
    f_parts = lift_F_basis(disc, previous, 1)
    g_parts = lift_G_basis(disc, previous, 1)
    assert len(f_parts) == len(g_parts) == len(lifted.cells)
    for cell, f, g in zip(lifted.cells, f_parts, g_parts):
        jumps = _inner_jumps(disc, previous, 1, cell.cell)
        assert f.shape == (jumps.shape[1], cell.size)
        assert g.shape == (jumps.shape[1], cell.g_size)
        assert np.max(np.abs(jumps @ f), initial=0.0) <= 1e-10
        assert np.allclose(jumps @ g, np.eye(cell.g_size), atol=1e-10)
        assert np.allclose(f[cell.outer], np.eye(cell.size))
        assert not np.any(g[cell.outer])


def test_interior_f_functions_are_translates():
    disc = build_case(8, 2, 1, 1, 1e-3, params={"epsilon": 1e-3})
    build = build_factorization(disc)
    f_parts = lift_F_basis(disc, build.level_bases[0], 1)
    # level-1 cells not touching the domain boundary on a 4 x 4 grid
    interior = [5, 6, 9, 10]
    for cell in interior[1:]:
        assert np.allclose(f_parts[cell], f_parts[interior[0]], atol=1e-10)
