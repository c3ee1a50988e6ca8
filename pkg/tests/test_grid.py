import numpy as np
import pytest

from epiuq.errors import ConfigError
from epiuq.grid import (Grid1D, hyperbolic_weight, interface_average_jump,
                        minmod, reconstruct, reconstructed_total_variation,
                        total_variation)


@pytest.fixture
def grid():
    return Grid1D(20.0, 150)


def test_grid_geometry(grid):
    assert grid.dx * grid.n_cells == pytest.approx(grid.domain_length)
    assert grid.cell_centers[0] == pytest.approx(0.5 * grid.dx)
    assert grid.cell_centers[-1] == pytest.approx(20.0 - 0.5 * grid.dx)


def test_periodic_neighbor_indices(grid):
    assert grid.left_index(0) == grid.n_cells - 1
    assert grid.right_index(grid.n_cells - 1) == 0


def test_grid_rejects_bad_setup():
    with pytest.raises(ConfigError):
        Grid1D(-1.0, 10)
    with pytest.raises(ConfigError):
        Grid1D(1.0, 1)


def test_minmod_cases():
    assert minmod(1.0, 2.0) == 1.0
    assert minmod(-1.0, 2.0) == 0.0
    assert minmod(-3.0, -2.0) == -2.0
    a = np.array([1.0, -1.0, -3.0])
    b = np.array([2.0, 2.0, -2.0])
    np.testing.assert_allclose(minmod(a, b), [1.0, 0.0, -2.0])


def test_minmod_magnitude_bound():
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=200), rng.normal(size=200)
    m = minmod(a, b)
    assert np.all(np.abs(m) <= np.minimum(np.abs(a), np.abs(b)) + 1e-15)


def test_reconstruct_constant_field(grid):
    slopes = reconstruct(np.full(grid.n_cells, 3.7), grid)
    np.testing.assert_allclose(slopes, 0.0)


def test_reconstruct_linear_ramp(grid):
    c = 0.31
    field = c * grid.x
    slopes = reconstruct(field, grid)
    # away from the periodic seam the limited slope reproduces the ramp
    np.testing.assert_allclose(slopes[2:-2], c, rtol=1e-12)


def test_reconstruct_single_spike(grid):
    field = np.zeros(grid.n_cells)
    field[50] = 1.0
    slopes = reconstruct(field, grid)
    # opposite-sign one-sided differences cancel at the spike
    assert slopes[50] == 0.0


def test_reconstruct_shape_mismatch(grid):
    with pytest.raises(ConfigError):
        reconstruct(np.zeros(77), grid)


def test_reconstruction_is_tvd(grid):
    rng = np.random.default_rng(11)
    for _ in range(25):
        field = rng.normal(size=grid.n_cells)
        slopes = reconstruct(field, grid)
        tv_cells = total_variation(field)
        tv_rec = reconstructed_total_variation(field, slopes, grid)
        assert tv_rec <= tv_cells * (1.0 + 1e-12)


def test_interface_average_consistency(grid):
    # both interface averages are second-order interface values
    u = np.sin(2.0 * np.pi * grid.x / 20.0)
    exact = np.sin(2.0 * np.pi * (grid.x + 0.5 * grid.dx) / 20.0)
    for w in (0.0, 1.0):
        avg, _ = interface_average_jump(u, grid, w)
        assert np.max(np.abs(avg - exact)) < 2e-3


def test_interface_jump_second_order(grid):
    u = np.sin(2.0 * np.pi * grid.x / 20.0)
    _, jump = interface_average_jump(u, grid)
    # smooth data: reconstructed interface jumps shrink at O(dx^2)
    assert np.max(np.abs(jump)) < grid.dx**2


def test_hyperbolic_weight_saturation():
    assert hyperbolic_weight(1.0, 0.12) == 1.0       # resolved relaxation
    assert hyperbolic_weight(1e-5, 8.9e-3) == 0.0    # stiff regime
    assert 0.0 < hyperbolic_weight(1.0, 1.0) < 1.0   # transition
    np.testing.assert_allclose(hyperbolic_weight(np.array([1.0, 1e-9]), 0.1),
                               [1.0, 0.0])
