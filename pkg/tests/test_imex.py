import numpy as np
import pytest

from epiuq.errors import ConfigError
from epiuq.grid import Grid1D
from epiuq.imex import (ImexTableau, StiffRelaxation, compute_dt, gsa_check,
                        gsa_imex_442, imex_advance)


@pytest.fixture
def tab():
    return gsa_imex_442()


def test_default_tableau_structure(tab):
    assert tab.n_stages == 4
    assert gsa_check(tab)
    # consistency and order-2 conditions, including the additive couplings
    assert tab.b_impl.sum() == pytest.approx(1.0)
    assert tab.b_expl.sum() == pytest.approx(1.0)
    assert tab.b_impl @ tab.c_impl == pytest.approx(0.5)
    assert tab.b_expl @ tab.c_expl == pytest.approx(0.5)
    assert tab.b_impl @ tab.c_expl == pytest.approx(0.5)
    assert tab.b_expl @ tab.c_impl == pytest.approx(0.5)


def test_gsa_check_implicit_euler_pair():
    tab = ImexTableau(a_impl=[[1.0]], a_expl=[[0.0]], b_impl=[1.0],
                      b_expl=[1.0], order=1)
    assert gsa_check(tab)


def test_gsa_check_detects_broken_row(tab):
    broken = ImexTableau(tab.a_impl, tab.a_expl,
                         tab.b_impl + np.array([0.1, 0, 0, -0.1]),
                         tab.b_expl)
    assert not gsa_check(broken)


def test_tableau_shape_validation():
    with pytest.raises(ConfigError):
        ImexTableau(a_impl=np.zeros((2, 3)), a_expl=np.zeros((2, 2)),
                    b_impl=[0.5, 0.5], b_expl=[0.5, 0.5])
    with pytest.raises(ConfigError):  # explicit part not strictly lower
        ImexTableau(a_impl=np.eye(2) * 0.5, a_expl=np.eye(2),
                    b_impl=[0.5, 0.5], b_expl=[0.5, 0.5])


def test_tableau_from_mapping_rationals(tab):
    data = {
        "stages": 4,
        "a_impl": "1/4 0 0 0 1/2 1/4 0 0 1/16 1/16 1/4 0 1/4 0 1/2 1/4".split(),
        "a_expl": "0 0 0 0 1/2 0 0 0 1/5 3/10 0 0 0 1/3 2/3 0".split(),
        "b_impl": "1/4 0 1/2 1/4".split(),
        "b_expl": "0 1/3 2/3 0".split(),
        "order": 2,
        "name": "gsa-442",
    }
    loaded = ImexTableau.from_mapping(data)
    np.testing.assert_array_equal(loaded.a_impl, tab.a_impl)
    np.testing.assert_array_equal(loaded.a_expl, tab.a_expl)
    np.testing.assert_array_equal(loaded.b_impl, tab.b_impl)
    np.testing.assert_array_equal(loaded.b_expl, tab.b_expl)


def test_scalar_relaxation_matches_exponential(tab):
    # dy/dt = -y/tau, one step: local error O(dt^3)
    relax = StiffRelaxation(tau=1.0, equilibrium=0.0)
    for dt in (0.1, 0.05, 0.025):
        y1 = imex_advance(np.array(1.0), dt, tab, None, relax)
        assert abs(float(y1) - np.exp(-dt)) < 2.0 * dt**3


def test_fixed_point_when_equilibrium_is_state(tab):
    relax = StiffRelaxation(tau=0.3, equilibrium=lambda known: known)
    y0 = np.array([1.0, -2.0, 0.5])
    y1 = imex_advance(y0, 0.2, tab, None, relax)
    np.testing.assert_allclose(y1, y0, atol=1e-14)


def test_gsa_final_equals_last_stage(tab):
    # random affine problem: explicit part A y + q, implicit relaxation
    rng = np.random.default_rng(5)
    mat = rng.normal(size=(3, 3)) * 0.3
    q = rng.normal(size=3)
    relax = StiffRelaxation(tau=0.7, equilibrium=rng.normal(size=3))
    y0 = rng.normal(size=3)
    y1, stages = imex_advance(y0, 0.1, tab, lambda y, t: mat @ y + q, relax,
                              return_stages=True)
    np.testing.assert_allclose(y1, stages[-1], rtol=1e-13, atol=1e-14)


def test_imex_order_two_on_smooth_problem(tab):
    # dy/dt = sin(t) - y; exact: 1.5 e^-t + (sin t - cos t)/2 for y(0) = 1
    relax = StiffRelaxation(tau=1.0, equilibrium=0.0)
    exact = 1.5 * np.exp(-1.0) + (np.sin(1.0) - np.cos(1.0)) / 2.0
    errors = []
    for n in (20, 40, 80):
        dt = 1.0 / n
        y, t = np.array(1.0), 0.0
        for _ in range(n):
            y = imex_advance(y, dt, tab, lambda _, tt: np.sin(tt), relax, t=t)
            t += dt
        errors.append(abs(float(y) - exact))
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(orders >= 1.8)


def test_ap_stage_equilibration(tab):
    # tau -> 0: stage values of the stiff component land on the equilibrium
    relax = StiffRelaxation(tau=1e-12, equilibrium=0.0)
    y1, stages = imex_advance(np.array(1.0), 0.1, tab, None, relax,
                              return_stages=True)
    for stage in stages:
        assert abs(float(stage)) < 1e-9
    assert abs(float(y1)) < 1e-9


def test_relaxation_rejects_nonpositive_tau():
    with pytest.raises(ConfigError):
        StiffRelaxation(tau=0.0)
    with pytest.raises(ConfigError):
        StiffRelaxation(tau=-1.0)


def test_compute_dt_reproduces_reported_steps():
    grid = Grid1D(20.0, 150)
    dt_a = compute_dt(grid, np.sqrt(1e5), 1.0)
    assert dt_a == pytest.approx(0.89e-2, rel=0.01)
    dt_b = compute_dt(grid, 1.0, 1.0)
    assert dt_b == pytest.approx(0.12, rel=0.01)


def test_compute_dt_parabolic_branch_dominates_at_large_speed():
    grid = Grid1D(20.0, 150)
    parabolic = grid.dx**2 / 2.0
    assert compute_dt(grid, 1e9, 1.0) == pytest.approx(parabolic)


def test_compute_dt_rejects_degenerate_inputs():
    grid = Grid1D(20.0, 150)
    with pytest.raises(ConfigError):
        compute_dt(grid, 0.0, 0.0)
    with pytest.raises(ConfigError):
        compute_dt(grid, -1.0, 1.0)
