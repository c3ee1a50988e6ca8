import numpy as np
import pytest

from epiuq.epidemic import CompartmentSet, EpidemicParameters
from epiuq.errors import ConfigError, NumericsError
from epiuq.grid import Grid1D
from epiuq.imex import gsa_imex_442
from epiuq.lowfi import lf_run, lf_run_batch, lf_step
from epiuq.states import MacroState, TransportConfig

TAB = gsa_imex_442()
Z0 = np.zeros(2)


@pytest.fixture
def grid():
    return Grid1D(20.0, 100)


def sir_params(beta=0.0, gamma=0.0):
    return EpidemicParameters(CompartmentSet.sir(), beta=beta, gamma=gamma)


def transport(lam=1.0, tau=1.0):
    return TransportConfig(CompartmentSet.sir(), np.full(3, lam),
                           np.full(3, tau), "low")


def uniform_state(grid, values=(0.6, 0.3, 0.1)):
    dens = np.outer(values, np.ones(grid.n_cells))
    return MacroState(CompartmentSet.sir(), dens, np.zeros_like(dens))


def test_global_equilibrium_is_fixed_point(grid):
    state = uniform_state(grid)
    out = lf_step(state, sir_params(), transport(), grid, 0.05, TAB, Z0)
    np.testing.assert_allclose(out.density, state.density, atol=1e-14)
    np.testing.assert_allclose(out.flux, 0.0, atol=1e-14)


def test_uniform_decay_matches_ode(grid):
    # beta = 0, gamma > 0, uniform data: no transport, I decays exactly
    gamma, dt = 1.0, 0.01
    state = uniform_state(grid)
    i0 = state.density[1, 0]
    out = state
    for k in range(10):
        out = lf_step(out, sir_params(0.0, gamma), transport(), grid, dt,
                      TAB, Z0)
    exact = i0 * np.exp(-gamma * 10 * dt)
    assert np.max(np.abs(out.density[1] - exact)) < 10 * dt**3
    total = out.density.sum(axis=0)
    np.testing.assert_allclose(total, 1.0, rtol=1e-13)


def test_run_single_step_consistency(grid):
    dt = 0.04
    beta = lambda x, z, t: 2.0 * (1.0 + 0.3 * np.sin(np.pi * x / 10.0))
    params = EpidemicParameters(CompartmentSet.sir(), beta=beta, gamma=1.0)
    dens = np.ones((3, grid.n_cells))
    dens[1] = 0.05 * np.exp(-((grid.x - 10.0) ** 2))
    dens[0] = 1.0 - dens[1]
    dens[2] = 0.0
    state = MacroState(CompartmentSet.sir(), dens, np.zeros_like(dens))
    stepped = lf_step(state.copy(), params, transport(), grid, dt, TAB, Z0)
    ran = lf_run(state.copy(), params, transport(), grid, dt, TAB, Z0, dt=dt)
    np.testing.assert_allclose(ran.density, stepped.density, atol=1e-15)
    np.testing.assert_allclose(ran.flux, stepped.flux, atol=1e-15)


def test_conservation_with_reactions_and_transport(grid):
    params = EpidemicParameters(
        CompartmentSet.sir(),
        beta=lambda x, z, t: 3.0 * (1.0 + 0.2 * np.cos(np.pi * x / 10.0)),
        gamma=1.5)
    dens = np.ones((3, grid.n_cells))
    dens[1] = 0.05 * np.exp(-((grid.x - 8.0) ** 2))
    dens[0] = 1.0 - dens[1]
    dens[2] = 0.0
    state = MacroState(CompartmentSet.sir(), dens, np.zeros_like(dens))
    out = lf_run(state, params, transport(lam=1.0, tau=0.5), grid, 2.0, TAB,
                 Z0)
    mass0 = grid.integrate(dens.sum(axis=0))
    mass1 = grid.integrate(out.total_density())
    assert abs(mass1 / mass0 - 1.0) < 1e-10


def test_fick_relation_in_stiff_regime(grid):
    # tau << dt: post-step fluxes obey J ~ -D d(rho)/dx on smooth data
    tau, d_coef = 1e-9, 1.0
    lam = np.sqrt(d_coef / tau)
    dens = np.ones((3, grid.n_cells))
    dens[0] = 1.0 + 0.2 * np.sin(2.0 * np.pi * grid.x / 20.0)
    state = MacroState(CompartmentSet.sir(), dens, np.zeros_like(dens))
    dt = grid.dx**2 / (2.0 * d_coef)
    out = state
    for _ in range(5):
        out = lf_step(out, sir_params(), transport(lam, tau), grid, dt, TAB,
                      Z0)
    grad = (np.roll(out.density[0], -1) - np.roll(out.density[0], 1)) / (
        2.0 * grid.dx)
    fick = -d_coef * grad
    scale = np.max(np.abs(fick))
    assert np.max(np.abs(out.flux[0] - fick)) < 0.01 * scale


def test_positivity_monitor_reports_step():
    grid = Grid1D(20.0, 50)
    dens = np.ones((3, grid.n_cells))
    dens[1, 25] = np.nan  # poisoned state trips the monitor on step one
    state = MacroState(CompartmentSet.sir(), dens, np.zeros_like(dens))
    with pytest.raises(NumericsError) as err:
        lf_run(state, sir_params(), transport(), grid, 1.0, TAB, Z0, dt=0.1)
    assert err.value.step == 1


def test_subcharacteristic_check_rejects_fast_initial_flux():
    grid = Grid1D(20.0, 50)
    dens = np.ones((3, grid.n_cells))
    flux = np.zeros_like(dens)
    flux[0] = 10.0  # exceeds lam * density for lam = 1
    state = MacroState(CompartmentSet.sir(), dens, flux)
    with pytest.raises(ConfigError):
        lf_run(state, sir_params(), transport(), grid, 1.0, TAB, Z0, dt=0.1)


def test_requires_low_fidelity_config(grid):
    state = uniform_state(grid)
    high = TransportConfig(CompartmentSet.sir(), np.ones(3), np.ones(3),
                           "high")
    with pytest.raises(ConfigError):
        lf_step(state, sir_params(), high, grid, 0.1, TAB, Z0)


def test_batch_matches_single_runs(grid):
    params = EpidemicParameters(
        CompartmentSet.sir(),
        beta=lambda x, z, t: 2.0 * (1.0 + 0.5 * z[..., 0:1]) * np.ones_like(x),
        gamma=lambda x, z, t: 1.0 * (1.0 + 0.4 * z[..., 1:2]) * np.ones_like(x))
    zs = np.array([[0.3, -0.2], [-0.5, 0.6]])
    dens = np.ones((3, grid.n_cells))
    dens[1] = 0.05 * np.exp(-((grid.x - 10.0) ** 2))
    dens[0] = 1.0 - dens[1]
    dens[2] = 0.0
    batch_d = np.stack([dens, dens])
    batch_f = np.zeros_like(batch_d)
    got_d, got_f = lf_run_batch(batch_d, batch_f, params, transport(), grid,
                                0.5, TAB, zs, dt=0.05)
    for k, z in enumerate(zs):
        state = MacroState(CompartmentSet.sir(), dens.copy(),
                           np.zeros_like(dens))
        single = lf_run(state, params, transport(), grid, 0.5, TAB, z,
                        dt=0.05)
        np.testing.assert_allclose(got_d[k], single.density, atol=1e-14)
        np.testing.assert_allclose(got_f[k], single.flux, atol=1e-14)


def test_zero_speed_compartment_stays_immobile():
    grid = Grid1D(20.0, 80)
    comps = CompartmentSet.seiar()
    params = EpidemicParameters(comps, beta=0.0, beta_A=0.0, gamma_I=0.0,
                                gamma_A=0.0, a=0.0, sigma=0.5)
    lam = np.array([1.0, 1.0, 0.0, 1.0, 1.0])
    cfg = TransportConfig(comps, lam, np.full(5, 0.5), "low")
    dens = np.ones((5, grid.n_cells)) * 0.1
    dens[2] = 0.1 + 0.05 * np.exp(-((grid.x - 10.0) ** 2))
    state = MacroState(comps, dens, np.zeros_like(dens))
    out = lf_run(state, params, cfg, grid, 1.0, TAB, Z0, dt=0.05)
    # the zero-speed compartment has no transport and no sources: frozen
    np.testing.assert_allclose(out.density[2], dens[2], atol=1e-14)
    np.testing.assert_allclose(out.flux[2], 0.0, atol=1e-14)


@pytest.mark.parametrize("lam,tau,dt_kind", [
    (np.sqrt(1e5), 1e-5, "parabolic"),   # diffusive scaling
    (1.0, 1.0, "cfl"),                   # hyperbolic scaling
    (np.sqrt(10.0), 0.25, "cfl"),        # intermediate scaling
    (1.0, 1e12, "cfl"),                  # free streaming
])
def test_noise_robustness(lam, tau, dt_kind):
    # random perturbations around a uniform state stay bounded
    grid = Grid1D(20.0, 64)
    rng = np.random.default_rng(17)
    dens = 1.0 + 0.01 * rng.normal(size=(3, grid.n_cells))
    flux = 0.01 * rng.normal(size=(3, grid.n_cells)) * min(lam, 1.0)
    state = MacroState(CompartmentSet.sir(), dens, flux)
    dt = 0.9 * grid.dx / lam if dt_kind == "cfl" else grid.dx**2 / 2.0
    out = state
    for _ in range(150):
        out = lf_step(out, sir_params(), transport(lam, tau), grid, dt, TAB,
                      Z0)
    assert np.all(np.isfinite(out.density))
    assert np.max(np.abs(out.density - 1.0)) < 0.05
