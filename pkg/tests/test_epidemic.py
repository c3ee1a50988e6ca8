import numpy as np
import pytest

from epiuq.epidemic import (CompartmentSet, EpidemicParameters, incidence,
                            reproduction_number_seiar,
                            reproduction_number_sir)
from epiuq.errors import (ConfigError, DomainError,
                          UndefinedReproductionNumber)
from epiuq.grid import Grid1D


def test_compartment_sets():
    assert CompartmentSet.sir().members == ("S", "I", "R")
    assert CompartmentSet.seiar().members == ("S", "E", "I", "A", "R")
    assert CompartmentSet.sir().index("I") == 1
    with pytest.raises(ConfigError):
        CompartmentSet("SIR", ("S", "R", "I"))
    with pytest.raises(ConfigError):
        CompartmentSet("SEIR", ("S", "E", "I", "R"))


def test_incidence_values():
    assert incidence(1.0, 0.01, 11.0, 0.0, 1.0) == pytest.approx(0.11)
    assert incidence(123.0, 0.0, 7.0, 3.0, 2.0) == 0.0
    assert incidence(1.0, 1.0, 1.0, 1.0, 1.0) == pytest.approx(0.5)


def test_incidence_rejects_negative_infectious():
    with pytest.raises(DomainError):
        incidence(1.0, -0.1, 1.0)


def test_incidence_monotone_in_g_and_beta():
    rng = np.random.default_rng(7)
    for _ in range(50):
        g, i, beta, kappa = rng.uniform(0.01, 2.0, size=4)
        assert incidence(g * 1.5, i, beta, kappa) >= incidence(g, i, beta,
                                                               kappa)
        assert incidence(g, i, beta * 1.5, kappa) >= incidence(g, i, beta,
                                                               kappa)


def test_incidence_bilinear_case():
    g, i, beta = 0.7, 0.3, 2.0
    assert incidence(g, i, beta) == pytest.approx(beta * g * i)


@pytest.fixture
def grid():
    return Grid1D(20.0, 150)


def sir_params(beta, gamma):
    return EpidemicParameters(CompartmentSet.sir(), beta=beta, gamma=gamma)


def test_r0_sir_constants_cancel(grid):
    dens = np.ones((3, grid.n_cells))
    dens[1] = 0.37
    params = sir_params(2.0, 0.5)
    assert reproduction_number_sir(dens, params, grid,
                                   np.zeros(2)) == pytest.approx(4.0)


def test_r0_sir_sinusoidal_modulation(grid):
    # beta(x) = 11 (1 + 0.05 sin(13 pi x / 20)), gamma = 10, S = 1, I const:
    # the space average gives 1.1 (1 + 2 / (260 pi))
    params = sir_params(
        lambda x, z, t: 11.0 * (1.0 + 0.05 * np.sin(13.0 * np.pi * x / 20.0)),
        10.0)
    dens = np.ones((3, grid.n_cells))
    dens[1] = 0.004
    value = reproduction_number_sir(dens, params, grid, np.zeros(2))
    assert value == pytest.approx(1.1 * (1.0 + 2.0 / (260.0 * np.pi)),
                                  rel=1e-4)


def test_r0_sir_scale_invariant_in_infectious(grid):
    params = sir_params(3.0, 0.7)
    dens = np.ones((3, grid.n_cells))
    dens[1] = 0.01 * np.exp(-((grid.x - 10.0) ** 2))
    base = reproduction_number_sir(dens, params, grid, np.zeros(2))
    dens[1] *= 37.5
    assert reproduction_number_sir(dens, params, grid,
                                   np.zeros(2)) == pytest.approx(base)


def test_r0_sir_degenerate_raises(grid):
    params = sir_params(2.0, 0.5)
    dens = np.ones((3, grid.n_cells))
    dens[1] = 0.0
    with pytest.raises(UndefinedReproductionNumber):
        reproduction_number_sir(dens, params, grid, np.zeros(2))


def seiar_params(beta, beta_A, gamma_I, gamma_A, a, sigma):
    return EpidemicParameters(CompartmentSet.seiar(), beta=beta,
                              beta_A=beta_A, gamma_I=gamma_I, gamma_A=gamma_A,
                              a=a, sigma=sigma)


def test_r0_seiar_constants_cancel(grid):
    params = seiar_params(0.015, 0.5, 1.0 / 14.0, 1.0 / 7.0, 1.0 / 3.0, 0.08)
    dens = np.ones((5, grid.n_cells)) * 0.2
    dens[0] = 1.0
    expected = 0.08 * 0.015 * 14.0 + 0.92 * 0.5 * 7.0
    assert reproduction_number_seiar(dens, params, grid,
                                     np.zeros(2)) == pytest.approx(expected)


def test_r0_seiar_sigma_one_reduces_to_symptomatic_branch(grid):
    params = seiar_params(0.6, 0.5, 0.2, 0.5, 1.0, 1.0)
    dens = np.ones((5, grid.n_cells)) * 0.1
    dens[0] = 1.0
    dens[3] = 0.0  # asymptomatic branch inactive, denominator never touched
    assert reproduction_number_seiar(dens, params, grid,
                                     np.zeros(2)) == pytest.approx(0.6 / 0.2)


def test_r0_seiar_degenerate_raises(grid):
    params = seiar_params(0.6, 0.5, 0.2, 0.5, 1.0, 0.5)
    dens = np.ones((5, grid.n_cells)) * 0.1
    dens[1] = 0.0  # no exposed: latency integral vanishes
    with pytest.raises(UndefinedReproductionNumber):
        reproduction_number_seiar(dens, params, grid, np.zeros(2))
    dens[1] = 0.1
    dens[2] = 0.0  # active symptomatic branch with zero removal integral
    with pytest.raises(UndefinedReproductionNumber):
        reproduction_number_seiar(dens, params, grid, np.zeros(2))


def test_parameter_validation(grid):
    with pytest.raises(ConfigError):
        EpidemicParameters(CompartmentSet.sir(), beta=1.0)  # gamma missing
    with pytest.raises(ConfigError):
        EpidemicParameters(CompartmentSet.sir(), beta=1.0, gamma=1.0, p=0.5)
    params = EpidemicParameters(CompartmentSet.sir(), beta=-1.0, gamma=1.0)
    with pytest.raises(DomainError):
        params.sample(grid.x, np.zeros((1, 2)))
    seiar = seiar_params(0.1, 0.5, 0.1, 0.1, 0.3, 1.5)
    with pytest.raises(DomainError):
        seiar.sample(grid.x, np.zeros((1, 2)))
