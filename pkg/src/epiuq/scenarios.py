"""Benchmark scenario configurations.

Four scenarios are built in: an SIR model with a spatially oscillating
contact rate under diffusive (test1a) and hyperbolic (test1b) transport
scalings, and a three-city SEIAR model under intermediate (test2a) and
hyperbolic (test2b) scalings. Random vectors are two dimensional: test1 draws
both components from U(-1, 1) (contact and recovery fluctuations), test2 from
U(0, 1) (initial exposed mass and asymptomatic contact fluctuations).

High- and low-fidelity relaxation times are tied by tau_hf = 3 tau_lf so both
models share one diffusivity (lam^2 tau_lf = lam^2 tau_hf / 3) and the two
fidelities coincide in the stiff limit.
"""
from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from .collocation import BoxDomain
from .epidemic import (CompartmentSet, EpidemicParameters,
                       reproduction_number_seiar, reproduction_number_sir)
from .errors import ConfigError
from .grid import Grid1D
from .imex import compute_dt
from .states import MacroState, TransportConfig, VelocityQuadrature

DEFAULT_CANDIDATES = 1000
DEFAULT_SEED = 7193
SCENARIO_NAMES = ("test1a", "test1b", "test2a", "test2b")


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce one experiment end to end."""

    name: str
    compartments: CompartmentSet
    length: float
    n_cells: int
    n_velocity: int
    lam: np.ndarray
    tau_lf: float
    tau_hf: float
    params: EpidemicParameters
    domain: BoxDomain
    initial_density: Callable[[np.ndarray, np.ndarray], np.ndarray]
    n_select: int
    cc_level: int = 3
    n_candidates: int = DEFAULT_CANDIDATES
    t_end: float = 5.0
    seed: int = DEFAULT_SEED
    enforce_consistency: bool = True

    def __post_init__(self):
        lam = np.broadcast_to(np.asarray(self.lam, dtype=float),
                              (self.compartments.n,)).copy()
        object.__setattr__(self, "lam", lam)
        if self.enforce_consistency:
            if abs(self.tau_hf - 3.0 * self.tau_lf) > 1e-12 * self.tau_hf:
                raise ConfigError(
                    f"consistency requires tau_hf = 3 tau_lf, got "
                    f"{self.tau_hf} vs {self.tau_lf}")
            d_lf = lam**2 * self.tau_lf
            d_hf = lam**2 * self.tau_hf / 3.0
            if np.max(np.abs(d_lf - d_hf)) > 1e-12 * max(1.0, d_lf.max()):
                raise ConfigError("fidelities disagree on diffusivities")

    def grid(self) -> Grid1D:
        return Grid1D(self.length, self.n_cells)

    def quadrature(self) -> VelocityQuadrature:
        return VelocityQuadrature.gauss_legendre(self.n_velocity)

    def transport(self, fidelity: str) -> TransportConfig:
        tau = self.tau_lf if fidelity == "low" else self.tau_hf
        return TransportConfig(self.compartments, self.lam,
                               np.full(self.compartments.n, tau), fidelity)

    def dt(self) -> float:
        return compute_dt(self.grid(), float(self.lam.max()),
                          float(self.transport("low").diffusivities().max()))

    @property
    def baseline_z(self) -> np.ndarray:
        """Fluctuation-free random vector (all perturbations off)."""
        return np.zeros(self.domain.dim)

    def initial_macro_batch(self, z: np.ndarray
                            ) -> tuple[np.ndarray, np.ndarray]:
        """Initial (B, C, N) densities and zero fluxes for a batch of z."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        dens = np.asarray(self.initial_density(self.grid().x, z), dtype=float)
        return dens, np.zeros_like(dens)

    def initial_macro(self, z: np.ndarray) -> MacroState:
        dens, flux = self.initial_macro_batch(z)
        return MacroState(self.compartments, dens[0], flux[0])


def _test1_initial(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    infected = 0.01 * np.exp(-((x - 10.0) ** 2))
    batch = z.shape[0]
    dens = np.empty((batch, 3, x.shape[0]))
    dens[:, 0] = 1.0 - infected
    dens[:, 1] = infected
    dens[:, 2] = 0.0
    return dens


def build_test1(variant: str) -> ScenarioConfig:
    """SIR with a sinusoidally modulated contact rate; variant 'a' is the
    diffusive scaling, 'b' the hyperbolic one."""
    if variant not in ("a", "b"):
        raise ConfigError("variant must be 'a' or 'b'")
    params = EpidemicParameters(
        compartments=CompartmentSet.sir(),
        beta=lambda x, z, t: (11.0 * (1.0 + 0.6 * z[..., 0:1])
                              * (1.0 + 0.05 * np.sin(13.0 * np.pi * x / 20.0))),
        kappa=0.0,
        gamma=lambda x, z, t: (10.0 * (1.0 + 0.4 * z[..., 1:2])
                               * np.ones_like(x)),
        p=1.0)
    if variant == "a":
        lam, tau_lf, n_select = np.sqrt(1e5), 1e-5, 8
    else:
        lam, tau_lf, n_select = 1.0, 1.0, 14
    return ScenarioConfig(
        name=f"test1{variant}", compartments=CompartmentSet.sir(),
        length=20.0, n_cells=150, n_velocity=8,
        lam=np.full(3, lam), tau_lf=tau_lf, tau_hf=3.0 * tau_lf,
        params=params, domain=BoxDomain.symmetric(2),
        initial_density=_test1_initial, n_select=n_select)


_CITIES = np.array([10.0 / 3.0, 10.0, 50.0 / 3.0])
_CITY_WEIGHTS = np.array([0.5, 0.25, 0.5])
_EXPOSED_AMPLITUDES = np.array([0.01, 0.001, 0.004])


def _city_bumps(x: np.ndarray) -> np.ndarray:
    return np.exp(-((x[None, :] - _CITIES[:, None]) ** 2))


def _test2_initial(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    bumps = _city_bumps(x)
    exposed = (1.0 + z[..., 0:1]) * (_EXPOSED_AMPLITUDES @ bumps)
    batch = z.shape[0]
    dens = np.zeros((batch, 5, x.shape[0]))
    dens[:, 0] = 1.0 - exposed
    dens[:, 1] = exposed
    return dens


def _test2_beta_asymptomatic(x: np.ndarray, z: np.ndarray,
                             t: float) -> np.ndarray:
    base = 0.5 * (1.0 + 0.5 * z[..., 1:2])
    shape = 1.0 + _CITY_WEIGHTS @ _city_bumps(x)
    return base * shape + 0.05 * np.sin(2.0 * np.pi * x)


def build_test2(variant: str) -> ScenarioConfig:
    """SEIAR with three epidemic hotspots; variant 'a' is an intermediate
    scaling, 'b' a fully hyperbolic one. Symptomatic carriers are isolated:
    their characteristic speed is zero and their contact rate is 3% of the
    asymptomatic one."""
    if variant not in ("a", "b"):
        raise ConfigError("variant must be 'a' or 'b'")
    params = EpidemicParameters(
        compartments=CompartmentSet.seiar(),
        beta=lambda x, z, t: 0.03 * _test2_beta_asymptomatic(x, z, t),
        kappa=0.0,
        beta_A=_test2_beta_asymptomatic,
        kappa_A=0.0,
        gamma_I=1.0 / 14.0,
        gamma_A=1.0 / 7.0,
        a=1.0 / 3.0,
        sigma=0.08,  # probability of developing severe symptoms, 1/12.5
        p=1.0)
    if variant == "a":
        lam_mobile, tau_lf, n_select = np.sqrt(10.0), 0.25, 6
    else:
        lam_mobile, tau_lf, n_select = 1.0, 10.0, 7
    lam = np.array([lam_mobile, lam_mobile, 0.0, lam_mobile, lam_mobile])
    return ScenarioConfig(
        name=f"test2{variant}", compartments=CompartmentSet.seiar(),
        length=20.0, n_cells=150, n_velocity=8,
        lam=lam, tau_lf=tau_lf, tau_hf=3.0 * tau_lf,
        params=params, domain=BoxDomain.unit(2),
        initial_density=_test2_initial, n_select=n_select)


def build_scenario(name: str) -> ScenarioConfig:
    builders = {"test1a": lambda: build_test1("a"),
                "test1b": lambda: build_test1("b"),
                "test2a": lambda: build_test2("a"),
                "test2b": lambda: build_test2("b")}
    if name not in builders:
        raise ConfigError(f"unknown scenario {name!r}; "
                          f"choose from {SCENARIO_NAMES}")
    return builders[name]()


def baseline_reproduction_number(config: ScenarioConfig,
                                 z: np.ndarray | None = None) -> float:
    """Reproduction number of the scenario's coefficient fields over uniform
    unit compartment profiles (S = I = ... = 1), i.e. the spatially averaged
    incidence-over-removal ratio at the fluctuation-free z."""
    if z is None:
        z = config.baseline_z
    grid = config.grid()
    ones = np.ones((config.compartments.n, grid.n_cells))
    if config.compartments.kind == "SIR":
        return reproduction_number_sir(ones, config.params, grid, z)
    return reproduction_number_seiar(ones, config.params, grid, z)


_OVERRIDE_KEYS = {
    "n": ("n_select", int),
    "candidates": ("n_candidates", int),
    "seed": ("seed", int),
    "nx": ("n_cells", int),
    "nv": ("n_velocity", int),
    "t_end": ("t_end", float),
    "cc_level": ("cc_level", int),
}


def apply_overrides(config: ScenarioConfig, **overrides) -> ScenarioConfig:
    """Replace numeric scenario fields; None values are ignored."""
    updates = {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in _OVERRIDE_KEYS:
            raise ConfigError(f"unknown override {key!r}")
        attr, cast = _OVERRIDE_KEYS[key]
        updates[attr] = cast(value)
    if not updates:
        return config
    return replace(config, **updates)


def parse_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` text; '#' starts a comment; keys are lowercase."""
    data: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"malformed config line: {raw!r}")
        key, value = line.split("=", 1)
        data[key.strip().lower()] = value.strip()
    return data


def scenario_from_config(path) -> ScenarioConfig:
    """Build a scenario from a config file: a base scenario name plus
    numeric overrides (all numbers decimal strings)."""
    data = parse_config_file(path)
    if "scenario" not in data:
        raise ConfigError("config file must set 'scenario'")
    config = build_scenario(data.pop("scenario"))
    overrides = {}
    for key, value in data.items():
        if key in ("out",):
            continue
        if key not in _OVERRIDE_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        overrides[key] = float(Fraction(value)) if key == "t_end" else value
    return apply_overrides(config, **overrides)
