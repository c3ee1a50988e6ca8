"""Epidemic compartments, coefficient fields, incidence and R0 diagnostics.

Two compartmentalizations are supported: SIR (susceptible, infectious,
removed) and SEIAR (adding exposed and asymptomatic/mild compartments, with
separate contact rates and recovery rates for the two infectious groups).

Coefficient fields are evaluable functions of (cell centers x, random vector
z, time t), so spatially heterogeneous and uncertain rates are sampled onto
the grid without committing to a storage format. Sampling conventions:
``x`` has shape (n_cells,), ``z`` has shape (batch, d), and a field returns
anything broadcastable to (batch, n_cells). Plain floats are accepted for
constant rates.
"""
from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigError, DomainError, UndefinedReproductionNumber
from .grid import Grid1D

Field = Union[float, Callable[[np.ndarray, np.ndarray, float], np.ndarray]]

SIR_MEMBERS = ("S", "I", "R")
SEIAR_MEMBERS = ("S", "E", "I", "A", "R")


@dataclass(frozen=True)
class CompartmentSet:
    """Ordered compartment labels for one of the supported model kinds."""

    kind: str
    members: tuple[str, ...]

    def __post_init__(self):
        expected = {"SIR": SIR_MEMBERS, "SEIAR": SEIAR_MEMBERS}.get(self.kind)
        if expected is None:
            raise ConfigError(f"unknown compartment kind {self.kind!r}")
        if tuple(self.members) != expected:
            raise ConfigError(f"{self.kind} must list exactly {expected}")

    @classmethod
    def sir(cls) -> "CompartmentSet":
        return cls("SIR", SIR_MEMBERS)

    @classmethod
    def seiar(cls) -> "CompartmentSet":
        return cls("SEIAR", SEIAR_MEMBERS)

    @property
    def n(self) -> int:
        return len(self.members)

    def index(self, label: str) -> int:
        return self.members.index(label)


def _eval_field(f: Field, x: np.ndarray, z: np.ndarray, t: float,
                name: str) -> np.ndarray:
    batch = z.shape[:-1]
    shape = batch + (x.shape[0],)
    if callable(f):
        out = np.asarray(f(x, z, t), dtype=float)
    else:
        out = np.asarray(float(f))
    try:
        return np.broadcast_to(out, shape)
    except ValueError as exc:
        raise ConfigError(f"field {name!r} returned shape {out.shape}, "
                          f"not broadcastable to {shape}") from exc


@dataclass(frozen=True)
class EpidemicParameters:
    """Coefficient fields for one compartmentalization.

    For SIR: ``beta``, ``kappa``, ``gamma``. For SEIAR, ``beta``/``kappa``
    are the contact rate and damping of the symptomatic incidence, with
    ``beta_A``/``kappa_A`` their asymptomatic counterparts, plus recovery
    rates ``gamma_I``/``gamma_A``, inverse latency ``a`` and symptomatic
    probability ``sigma``. The incidence exponent ``p`` is shared.
    """

    compartments: CompartmentSet
    beta: Field
    kappa: Field = 0.0
    gamma: Field | None = None
    beta_A: Field | None = None
    kappa_A: Field = 0.0
    gamma_I: Field | None = None
    gamma_A: Field | None = None
    a: Field | None = None
    sigma: Field | None = None
    p: float = 1.0
    time_dependent: bool = False

    def __post_init__(self):
        if self.p < 1.0:
            raise ConfigError(f"incidence exponent p must be >= 1, got {self.p}")
        kind = self.compartments.kind
        required = {"SIR": ("gamma",),
                    "SEIAR": ("beta_A", "gamma_I", "gamma_A", "a", "sigma")}[kind]
        missing = [f for f in required if getattr(self, f) is None]
        if missing:
            raise ConfigError(f"{kind} parameters missing fields: {missing}")

    def sample(self, x: np.ndarray, z: np.ndarray, t: float = 0.0
               ) -> "SampledCoefficients":
        """Evaluate every field on the grid for a batch of random vectors."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        kind = self.compartments.kind
        names = {"SIR": ("beta", "kappa", "gamma"),
                 "SEIAR": ("beta", "kappa", "beta_A", "kappa_A",
                           "gamma_I", "gamma_A", "a", "sigma")}[kind]
        arrays = {n: _eval_field(getattr(self, n), x, z, t, n) for n in names}
        for n, arr in arrays.items():
            if np.any(arr < 0.0):
                raise DomainError(f"field {n!r} is negative somewhere")
        if kind == "SEIAR" and np.any(arrays["sigma"] > 1.0):
            raise DomainError("sigma must lie in [0, 1]")
        return SampledCoefficients(kind=kind, p=self.p, **arrays)


@dataclass(frozen=True)
class SampledCoefficients:
    """Coefficient fields evaluated on the grid; arrays are (batch, n_cells)."""

    kind: str
    p: float
    beta: np.ndarray
    kappa: np.ndarray
    gamma: np.ndarray | None = None
    beta_A: np.ndarray | None = None
    kappa_A: np.ndarray | None = None
    gamma_I: np.ndarray | None = None
    gamma_A: np.ndarray | None = None
    a: np.ndarray | None = None
    sigma: np.ndarray | None = None


def incidence(g, infectious, beta, kappa=0.0, p: float = 1.0):
    """Transmission rate beta * g * I^p / (1 + kappa * I).

    ``g`` is the density-like first argument (a susceptible density or flux);
    ``infectious`` must be nonnegative.
    """
    infectious = np.asarray(infectious, dtype=float)
    if np.any(infectious < 0.0):
        raise DomainError("infectious density must be nonnegative")
    out = _incidence(np.asarray(g, dtype=float), infectious,
                     np.asarray(beta, dtype=float),
                     np.asarray(kappa, dtype=float), p)
    if out.ndim == 0:
        return float(out)
    return out


def _incidence(g, infectious, beta, kappa, p):
    # Internal path: tolerates the tiny negative densities a monitored (not
    # clipped) solver may carry; they contribute 0 for p != 1.
    if p == 1.0:
        ipow = infectious
    else:
        ipow = np.maximum(infectious, 0.0) ** p
    return beta * g * ipow / (1.0 + kappa * infectious)


def _speed_ratio(num: float, den: float) -> float:
    # Couplings scaled by a speed ratio vanish when the source compartment
    # cannot move (zero characteristic speed).
    return num / den if den > 0.0 else 0.0


def _expand(a: np.ndarray, like: np.ndarray) -> np.ndarray:
    """Broadcast a (batch, N) coefficient against (batch, ..., N) states."""
    a = np.asarray(a)
    extra = like.ndim - a.ndim
    if extra <= 0:
        return a
    return a.reshape(a.shape[:-1] + (1,) * extra + a.shape[-1:])


def _sir_stack(gS, gI, I_macro, c: SampledCoefficients,
               lam: np.ndarray | None, axis: int) -> np.ndarray:
    """SIR reaction rows for density-like (lam None) or flux-like arguments.

    ``gS``/``gI`` are the first-argument arrays slotted into incidence and
    removal; ``I_macro`` is the macroscopic infectious density governing both
    nonlinearities. Flux-like rows carry the characteristic-speed ratios on
    transferred source terms (a ratio with zero denominator contributes 0).
    """
    I = _expand(I_macro, gS)
    F = _incidence(gS, I, _expand(c.beta, gS), _expand(c.kappa, gS), c.p)
    G = _expand(c.gamma, gI) * gI
    if lam is None:
        rows = [-F, F - G, G]
    else:
        rows = [-F, _speed_ratio(lam[1], lam[0]) * F - G,
                _speed_ratio(lam[2], lam[1]) * G]
    return np.stack(rows, axis=axis)


def _seiar_stack(gS, gE, gI, gA, I_macro, A_macro, c: SampledCoefficients,
                 lam: np.ndarray | None, axis: int) -> np.ndarray:
    I = _expand(I_macro, gS)
    A = _expand(A_macro, gS)
    F = (_incidence(gS, I, _expand(c.beta, gS), _expand(c.kappa, gS), c.p)
         + _incidence(gS, A, _expand(c.beta_A, gS), _expand(c.kappa_A, gS),
                      c.p))
    sigma = _expand(c.sigma, gE)
    LAT = _expand(c.a, gE) * gE
    RI = _expand(c.gamma_I, gI) * gI
    RA = _expand(c.gamma_A, gA) * gA
    if lam is None:
        rows = [-F, F - LAT, sigma * LAT - RI, (1.0 - sigma) * LAT - RA,
                RI + RA]
    else:
        rows = [-F,
                _speed_ratio(lam[1], lam[0]) * F - LAT,
                _speed_ratio(lam[2], lam[1]) * sigma * LAT - RI,
                _speed_ratio(lam[3], lam[1]) * (1.0 - sigma) * LAT - RA,
                _speed_ratio(lam[4], lam[2]) * RI + _speed_ratio(lam[4],
                                                                 lam[3]) * RA]
    return np.stack(rows, axis=axis)


def density_reactions(kind: str, dens: np.ndarray,
                      c: SampledCoefficients) -> np.ndarray:
    """Reaction tendencies for macroscopic densities, shape (..., C, N)."""
    if kind == "SIR":
        return _sir_stack(dens[..., 0, :], dens[..., 1, :], dens[..., 1, :],
                          c, None, -2)
    return _seiar_stack(dens[..., 0, :], dens[..., 1, :], dens[..., 2, :],
                        dens[..., 3, :], dens[..., 2, :], dens[..., 3, :],
                        c, None, -2)


def flux_reactions(kind: str, dens: np.ndarray, flux: np.ndarray,
                   c: SampledCoefficients, lam: np.ndarray) -> np.ndarray:
    """Reaction tendencies for the macroscopic fluxes, shape (..., C, N)."""
    if kind == "SIR":
        return _sir_stack(flux[..., 0, :], flux[..., 1, :], dens[..., 1, :],
                          c, lam, -2)
    return _seiar_stack(flux[..., 0, :], flux[..., 1, :], flux[..., 2, :],
                        flux[..., 3, :], dens[..., 2, :], dens[..., 3, :],
                        c, lam, -2)


def even_parity_reactions(kind: str, parity: np.ndarray, macro: np.ndarray,
                          c: SampledCoefficients) -> np.ndarray:
    """Reactions for even parities (..., C, V, N); incidence uses the
    macroscopic infectious densities ``macro`` of shape (..., C, N)."""
    if kind == "SIR":
        return _sir_stack(parity[..., 0, :, :], parity[..., 1, :, :],
                          macro[..., 1, :], c, None, -3)
    return _seiar_stack(parity[..., 0, :, :], parity[..., 1, :, :],
                        parity[..., 2, :, :], parity[..., 3, :, :],
                        macro[..., 2, :], macro[..., 3, :], c, None, -3)


def odd_parity_reactions(kind: str, parity: np.ndarray, macro: np.ndarray,
                         c: SampledCoefficients, lam: np.ndarray) -> np.ndarray:
    """Reactions for odd parities; transferred sources carry speed ratios
    because odd parities are scaled by their compartment speed."""
    if kind == "SIR":
        return _sir_stack(parity[..., 0, :, :], parity[..., 1, :, :],
                          macro[..., 1, :], c, lam, -3)
    return _seiar_stack(parity[..., 0, :, :], parity[..., 1, :, :],
                        parity[..., 2, :, :], parity[..., 3, :, :],
                        macro[..., 2, :], macro[..., 3, :], c, lam, -3)


def reproduction_number_sir(density: np.ndarray, params: EpidemicParameters,
                            grid: Grid1D, z: np.ndarray,
                            t: float = 0.0) -> float:
    """Space-integrated new infections over removals for an SIR state.

    ``density`` is the (C, N) compartment density array of a single sample.
    """
    c = params.sample(grid.x, np.atleast_2d(z), t)
    S, I = density[0], density[1]
    num = grid.integrate(_incidence(S, I, c.beta[0], c.kappa[0], c.p))
    den = grid.integrate(c.gamma[0] * I)
    if den == 0.0:
        raise UndefinedReproductionNumber("removal integral is zero")
    return float(num / den)


def reproduction_number_seiar(density: np.ndarray, params: EpidemicParameters,
                              grid: Grid1D, z: np.ndarray,
                              t: float = 0.0) -> float:
    """Two-branch SEIAR reproduction number.

    Each infectious branch contributes (incidence over removals) weighted by
    the fraction of latency outflow entering that branch. A branch whose
    latency-outflow weight integrates to zero contributes nothing and its
    removal denominator is not evaluated; a zero denominator on an active
    branch is an error.
    """
    c = params.sample(grid.x, np.atleast_2d(z), t)
    S, E, I, A = density[0], density[1], density[2], density[3]
    lat = grid.integrate(c.a[0] * E)
    if lat == 0.0:
        raise UndefinedReproductionNumber("latency integral a*E is zero")
    value = 0.0
    for weight_field, inf, beta, kappa, gamma in (
            (c.sigma[0], I, c.beta[0], c.kappa[0], c.gamma_I[0]),
            (1.0 - c.sigma[0], A, c.beta_A[0], c.kappa_A[0], c.gamma_A[0])):
        weight = grid.integrate(c.a[0] * weight_field * E) / lat
        if weight == 0.0:
            continue
        num = grid.integrate(_incidence(S, inf, beta, kappa, c.p))
        den = grid.integrate(gamma * inf)
        if den == 0.0:
            raise UndefinedReproductionNumber(
                "removal integral of an active infectious branch is zero")
        value += weight * num / den
    return float(value)
