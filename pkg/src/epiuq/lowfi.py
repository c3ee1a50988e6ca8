"""Low-fidelity solver: macroscopic density/flux form of the two-velocity
epidemic transport model, advanced by the shared AP-IMEX finite-volume step.

Per compartment c the integrated system is

    d_t rho_c + d_x J_c           = epidemic reactions
    d_t J_c   + lam_c^2 d_x rho_c = transferred reactions - J_c / tau_c

The flux relaxation -J/tau is diagonally implicit; the density transport
d_x J sits inside the implicit stage combination but is evaluated in closed
form because the stage flux is solved first; everything else is explicit.
All state arrays carry a leading sample axis so a whole candidate batch
advances in lockstep (identical arithmetic per sample).
"""
from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np

from . import epidemic
from .epidemic import EpidemicParameters, SampledCoefficients
from .errors import ConfigError, NumericsError
from .grid import (Grid1D, flux_divergence, hyperbolic_weight,
                   interface_average_jump)
from .imex import ImexTableau, compute_dt
from .states import (POSITIVITY_FLOOR, MacroState, TransportConfig,
                     check_subcharacteristic)


def _coefficient_source(params: EpidemicParameters, x: np.ndarray,
                        z: np.ndarray) -> Callable[[float], SampledCoefficients]:
    """Per-time coefficient sampler; static fields are sampled once."""
    if params.time_dependent:
        return lambda t: params.sample(x, z, t)
    cached = params.sample(x, z, 0.0)
    return lambda t: cached


def _advance(dens: np.ndarray, flux: np.ndarray,
             coeffs_at: Callable[[float], SampledCoefficients],
             cfg: TransportConfig, grid: Grid1D, dt: float, t: float,
             tab: ImexTableau) -> tuple[np.ndarray, np.ndarray]:
    """One IMEX step of the batched (B, C, N) density/flux arrays."""
    kind = cfg.compartments.kind
    lam = cfg.lam[:, None]
    tau = cfg.tau[:, None]
    # Characteristic upwinding of the density channel is activated by how
    # much of a wave outlives one relaxation step: full MUSCL upwinding in
    # hyperbolic regimes, completely off in stiff ones so the diffusion
    # limit carries no speed-scaled leakage.
    w_up = hyperbolic_weight(tau, dt)
    mu = lam * w_up
    a_i, a_e = tab.a_impl, tab.a_expl
    s = tab.n_stages
    c_e = tab.c_expl
    k_im_d: list = [None] * s
    k_ex_d: list = [None] * s
    k_im_f: list = [None] * s
    k_ex_f: list = [None] * s
    for k in range(s):
        kn_d = dens.copy()
        kn_f = flux.copy()
        for j in range(k):
            if a_e[k, j] != 0.0:
                kn_d += (dt * a_e[k, j]) * k_ex_d[j]
                kn_f += (dt * a_e[k, j]) * k_ex_f[j]
            if a_i[k, j] != 0.0:
                kn_d += (dt * a_i[k, j]) * k_im_d[j]
                kn_f += (dt * a_i[k, j]) * k_im_f[j]
        if a_i[k, k] != 0.0:
            f_k = kn_f / (1.0 + dt * a_i[k, k] / tau)
            k_im_f[k] = (f_k - kn_f) / (dt * a_i[k, k])
        else:
            f_k = kn_f
            k_im_f[k] = -f_k / tau
        # Density transport -d_x J sits inside the implicit combination but
        # is computable now that f_k is known. Its flux is the plain MUSCL
        # interface average: this term may not depend on the unsolved stage
        # density, and speed-scaled dissipation here would survive the stiff
        # limit as spurious diffusion.
        avg_f, jump_f = interface_average_jump(f_k, grid, w_up)
        transport_d = -flux_divergence(avg_f, grid)
        d_k = kn_d + (dt * a_i[k, k]) * transport_d
        k_im_d[k] = transport_d
        # Flux transport lam^2 d_x rho is explicit, with the characteristic
        # dissipation -(lam/2)[[J]] acting on the flux itself; the implicit
        # relaxation damps that dissipation away in the stiff limit.
        avg_d, jump_d = interface_average_jump(d_k, grid, w_up)
        transport_f = -flux_divergence(lam**2 * avg_d - 0.5 * lam * jump_f,
                                       grid)
        dissipation_d = -flux_divergence(-0.5 * mu * jump_d, grid)
        c = coeffs_at(t + c_e[k] * dt)
        k_ex_d[k] = dissipation_d + epidemic.density_reactions(kind, d_k, c)
        k_ex_f[k] = transport_f + epidemic.flux_reactions(kind, d_k, f_k, c,
                                                          cfg.lam)
    new_d = dens.copy()
    new_f = flux.copy()
    for k in range(s):
        if tab.b_expl[k] != 0.0:
            new_d += (dt * tab.b_expl[k]) * k_ex_d[k]
            new_f += (dt * tab.b_expl[k]) * k_ex_f[k]
        if tab.b_impl[k] != 0.0:
            new_d += (dt * tab.b_impl[k]) * k_im_d[k]
            new_f += (dt * tab.b_impl[k]) * k_im_f[k]
    return new_d, new_f


def _check_step(dens: np.ndarray, flux: np.ndarray, step: int) -> None:
    m = float(np.min(dens))
    if not np.isfinite(m) or m < POSITIVITY_FLOOR:
        kind = "negative density" if np.isfinite(m) else "non-finite density"
        raise NumericsError(f"{kind} ({m!r})", step=step)
    if not np.all(np.isfinite(flux)):
        raise NumericsError("non-finite flux", step=step)


def _run(dens: np.ndarray, flux: np.ndarray,
         coeffs_at: Callable[[float], SampledCoefficients],
         cfg: TransportConfig, grid: Grid1D, t_end: float, dt: float,
         tab: ImexTableau) -> tuple[np.ndarray, np.ndarray]:
    t = 0.0
    step = 0
    while t < t_end * (1.0 - 1e-12):
        h = min(dt, t_end - t)
        dens, flux = _advance(dens, flux, coeffs_at, cfg, grid, h, t, tab)
        t += h
        step += 1
        _check_step(dens, flux, step)
    return dens, flux


def lf_step(state: MacroState, params: EpidemicParameters,
            cfg: TransportConfig, grid: Grid1D, dt: float, tab: ImexTableau,
            z: np.ndarray, t: float = 0.0) -> MacroState:
    """Advance a single sample by one IMEX step."""
    if cfg.fidelity != "low":
        raise ConfigError("lf_step requires a low-fidelity transport config")
    coeffs_at = _coefficient_source(params, grid.x, np.atleast_2d(z))
    d, f = _advance(state.density[None], state.flux[None], coeffs_at,
                    cfg, grid, dt, t, tab)
    _check_step(d, f, step=1)
    return MacroState(state.compartments, d[0], f[0])


def lf_run(state: MacroState, params: EpidemicParameters,
           cfg: TransportConfig, grid: Grid1D, t_end: float,
           tab: ImexTableau, z: np.ndarray,
           dt: float | None = None) -> MacroState:
    """Advance a single sample to t_end (final partial step lands exactly)."""
    if cfg.fidelity != "low":
        raise ConfigError("lf_run requires a low-fidelity transport config")
    if t_end <= 0.0:
        raise ConfigError("t_end must be positive")
    if dt is None:
        dt = compute_dt(grid, float(cfg.lam.max()),
                        float(cfg.diffusivities().max()))
    check_subcharacteristic(state, cfg.lam)
    coeffs_at = _coefficient_source(params, grid.x, np.atleast_2d(z))
    d, f = _run(state.density[None], state.flux[None], coeffs_at, cfg, grid,
                t_end, dt, tab)
    return MacroState(state.compartments, d[0], f[0])


def lf_run_batch(density: np.ndarray, flux: np.ndarray,
                 params: EpidemicParameters, cfg: TransportConfig,
                 grid: Grid1D, t_end: float, tab: ImexTableau,
                 z_batch: np.ndarray,
                 dt: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Advance a batch of samples in lockstep; arrays are (B, C, N)."""
    if cfg.fidelity != "low":
        raise ConfigError("lf_run_batch requires a low-fidelity config")
    if dt is None:
        dt = compute_dt(grid, float(cfg.lam.max()),
                        float(cfg.diffusivities().max()))
    coeffs_at = _coefficient_source(params, grid.x, np.atleast_2d(z_batch))
    return _run(np.array(density, dtype=float), np.array(flux, dtype=float),
                coeffs_at, cfg, grid, t_end, dt, tab)
