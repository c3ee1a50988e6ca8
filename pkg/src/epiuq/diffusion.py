"""Reference solver for the limiting reaction-diffusion systems.

Used as the consistency oracle for the transport solvers in stiff regimes.
Diffusion (constant coefficient per compartment) is treated implicitly by
diagonalizing the periodic three-point Laplacian with the real FFT, so the
oracle is unconditionally stable and never constrains experiment step sizes;
reactions are explicit. Time integration reuses the shared IMEX tableau,
which makes the oracle second order like the transport solvers.
"""
from __future__ import annotations

from collections.abc import Callable

import numpy as np

from . import epidemic
from .epidemic import EpidemicParameters, SampledCoefficients
from .errors import ConfigError, NumericsError
from .grid import Grid1D
from .imex import ImexTableau
from .lowfi import _coefficient_source
from .states import POSITIVITY_FLOOR, MacroState


def _laplacian_symbol(grid: Grid1D) -> np.ndarray:
    """Eigenvalues of the periodic (u_{i-1} - 2 u_i + u_{i+1}) / dx^2 stencil
    on the rfft modes."""
    theta = 2.0 * np.pi * np.arange(grid.n_cells // 2 + 1) / grid.n_cells
    return (2.0 * np.cos(theta) - 2.0) / grid.dx**2


def _laplacian(u: np.ndarray, grid: Grid1D) -> np.ndarray:
    return (np.roll(u, 1, axis=-1) - 2.0 * u
            + np.roll(u, -1, axis=-1)) / grid.dx**2


def _advance(dens: np.ndarray, coeffs_at: Callable[[float],
                                                   SampledCoefficients],
             kind: str, diffusivities: np.ndarray, grid: Grid1D,
             dt: float, t: float, tab: ImexTableau) -> np.ndarray:
    """One IMEX step of the batched (B, C, N) densities."""
    sym = _laplacian_symbol(grid)
    d_sym = diffusivities[:, None] * sym
    a_i, a_e = tab.a_impl, tab.a_expl
    s = tab.n_stages
    k_im: list = [None] * s
    k_ex: list = [None] * s
    for k in range(s):
        known = dens.copy()
        for j in range(k):
            if a_e[k, j] != 0.0:
                known += (dt * a_e[k, j]) * k_ex[j]
            if a_i[k, j] != 0.0:
                known += (dt * a_i[k, j]) * k_im[j]
        if a_i[k, k] != 0.0:
            u_hat = np.fft.rfft(known, axis=-1)
            u_hat /= (1.0 - dt * a_i[k, k] * d_sym)
            u_k = np.fft.irfft(u_hat, n=grid.n_cells, axis=-1)
            k_im[k] = (u_k - known) / (dt * a_i[k, k])
        else:
            u_k = known
            k_im[k] = diffusivities[:, None] * _laplacian(u_k, grid)
        k_ex[k] = epidemic.density_reactions(kind, u_k,
                                             coeffs_at(t + tab.c_expl[k] * dt))
    new = dens.copy()
    for k in range(s):
        if tab.b_expl[k] != 0.0:
            new += (dt * tab.b_expl[k]) * k_ex[k]
        if tab.b_impl[k] != 0.0:
            new += (dt * tab.b_impl[k]) * k_im[k]
    return new


def diffusion_step(state: MacroState, params: EpidemicParameters,
                   diffusivities: np.ndarray, grid: Grid1D, dt: float,
                   tab: ImexTableau, z: np.ndarray,
                   t: float = 0.0) -> MacroState:
    """Advance the reaction-diffusion densities of one sample by one step."""
    coeffs_at = _coefficient_source(params, grid.x, np.atleast_2d(z))
    dens = _advance(state.density[None], coeffs_at,
                    state.compartments.kind,
                    np.asarray(diffusivities, dtype=float), grid, dt, t, tab)
    if not np.all(np.isfinite(dens)):
        raise NumericsError("non-finite density", step=1)
    return MacroState(state.compartments, dens[0], np.zeros_like(dens[0]))


def diffusion_run(state: MacroState, params: EpidemicParameters,
                  diffusivities: np.ndarray, grid: Grid1D, t_end: float,
                  dt: float, tab: ImexTableau, z: np.ndarray) -> MacroState:
    """Advance to t_end with a final partial step (single sample)."""
    if t_end <= 0.0:
        raise ConfigError("t_end must be positive")
    coeffs_at = _coefficient_source(params, grid.x, np.atleast_2d(z))
    dens = state.density[None].copy()
    kind = state.compartments.kind
    dvec = np.asarray(diffusivities, dtype=float)
    t = 0.0
    step = 0
    while t < t_end * (1.0 - 1e-12):
        h = min(dt, t_end - t)
        dens = _advance(dens, coeffs_at, kind, dvec, grid, h, t, tab)
        t += h
        step += 1
        m = float(np.min(dens))
        if not np.isfinite(m) or m < POSITIVITY_FLOOR:
            raise NumericsError(f"density out of range ({m!r})", step=step)
    return MacroState(state.compartments, dens[0], np.zeros_like(dens[0]))
