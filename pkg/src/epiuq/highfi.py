"""High-fidelity solver: kinetic transport via even/odd parities on
Gauss-Legendre discrete ordinates.

For each velocity node zeta > 0 and compartment c the parity pair obeys

    d_t r_c + zeta d_x j_c           = E(r)_c + (R_c/2 - r_c) / tau_c
    d_t j_c + lam_c^2 zeta d_x r_c   = E(j)_c - j_c / tau_c

with R_c the velocity moment of r_c. Both relaxations are diagonally
implicit. The odd-parity stage is solved pointwise; the even-parity stage is
closed by taking the weighted velocity moment of its equation (the moment of
the relaxation term vanishes because the weights sum to 2), which yields the
stage moment explicitly and then the stage parities by back substitution.
Negative nodes never appear: parities are even/odd under velocity reflection,
so moments are sums over the positive nodes with doubled weights.
"""
from __future__ import annotations

from collections.abc import Callable

import numpy as np

from . import epidemic
from .epidemic import EpidemicParameters, SampledCoefficients
from .errors import ConfigError, NumericsError
from .grid import (Grid1D, flux_divergence, hyperbolic_weight,
                   interface_average_jump)
from .imex import ImexTableau, compute_dt
from .lowfi import _coefficient_source
from .states import (POSITIVITY_FLOOR, KineticState, MacroState,
                     TransportConfig, VelocityQuadrature)


def kinetic_init(macro: MacroState, quad: VelocityQuadrature,
                 profile: Callable[[np.ndarray], np.ndarray] | None = None
                 ) -> KineticState:
    """Build parities from macroscopic densities and a velocity shape.

    The shape (default exp(-v^2/2)) is normalized against the discrete
    quadrature so the moments reproduce the macroscopic densities exactly.
    Requires zero initial macroscopic fluxes (an even profile carries none).
    """
    if np.max(np.abs(macro.flux)) > 1e-12:
        raise ConfigError("kinetic_init requires zero initial fluxes")
    if profile is None:
        profile = lambda v: np.exp(-0.5 * v**2)
    zeta, w = quad.positive_half()
    shape = np.asarray(profile(zeta), dtype=float)
    if np.any(shape < 0.0):
        raise ConfigError("velocity profile must be nonnegative")
    shape = shape / np.sum(w * shape)
    r = macro.density[:, None, :] * shape[None, :, None]
    return KineticState(macro.compartments, r, np.zeros_like(r))


def moments(state: KineticState, quad: VelocityQuadrature) -> MacroState:
    """Macroscopic densities and fluxes from the parities."""
    zeta, w = quad.positive_half()
    dens = np.einsum("v,...vn->...n", w, state.r)
    flux = np.einsum("v,...vn->...n", w * zeta, state.j)
    return MacroState(state.compartments, dens, flux)


def _moments_batch(r: np.ndarray, w: np.ndarray) -> np.ndarray:
    """(B, C, V, N) parities -> (B, C, N) densities under weights w."""
    return np.einsum("v,bcvn->bcn", w, r)


def _advance(r: np.ndarray, j: np.ndarray,
             coeffs_at: Callable[[float], SampledCoefficients],
             cfg: TransportConfig, grid: Grid1D,
             zeta: np.ndarray, w: np.ndarray,
             dt: float, t: float, tab: ImexTableau
             ) -> tuple[np.ndarray, np.ndarray]:
    """One IMEX step of the batched (B, C, V, N) parity arrays."""
    kind = cfg.compartments.kind
    lam = cfg.lam[:, None, None]
    tau = cfg.tau[:, None, None]
    v = zeta[:, None]
    # Characteristic upwinding of the even-parity channel, per node, is
    # activated by the fraction of a wave outliving one relaxation step
    # (full upwinding in hyperbolic regimes, off in stiff ones).
    w_up = hyperbolic_weight(tau, dt)
    mu = lam * v * w_up
    a_i, a_e = tab.a_impl, tab.a_expl
    s = tab.n_stages
    c_e = tab.c_expl
    k_im_r: list = [None] * s
    k_ex_r: list = [None] * s
    k_im_j: list = [None] * s
    k_ex_j: list = [None] * s
    for k in range(s):
        kn_r = r.copy()
        kn_j = j.copy()
        for m in range(k):
            if a_e[k, m] != 0.0:
                kn_r += (dt * a_e[k, m]) * k_ex_r[m]
                kn_j += (dt * a_e[k, m]) * k_ex_j[m]
            if a_i[k, m] != 0.0:
                kn_r += (dt * a_i[k, m]) * k_im_r[m]
                kn_j += (dt * a_i[k, m]) * k_im_j[m]
        if a_i[k, k] != 0.0:
            g = dt * a_i[k, k] / tau
            j_k = kn_j / (1.0 + g)
            k_im_j[k] = (j_k - kn_j) / (dt * a_i[k, k])
        else:
            g = None
            j_k = kn_j
            k_im_j[k] = -j_k / tau
        # Even-parity transport -v d_x j sits inside the implicit combination
        # but is computable now that j_k is known; its flux is the plain MUSCL
        # interface average (dissipation here would pollute the stiff limit).
        avg_j, jump_j = interface_average_jump(j_k, grid, w_up)
        transport_r = -flux_divergence(v * avg_j, grid)
        if g is not None:
            # Moment closure: the relaxation moment vanishes (weights sum to
            # 2), so the stage moment is the moment of the known part; the
            # stage parities follow by back substitution.
            known2 = kn_r + (dt * a_i[k, k]) * transport_r
            moment = _moments_batch(known2, w)
            r_k = (known2 + g * 0.5 * moment[:, :, None, :]) / (1.0 + g)
            k_im_r[k] = (r_k - kn_r) / (dt * a_i[k, k])
        else:
            r_k = kn_r
            moment = _moments_batch(r_k, w)
            k_im_r[k] = (transport_r
                         + (0.5 * moment[:, :, None, :] - r_k) / tau)
        # Odd-parity transport lam^2 v d_x r is explicit, with characteristic
        # dissipation -(lam v / 2)[[j]] damped out by the stiff relaxation.
        avg_r, jump_r = interface_average_jump(r_k, grid, w_up)
        transport_j = -flux_divergence(v * (lam**2 * avg_r
                                            - 0.5 * lam * jump_j), grid)
        dissipation_r = -flux_divergence(-0.5 * mu * jump_r, grid)
        c = coeffs_at(t + c_e[k] * dt)
        macro_k = _moments_batch(r_k, w)
        k_ex_r[k] = dissipation_r + epidemic.even_parity_reactions(
            kind, r_k, macro_k, c)
        k_ex_j[k] = transport_j + epidemic.odd_parity_reactions(
            kind, j_k, macro_k, c, cfg.lam)
    new_r = r.copy()
    new_j = j.copy()
    for k in range(s):
        if tab.b_expl[k] != 0.0:
            new_r += (dt * tab.b_expl[k]) * k_ex_r[k]
            new_j += (dt * tab.b_expl[k]) * k_ex_j[k]
        if tab.b_impl[k] != 0.0:
            new_r += (dt * tab.b_impl[k]) * k_im_r[k]
            new_j += (dt * tab.b_impl[k]) * k_im_j[k]
    return new_r, new_j


def _check_step(r: np.ndarray, j: np.ndarray, w: np.ndarray,
                step: int) -> None:
    dens = _moments_batch(r, w)
    m = float(np.min(dens))
    if not np.isfinite(m) or m < POSITIVITY_FLOOR:
        kind = "negative density" if np.isfinite(m) else "non-finite density"
        raise NumericsError(f"{kind} ({m!r})", step=step)
    if not np.all(np.isfinite(j)):
        raise NumericsError("non-finite odd parity", step=step)


def _run(r: np.ndarray, j: np.ndarray,
         coeffs_at: Callable[[float], SampledCoefficients],
         cfg: TransportConfig, grid: Grid1D, quad: VelocityQuadrature,
         t_end: float, dt: float, tab: ImexTableau
         ) -> tuple[np.ndarray, np.ndarray]:
    zeta, w = quad.positive_half()
    t = 0.0
    step = 0
    while t < t_end * (1.0 - 1e-12):
        h = min(dt, t_end - t)
        r, j = _advance(r, j, coeffs_at, cfg, grid, zeta, w, h, t, tab)
        t += h
        step += 1
        _check_step(r, j, w, step)
    return r, j


def hf_step(state: KineticState, params: EpidemicParameters,
            cfg: TransportConfig, grid: Grid1D, quad: VelocityQuadrature,
            dt: float, tab: ImexTableau, z: np.ndarray,
            t: float = 0.0) -> KineticState:
    """Advance a single sample by one IMEX step."""
    if cfg.fidelity != "high":
        raise ConfigError("hf_step requires a high-fidelity transport config")
    zeta, w = quad.positive_half()
    if state.r.shape[1] != zeta.shape[0]:
        raise ConfigError("state velocity axis does not match the quadrature")
    coeffs_at = _coefficient_source(params, grid.x, np.atleast_2d(z))
    r, j = _advance(state.r[None], state.j[None], coeffs_at, cfg, grid,
                    zeta, w, dt, t, tab)
    _check_step(r, j, w, step=1)
    return KineticState(state.compartments, r[0], j[0])


def hf_run(state: KineticState, params: EpidemicParameters,
           cfg: TransportConfig, grid: Grid1D, quad: VelocityQuadrature,
           t_end: float, tab: ImexTableau, z: np.ndarray,
           dt: float | None = None) -> KineticState:
    """Advance a single sample to t_end (final partial step lands exactly)."""
    if cfg.fidelity != "high":
        raise ConfigError("hf_run requires a high-fidelity transport config")
    if t_end <= 0.0:
        raise ConfigError("t_end must be positive")
    if dt is None:
        dt = compute_dt(grid, float(cfg.lam.max()),
                        float(cfg.diffusivities().max()))
    coeffs_at = _coefficient_source(params, grid.x, np.atleast_2d(z))
    r, j = _run(state.r[None], state.j[None], coeffs_at, cfg, grid, quad,
                t_end, dt, tab)
    return KineticState(state.compartments, r[0], j[0])


def hf_run_batch(r: np.ndarray, j: np.ndarray, params: EpidemicParameters,
                 cfg: TransportConfig, grid: Grid1D, quad: VelocityQuadrature,
                 t_end: float, tab: ImexTableau, z_batch: np.ndarray,
                 dt: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Advance a batch of samples in lockstep; arrays are (B, C, V, N)."""
    if cfg.fidelity != "high":
        raise ConfigError("hf_run_batch requires a high-fidelity config")
    if dt is None:
        dt = compute_dt(grid, float(cfg.lam.max()),
                        float(cfg.diffusivities().max()))
    coeffs_at = _coefficient_source(params, grid.x, np.atleast_2d(z_batch))
    return _run(np.array(r, dtype=float), np.array(j, dtype=float),
                coeffs_at, cfg, grid, quad, t_end, dt, tab)
