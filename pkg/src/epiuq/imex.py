"""Globally stiffly accurate IMEX Runge-Kutta machinery.

A double Butcher tableau pairs a diagonally implicit method (stiff relaxation
terms) with an explicit method (transport and reaction terms). Globally
stiffly accurate (GSA) pairs have their last rows equal to the weight
vectors, so the final update coincides with the last internal stage; this is
what lets the scheme land exactly on the limiting diffusion dynamics when the
relaxation time goes to zero.

The built-in pair ``gsa_imex_442`` has four stages in each part and second
order of accuracy, including the additive coupling conditions. Its implicit
part is a stiffly accurate, A- and L-stable SDIRK method (diagonal 1/4). Its
explicit part has the stability polynomial 1 + z + z^2/2 + z^3/10, whose
negative real axis extends to about -3.75: enough headroom for upwind
dissipation at CFL 0.9 stacked on explicitly treated removal rates, and far
beyond what the induced diffusion dynamics need at the parabolic step
dt = dx^2 / (2 D). The pair additionally satisfies the stiff-limit flux
condition (A_impl^{-1} c_expl)_s = 1, so relaxed flux-like variables leave a
step on their local equilibrium (the discrete Fick value) rather than on an
arbitrary stage combination.
"""
from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ConfigError, NumericsError
from .grid import Grid1D

_GSA_ATOL = 1e-12


@dataclass(frozen=True)
class ImexTableau:
    """Double Butcher tableau (implicit part lower triangular, explicit part
    strictly lower triangular) with weight vectors and nominal order."""

    a_impl: np.ndarray
    a_expl: np.ndarray
    b_impl: np.ndarray
    b_expl: np.ndarray
    order: int = 2
    name: str = ""

    def __post_init__(self):
        a_i = np.atleast_2d(np.asarray(self.a_impl, dtype=float))
        a_e = np.atleast_2d(np.asarray(self.a_expl, dtype=float))
        b_i = np.atleast_1d(np.asarray(self.b_impl, dtype=float))
        b_e = np.atleast_1d(np.asarray(self.b_expl, dtype=float))
        s = b_i.shape[0]
        for name, arr, shape in (("a_impl", a_i, (s, s)), ("a_expl", a_e, (s, s)),
                                 ("b_impl", b_i, (s,)), ("b_expl", b_e, (s,))):
            if arr.shape != shape:
                raise ConfigError(f"{name} has shape {arr.shape}, want {shape}")
        if np.any(np.triu(a_i, 1) != 0.0):
            raise ConfigError("implicit part must be lower triangular")
        if np.any(np.triu(a_e, 0) != 0.0):
            raise ConfigError("explicit part must be strictly lower triangular")
        object.__setattr__(self, "a_impl", a_i)
        object.__setattr__(self, "a_expl", a_e)
        object.__setattr__(self, "b_impl", b_i)
        object.__setattr__(self, "b_expl", b_e)

    @property
    def n_stages(self) -> int:
        return self.b_impl.shape[0]

    @property
    def c_impl(self) -> np.ndarray:
        return self.a_impl.sum(axis=1)

    @property
    def c_expl(self) -> np.ndarray:
        return self.a_expl.sum(axis=1)

    @classmethod
    def from_mapping(cls, data: Mapping) -> "ImexTableau":
        """Build a tableau from a config block.

        Matrices are row-major flat lists; every number is an exact decimal
        or rational string (e.g. "1/3", "0.25").
        """
        def num(x) -> float:
            return float(Fraction(str(x)))

        s = int(data["stages"])
        a_i = np.array([num(x) for x in data["a_impl"]]).reshape(s, s)
        a_e = np.array([num(x) for x in data["a_expl"]]).reshape(s, s)
        b_i = np.array([num(x) for x in data["b_impl"]])
        b_e = np.array([num(x) for x in data["b_expl"]])
        return cls(a_i, a_e, b_i, b_e, order=int(data.get("order", 2)),
                   name=str(data.get("name", "")))


def gsa_imex_442() -> ImexTableau:
    """Default four-stage, second-order GSA IMEX pair used by all solvers."""
    q = 0.25
    a_impl = [[q, 0, 0, 0],
              [0.5, q, 0, 0],
              [0.0625, 0.0625, q, 0],
              [q, 0, 0.5, q]]
    a_expl = [[0, 0, 0, 0],
              [0.5, 0, 0, 0],
              [0.2, 0.3, 0, 0],
              [0, 1 / 3, 2 / 3, 0]]
    b_impl = [q, 0, 0.5, q]
    b_expl = [0, 1 / 3, 2 / 3, 0]
    return ImexTableau(a_impl, a_expl, b_impl, b_expl, order=2, name="gsa-442")


def gsa_check(tab: ImexTableau) -> bool:
    """True iff the last implicit row equals b_impl and the last explicit row
    equals b_expl on entries 1..s-1 (the structure that makes the final
    combination coincide with the last internal stage)."""
    s = tab.n_stages
    impl_ok = bool(np.all(np.abs(tab.a_impl[s - 1] - tab.b_impl) <= _GSA_ATOL))
    expl_ok = bool(np.all(
        np.abs(tab.a_expl[s - 1, :s - 1] - tab.b_expl[:s - 1]) <= _GSA_ATOL))
    return impl_ok and expl_ok


@dataclass(frozen=True)
class StiffRelaxation:
    """Relaxation descriptor for ``imex_advance``: tendency -(y - eq) / tau.

    ``tau`` may be a scalar or an array broadcastable to the state.
    ``equilibrium`` is either a constant (array/scalar) or a callable of the
    stage's known part. A callable must compute the equilibrium from
    relaxation-invariant functionals of its argument (e.g. moments), which is
    what makes the diagonally implicit stage solvable in closed form.
    """

    tau: float | np.ndarray
    equilibrium: float | np.ndarray | Callable[[np.ndarray], np.ndarray] = 0.0

    def __post_init__(self):
        if np.any(np.asarray(self.tau, dtype=float) <= 0.0):
            raise ConfigError("relaxation time tau must be positive")

    def value(self, known: np.ndarray) -> np.ndarray:
        if callable(self.equilibrium):
            return np.asarray(self.equilibrium(known), dtype=float)
        return np.broadcast_to(np.asarray(self.equilibrium, dtype=float),
                               known.shape)


def imex_advance(state: np.ndarray, dt: float, tab: ImexTableau,
                 explicit_rhs: Callable[[np.ndarray, float], np.ndarray] | None,
                 stiff_relax: StiffRelaxation, *, t: float = 0.0,
                 return_stages: bool = False):
    """One IMEX step of dy/dt = explicit_rhs(y, t) - (y - eq) / tau.

    Each stage solves its diagonally implicit relaxation exactly: with
    g = dt a_kk / tau the stage value is (known + g eq) / (1 + g), and the
    implicit tendency is recovered as (y_k - known) / (dt a_kk), which stays
    bounded as tau -> 0. For a GSA tableau the returned state equals the last
    internal stage.
    """
    if dt <= 0.0:
        raise ConfigError(f"dt must be positive, got {dt}")
    y0 = np.asarray(state, dtype=float)
    s = tab.n_stages
    a_i, a_e = tab.a_impl, tab.a_expl
    c_e, c_i = tab.c_expl, tab.c_impl
    tau = np.asarray(stiff_relax.tau, dtype=float)
    k_ex = [np.zeros_like(y0) for _ in range(s)]
    k_im = [np.zeros_like(y0) for _ in range(s)]
    stages = []
    for k in range(s):
        known = y0.copy()
        for j in range(k):
            if a_e[k, j] != 0.0:
                known += dt * a_e[k, j] * k_ex[j]
            if a_i[k, j] != 0.0:
                known += dt * a_i[k, j] * k_im[j]
        eq = stiff_relax.value(known)
        if a_i[k, k] != 0.0:
            g = dt * a_i[k, k] / tau
            yk = (known + g * eq) / (1.0 + g)
            k_im[k] = (yk - known) / (dt * a_i[k, k])
        else:
            yk = known
            k_im[k] = -(yk - eq) / tau
        if not np.all(np.isfinite(yk)):
            raise NumericsError("non-finite stage value", stage=k)
        if explicit_rhs is not None:
            k_ex[k] = np.asarray(explicit_rhs(yk, t + c_e[k] * dt), dtype=float)
        stages.append(yk)
    y1 = y0.copy()
    for k in range(s):
        if tab.b_expl[k] != 0.0:
            y1 += dt * tab.b_expl[k] * k_ex[k]
        if tab.b_impl[k] != 0.0:
            y1 += dt * tab.b_impl[k] * k_im[k]
    if not np.all(np.isfinite(y1)):
        raise NumericsError("non-finite state after update", stage=s - 1)
    if return_stages:
        return y1, stages
    return y1


def compute_dt(grid: Grid1D, lambda_max: float, d_max: float, *,
               nu_hyperbolic: float = 0.9, nu_parabolic: float = 1.0) -> float:
    """Time step for the AP-IMEX solvers.

    The governing restriction is the larger of the hyperbolic CFL step
    nu_h dx / lambda and the parabolic step nu_p dx^2 / (2 D): in stiff
    (diffusive) regimes the implicit relaxation removes the acoustic CFL
    constraint and the limiting explicit diffusion dynamics govern, while in
    hyperbolic regimes the CFL step is the larger one and governs.
    """
    if lambda_max < 0.0 or d_max < 0.0:
        raise ConfigError("speeds and diffusivities must be nonnegative")
    if lambda_max <= 0.0 and d_max <= 0.0:
        raise ConfigError("need a positive speed or a positive diffusivity")
    candidates = []
    if lambda_max > 0.0:
        candidates.append(nu_hyperbolic * grid.dx / lambda_max)
    if d_max > 0.0:
        candidates.append(nu_parabolic * grid.dx**2 / (2.0 * d_max))
    return max(candidates)
