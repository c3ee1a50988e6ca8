"""State containers and transport configuration shared by the solvers."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .epidemic import CompartmentSet
from .errors import ConfigError

POSITIVITY_FLOOR = -1e-8  # densities below this fail a run (monitored, not clipped)


@dataclass
class MacroState:
    """Per-cell compartment densities and fluxes, arrays of shape (C, N)."""

    compartments: CompartmentSet
    density: np.ndarray
    flux: np.ndarray

    def __post_init__(self):
        self.density = np.asarray(self.density, dtype=float)
        self.flux = np.asarray(self.flux, dtype=float)
        c = self.compartments.n
        if self.density.shape != self.flux.shape or self.density.shape[0] != c:
            raise ConfigError(
                f"state arrays must both be ({c}, n_cells); got density "
                f"{self.density.shape}, flux {self.flux.shape}")

    @classmethod
    def zeros(cls, compartments: CompartmentSet, n_cells: int) -> "MacroState":
        shape = (compartments.n, n_cells)
        return cls(compartments, np.zeros(shape), np.zeros(shape))

    @property
    def n_cells(self) -> int:
        return self.density.shape[-1]

    def copy(self) -> "MacroState":
        return replace(self, density=self.density.copy(),
                       flux=self.flux.copy())

    def total_density(self) -> np.ndarray:
        """Sum over compartments, per cell."""
        return self.density.sum(axis=0)

    def snapshot(self) -> np.ndarray:
        """Compartment-major flat vector of the densities (fluxes excluded)."""
        return self.density.reshape(-1).copy()


def check_subcharacteristic(state: MacroState, lam: np.ndarray,
                            tol: float = 1e-12) -> None:
    """Initialization sanity: |J_c| <= lam_c * density_c + tol."""
    bound = lam[:, None] * state.density + tol
    if np.any(np.abs(state.flux) > bound):
        raise ConfigError("initial fluxes exceed the subcharacteristic bound")


@dataclass(frozen=True)
class TransportConfig:
    """Characteristic speeds and relaxation times per compartment."""

    compartments: CompartmentSet
    lam: np.ndarray
    tau: np.ndarray
    fidelity: str

    def __post_init__(self):
        lam = np.broadcast_to(np.asarray(self.lam, dtype=float),
                              (self.compartments.n,)).copy()
        tau = np.broadcast_to(np.asarray(self.tau, dtype=float),
                              (self.compartments.n,)).copy()
        if self.fidelity not in ("low", "high"):
            raise ConfigError(f"fidelity must be 'low' or 'high', "
                              f"got {self.fidelity!r}")
        if np.any(lam < 0.0):
            raise ConfigError("characteristic speeds must be nonnegative")
        if np.any(tau <= 0.0):
            raise ConfigError("relaxation times must be positive")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "tau", tau)

    def diffusivities(self) -> np.ndarray:
        """lam^2 tau for the two-velocity model, lam^2 tau / 3 kinetically."""
        d = self.lam**2 * self.tau
        if self.fidelity == "high":
            d = d / 3.0
        return d


@dataclass(frozen=True)
class VelocityQuadrature:
    """Gauss-Legendre velocity nodes and weights on [-1, 1]."""

    n_nodes: int
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape != (self.n_nodes,) or weights.shape != (self.n_nodes,):
            raise ConfigError("nodes/weights must have length n_nodes")
        if abs(weights.sum() - 2.0) > 1e-13:
            raise ConfigError("quadrature weights must sum to 2 on [-1, 1]")
        if np.max(np.abs(np.sort(nodes) + np.sort(nodes)[::-1])) > 1e-13:
            raise ConfigError("velocity nodes must be symmetric about 0")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def gauss_legendre(cls, n: int) -> "VelocityQuadrature":
        if n < 2 or n % 2:
            raise ConfigError("need an even number (>= 2) of velocity nodes")
        nodes, weights = np.polynomial.legendre.leggauss(n)
        return cls(n, nodes, weights)

    def positive_half(self) -> tuple[np.ndarray, np.ndarray]:
        """Positive nodes with doubled weights.

        Parities are advanced on v > 0 only; summing an even function over
        the full symmetric rule equals summing the doubled weights over the
        positive half, which is how the moment factor 2*int_0^1 is realized.
        """
        mask = self.nodes > 0.0
        zeta = self.nodes[mask]
        order = np.argsort(zeta)
        return zeta[order], 2.0 * self.weights[mask][order]


@dataclass
class KineticState:
    """Even/odd parities per compartment and positive velocity node.

    Arrays have shape (C, V, N) where V counts the positive quadrature nodes;
    the odd parity is already scaled by the compartment speed.
    """

    compartments: CompartmentSet
    r: np.ndarray
    j: np.ndarray

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.j = np.asarray(self.j, dtype=float)
        if (self.r.shape != self.j.shape or self.r.ndim != 3
                or self.r.shape[0] != self.compartments.n):
            raise ConfigError(
                f"parity arrays must both be (C, V, N) with C = "
                f"{self.compartments.n}; got {self.r.shape}, {self.j.shape}")

    def copy(self) -> "KineticState":
        return replace(self, r=self.r.copy(), j=self.j.copy())


def snapshot_from_density(density: np.ndarray) -> np.ndarray:
    """Flatten (..., C, N) densities to compartment-major (..., C*N)."""
    return np.reshape(density, density.shape[:-2] + (-1,))
