"""Random-parameter handling and Clenshaw-Curtis sparse-grid collocation.

Random vectors live in a box with independent uniform components. Reference
statistics use Smolyak sparse grids built from nested 1D Clenshaw-Curtis
rules; weights are normalized to probability weights (they sum to one, though
individual Smolyak weights may be negative).
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import comb

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box of independent uniform components."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise ConfigError("domain needs lo < hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def symmetric(cls, dim: int) -> "BoxDomain":
        return cls(-np.ones(dim), np.ones(dim))

    @classmethod
    def unit(cls, dim: int) -> "BoxDomain":
        return cls(np.zeros(dim), np.ones(dim))

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def contains(self, z: np.ndarray, tol: float = 0.0) -> bool:
        z = np.atleast_2d(np.asarray(z, dtype=float))
        return bool(np.all(z >= self.lo - tol) and np.all(z <= self.hi + tol))

    def from_reference(self, x: np.ndarray) -> np.ndarray:
        """Map points from [-1, 1]^d to the box."""
        return self.lo + (self.hi - self.lo) * (np.asarray(x) + 1.0) / 2.0


@dataclass(frozen=True)
class QuadratureRule:
    """Collocation nodes (M, d) and probability weights (M,) over a box."""

    nodes: np.ndarray
    weights: np.ndarray
    domain: BoxDomain

    def __post_init__(self):
        nodes = np.atleast_2d(np.asarray(self.nodes, dtype=float))
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape[0] != weights.shape[0]:
            raise ConfigError("nodes and weights must have equal length")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ConfigError("probability weights must sum to 1")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]


@dataclass(frozen=True)
class StatField:
    """Mean and standard deviation per snapshot entry."""

    mean: np.ndarray
    std: np.ndarray


def _cc_rule_1d(level: int) -> tuple[np.ndarray, np.ndarray]:
    """Nested Clenshaw-Curtis rule on [-1, 1] with 2^level + 1 points
    (a single midpoint at level 0); weights sum to 2."""
    if level == 0:
        return np.zeros(1), np.full(1, 2.0)
    m = 2**level + 1
    n1 = m - 1
    j = np.arange(m)
    theta = j * np.pi / n1
    x = np.cos(theta)
    w = np.ones(m)
    for k in range(1, n1 // 2 + 1):
        b = 1.0 if 2 * k == n1 else 2.0
        w -= b * np.cos(2.0 * k * theta) / (4.0 * k * k - 1.0)
    w *= 2.0 / n1
    w[0] *= 0.5
    w[-1] *= 0.5
    x, w = x[::-1].copy(), w[::-1].copy()
    x = 0.5 * (x - x[::-1])  # exact symmetry; midpoint exactly 0
    return x, w


def cc_sparse_grid(level: int, dim: int, domain: BoxDomain) -> QuadratureRule:
    """Smolyak sparse grid from nested Clenshaw-Curtis rules.

    Uses the combination formula over 1D levels i with
    level - dim + 1 <= |i| <= level; nested 1D nodes make points at different
    levels coincide exactly, so weights accumulate on the union grid.
    """
    if level < 0 or dim < 1:
        raise ConfigError("need level >= 0 and dim >= 1")
    if domain.dim != dim:
        raise ConfigError(f"domain dimension {domain.dim} != {dim}")
    rules = [_cc_rule_1d(l) for l in range(level + 1)]
    acc: dict[tuple, float] = {}
    pts: dict[tuple, tuple] = {}
    for ivec in product(range(level + 1), repeat=dim):
        total = sum(ivec)
        if total < level - dim + 1 or total > level:
            continue
        coeff = (-1.0)**(level - total) * comb(dim - 1, level - total)
        grids = [rules[i] for i in ivec]
        for combo in product(*[range(len(g[0])) for g in grids]):
            point = tuple(grids[k][0][combo[k]] for k in range(dim))
            weight = coeff * np.prod([grids[k][1][combo[k]]
                                      for k in range(dim)])
            key = tuple(round(p, 14) for p in point)
            acc[key] = acc.get(key, 0.0) + weight
            pts[key] = point
    keys = sorted(acc.keys())
    ref_nodes = np.array([pts[k] for k in keys])
    weights = np.array([acc[k] for k in keys]) / 2.0**dim
    return QuadratureRule(domain.from_reference(ref_nodes), weights, domain)


def estimate_stats(evaluations: np.ndarray, rule: QuadratureRule) -> StatField:
    """Quadrature mean and standard deviation of snapshot vectors.

    ``evaluations`` has one row per rule node. The variance is the quadrature
    second moment minus the squared mean, clamped at zero (Smolyak weights
    can be negative, so tiny negative variances are numerical).
    """
    ev = np.atleast_2d(np.asarray(evaluations, dtype=float))
    if ev.shape[0] != rule.n_nodes:
        raise ConfigError(
            f"{ev.shape[0]} evaluations for {rule.n_nodes} nodes")
    mean = rule.weights @ ev
    second = rule.weights @ ev**2
    var = np.maximum(second - mean**2, 0.0)
    return StatField(mean=mean, std=np.sqrt(var))


def uniform_candidates(n: int, domain: BoxDomain, seed: int) -> np.ndarray:
    """Reproducible uniform candidate set, shape (n, d)."""
    if n < 1:
        raise ConfigError("need at least one candidate")
    rng = np.random.default_rng(seed)
    u = rng.random((n, domain.dim))
    return domain.lo + (domain.hi - domain.lo) * u


def rule_to_csv(rule: QuadratureRule, path) -> None:
    """Write node coordinates and weights for audit."""
    d = rule.nodes.shape[1]
    header = ",".join([f"z{k + 1}" for k in range(d)] + ["weight"])
    data = np.column_stack([rule.nodes, rule.weights])
    np.savetxt(path, data, delimiter=",", header=header, comments="",
               fmt="%.17g")
