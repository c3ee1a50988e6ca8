"""Bi-fidelity engine: greedy point selection on low-fidelity snapshots,
projection-coefficient transfer, surrogate evaluation and statistics.

Snapshots are flat vectors compared in the cell-weighted inner product
<u, v> = dx * sum(u v). The greedy pass picks, at every step, the candidate
whose snapshot is farthest from the span of the already selected ones; that
is exactly diagonal-pivoted Cholesky on the candidate Gramian, whose residual
diagonal entries are the squared distances to the current span. The surrogate
at a new point runs only the low-fidelity model, projects onto the selected
low-fidelity snapshots and re-combines the matched high-fidelity snapshots
with the same coefficients.
"""
from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.linalg import cho_solve, cholesky

from .collocation import QuadratureRule, StatField, estimate_stats
from .errors import ConditioningError, ConfigError, RankDeficiencyError

RANK_TOL = 1e-14  # residual squared distance below this is numerically zero


@dataclass(frozen=True)
class SnapshotSet:
    """Sample points (M, d), snapshot vectors (M, K) and the inner-product
    cell weight dx."""

    samples: np.ndarray
    vectors: np.ndarray
    weight: float

    def __post_init__(self):
        samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        vectors = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        if samples.shape[0] != vectors.shape[0]:
            raise ConfigError("one snapshot vector per sample required")
        if self.weight <= 0.0:
            raise ConfigError("inner-product weight must be positive")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "vectors", vectors)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    def gramian(self) -> np.ndarray:
        g = self.weight * (self.vectors @ self.vectors.T)
        return 0.5 * (g + g.T)

    def inner(self, u: np.ndarray) -> np.ndarray:
        """<u, v_k> against every stored snapshot."""
        return self.weight * (self.vectors @ np.asarray(u, dtype=float))


@dataclass(frozen=True)
class BiFiBasis:
    """Greedy-selected snapshot basis with its Cholesky-factored Gramian.

    ``selection_distances`` holds the distance of each pick to the span of
    its predecessors (non-increasing). ``hf_snapshots`` is attached after the
    matching high-fidelity runs.
    """

    selected_indices: np.ndarray
    samples: np.ndarray
    lf_basis: np.ndarray
    gramian_chol: np.ndarray
    selection_distances: np.ndarray
    weight: float
    hf_snapshots: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.lf_basis.shape[0]

    def with_hf_snapshots(self, snapshots: np.ndarray) -> "BiFiBasis":
        snapshots = np.atleast_2d(np.asarray(snapshots, dtype=float))
        if snapshots.shape[0] != self.n:
            raise ConfigError("need one high-fidelity snapshot per basis point")
        return replace(self, hf_snapshots=snapshots)

    def truncated(self, n: int) -> "BiFiBasis":
        """Leading sub-basis of the first n picks (selection is nested)."""
        if not 1 <= n <= self.n:
            raise ConfigError(f"truncation size {n} outside 1..{self.n}")
        hf = None if self.hf_snapshots is None else self.hf_snapshots[:n]
        return BiFiBasis(self.selected_indices[:n], self.samples[:n],
                         self.lf_basis[:n], self.gramian_chol[:n, :n],
                         self.selection_distances[:n], self.weight, hf)


def greedy_select(candidates: SnapshotSet, n: int) -> BiFiBasis:
    """Pick n snapshots by farthest-distance-to-span, ties to lowest index.

    Implemented as diagonal-pivoted Cholesky on the candidate Gramian; the
    residual diagonal after k picks equals the squared distance of every
    candidate to the span of the selected k. Raises when the largest residual
    drops below threshold before n picks.
    """
    if n < 1 or n > candidates.n:
        raise ConfigError(f"selection size {n} outside 1..{candidates.n}")
    gram = candidates.gramian()
    m = candidates.n
    diag = np.diag(gram).copy()
    cols = np.zeros((m, n))
    order = np.zeros(n, dtype=int)
    dist2 = np.zeros(n)
    for k in range(n):
        p = int(np.argmax(diag))
        if diag[p] < RANK_TOL:
            raise RankDeficiencyError(
                "candidate snapshots are numerically rank deficient",
                achievable=k)
        order[k] = p
        dist2[k] = diag[p]
        col = gram[:, p] - cols[:, :k] @ cols[p, :k]
        col /= np.sqrt(diag[p])
        cols[:, k] = col
        diag -= col**2
        diag[order[:k + 1]] = -np.inf  # selected points never re-enter
    lf_basis = candidates.vectors[order]
    sub = gram[np.ix_(order, order)]
    try:
        chol = cholesky(sub, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(
            "selected Gramian lost positive definiteness") from exc
    return BiFiBasis(order, candidates.samples[order], lf_basis, chol,
                     np.sqrt(dist2), candidates.weight)


def _solve_coefficients(chol: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    if np.min(np.diag(chol)) < RANK_TOL:
        raise ConditioningError("Gramian factor has a negligible pivot")
    return cho_solve((chol, True), rhs)


def project_coefficients(u_lf: np.ndarray, basis: BiFiBasis) -> np.ndarray:
    """Coefficients of the best approximation of u_lf in the basis span.

    Solves G c = f with f_k = <u_lf, lf_basis_k> through the stored Cholesky
    factor; the residual u_lf - sum c_k lf_basis_k is orthogonal to the span.
    """
    f = basis.weight * (basis.lf_basis @ np.asarray(u_lf, dtype=float))
    return _solve_coefficients(basis.gramian_chol, f)


def bifi_eval(z: np.ndarray, basis: BiFiBasis,
              lf_solver: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Bi-fidelity surrogate at z: low-fidelity run, projection, and
    recombination of the matched high-fidelity snapshots."""
    if basis.hf_snapshots is None:
        raise ConfigError("basis carries no high-fidelity snapshots")
    u_lf = np.asarray(lf_solver(np.asarray(z, dtype=float)), dtype=float)
    c = project_coefficients(u_lf, basis)
    return c @ basis.hf_snapshots


def bifi_stats(basis: BiFiBasis, rule: QuadratureRule,
               lf_evals: np.ndarray) -> StatField:
    """Bi-fidelity mean and standard deviation over a quadrature rule.

    Every low-fidelity rule evaluation is projected onto the selected
    low-fidelity snapshots and re-combined with the high-fidelity ones; the
    statistics are then the quadrature statistics of that surrogate ensemble.
    By linearity of the projection the mean equals the cheaper route of
    projecting the low-fidelity quadrature mean once; the standard deviation,
    however, is computed from the reconstructed ensemble directly, which
    avoids extracting a small variance from the cancellation of two separate
    second-moment reconstructions. A z-independent solution therefore yields
    exactly zero spread, and the variance is clamped at zero.
    """
    if basis.hf_snapshots is None:
        raise ConfigError("basis carries no high-fidelity snapshots")
    lf_evals = np.atleast_2d(np.asarray(lf_evals, dtype=float))
    if lf_evals.shape[0] != rule.n_nodes:
        raise ConfigError(
            f"{lf_evals.shape[0]} low-fidelity runs for {rule.n_nodes} nodes")
    rhs = basis.weight * (basis.lf_basis @ lf_evals.T)
    coeffs = _solve_coefficients(basis.gramian_chol, rhs)
    surrogates = coeffs.T @ basis.hf_snapshots
    return estimate_stats(surrogates, rule)


def relative_l2_error(approx: np.ndarray, reference: np.ndarray,
                      weight: float = 1.0) -> float:
    """Weighted L2 norm of the difference over the norm of the reference."""
    approx = np.asarray(approx, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if approx.shape != reference.shape:
        raise ConfigError("fields must have equal shape")
    ref_norm = np.sqrt(weight * np.sum(reference**2))
    if ref_norm == 0.0:
        raise ConfigError("reference field has zero norm")
    return float(np.sqrt(weight * np.sum((approx - reference)**2)) / ref_norm)


def save_basis(basis: BiFiBasis, directory) -> None:
    """Persist the basis (points, distances, snapshots) as CSV files."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    d = basis.samples.shape[1]
    header = ",".join(["k"] + [f"z{i + 1}" for i in range(d)] + ["distance"])
    table = np.column_stack([np.arange(1, basis.n + 1), basis.samples,
                             basis.selection_distances])
    np.savetxt(directory / "selected_points.csv", table, delimiter=",",
               header=header, comments="", fmt="%.17g")
    np.savetxt(directory / "lf_snapshots.csv", basis.lf_basis, delimiter=",",
               fmt="%.17g")
    if basis.hf_snapshots is not None:
        np.savetxt(directory / "hf_snapshots.csv", basis.hf_snapshots,
                   delimiter=",", fmt="%.17g")
    with open(directory / "basis_meta.csv", "w", encoding="utf-8") as fh:
        fh.write("key,value\n")
        fh.write(f"weight,{basis.weight:.17g}\n")
        fh.write(f"n,{basis.n}\n")
        fh.write("indices," + " ".join(str(i) for i in
                                       basis.selected_indices) + "\n")


def load_basis(directory) -> BiFiBasis:
    """Rebuild a persisted basis; the Gramian factor is recomputed."""
    directory = Path(directory)
    table = np.loadtxt(directory / "selected_points.csv", delimiter=",",
                       skiprows=1, ndmin=2)
    lf = np.loadtxt(directory / "lf_snapshots.csv", delimiter=",", ndmin=2)
    meta = {}
    with open(directory / "basis_meta.csv", encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            key, value = line.strip().split(",", 1)
            meta[key] = value
    weight = float(meta["weight"])
    indices = np.array([int(s) for s in meta["indices"].split()])
    gram = weight * (lf @ lf.T)
    chol = cholesky(0.5 * (gram + gram.T), lower=True)
    basis = BiFiBasis(indices, table[:, 1:-1], lf, chol, table[:, -1], weight)
    hf_path = directory / "hf_snapshots.csv"
    if hf_path.exists():
        basis = basis.with_hf_snapshots(
            np.loadtxt(hf_path, delimiter=",", ndmin=2))
    return basis
