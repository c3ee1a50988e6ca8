"""End-to-end experiment orchestration and CSV emission.

A pipeline run executes, in order: low-fidelity solves over the candidate
set, greedy point selection, high-fidelity solves at the selected points,
low- and high-fidelity solves at the reference quadrature nodes, bi-fidelity
and reference statistics, and the error-decay table over every basis size up
to the configured one. Scientific outputs (fields, errors, selected points)
are bit-reproducible for a fixed seed; timing output is not part of that
contract.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bifidelity, collocation, highfi, lowfi
from .bifidelity import BiFiBasis, SnapshotSet, relative_l2_error
from .collocation import QuadratureRule, StatField
from .errors import ConfigError
from .imex import gsa_imex_442
from .scenarios import ScenarioConfig, baseline_reproduction_number
from .states import snapshot_from_density


@dataclass
class PipelineReport:
    """Everything a run produced, with output paths for the CSV artifacts."""

    scenario: str
    out_dir: Path
    dt: float
    basis: BiFiBasis | None
    hf_stats: StatField
    lf_stats: StatField
    bf_stats: StatField | None
    error_rows: list[dict]
    timings: dict[str, float]
    baseline_r0: float


def _lf_snapshots(config: ScenarioConfig, z_batch: np.ndarray,
                  dt: float) -> np.ndarray:
    """Final-time density snapshots of the low-fidelity model, (B, K)."""
    dens0, flux0 = config.initial_macro_batch(z_batch)
    dens, _ = lowfi.lf_run_batch(dens0, flux0, config.params,
                                 config.transport("low"), config.grid(),
                                 config.t_end, gsa_imex_442(), z_batch,
                                 dt=dt)
    return snapshot_from_density(dens)


def _hf_snapshots(config: ScenarioConfig, z_batch: np.ndarray,
                  dt: float) -> np.ndarray:
    """Final-time density snapshots of the high-fidelity model, (B, K)."""
    quad = config.quadrature()
    zeta, w = quad.positive_half()
    dens0, _ = config.initial_macro_batch(z_batch)
    shape = np.exp(-0.5 * zeta**2)
    shape = shape / np.sum(w * shape)
    r0 = dens0[:, :, None, :] * shape[None, None, :, None]
    r, _ = highfi.hf_run_batch(r0, np.zeros_like(r0), config.params,
                               config.transport("high"), config.grid(), quad,
                               config.t_end, gsa_imex_442(), z_batch, dt=dt)
    dens = np.einsum("v,bcvn->bcn", w, r)
    return snapshot_from_density(dens)


def _per_compartment_errors(approx: np.ndarray, reference: np.ndarray,
                            config: ScenarioConfig, dx: float) -> dict:
    """Relative L2 errors per compartment plus the concatenated vector."""
    n = config.n_cells
    out = {}
    for i, label in enumerate(config.compartments.members):
        seg = slice(i * n, (i + 1) * n)
        out[label] = relative_l2_error(approx[seg], reference[seg], dx)
    out["all"] = relative_l2_error(approx, reference, dx)
    return out


def _error_row(n_used: int, bf: StatField | None, lf: StatField,
               hf: StatField, config: ScenarioConfig, dx: float) -> dict:
    row: dict = {"n": n_used}
    if bf is not None:
        for stat, approx in (("mean", bf.mean), ("std", bf.std)):
            errs = _per_compartment_errors(approx, getattr(hf, stat),
                                           config, dx)
            for label, err in errs.items():
                row[f"bf_{stat}_err_{label}"] = err
    for stat, approx in (("mean", lf.mean), ("std", lf.std)):
        errs = _per_compartment_errors(approx, getattr(hf, stat), config, dx)
        for label, err in errs.items():
            row[f"lf_{stat}_err_{label}"] = err
    return row


def _write_fields_csv(path: Path, config: ScenarioConfig, x: np.ndarray,
                      stats: StatField) -> None:
    n = config.n_cells
    columns = [x]
    header = ["x"]
    for i, label in enumerate(config.compartments.members):
        seg = slice(i * n, (i + 1) * n)
        columns.extend([stats.mean[seg], stats.std[seg]])
        header.extend([f"mean_{label}", f"std_{label}"])
    np.savetxt(path, np.column_stack(columns), delimiter=",",
               header=",".join(header), comments="", fmt="%.17g")


def _write_error_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        raise ConfigError("no error rows to write")
    header = list(rows[0].keys())
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = []
            for key in header:
                value = row[key]
                cells.append(str(value) if isinstance(value, int)
                             else f"{value:.17g}")
            fh.write(",".join(cells) + "\n")


def _write_timing_csv(path: Path, timings: dict[str, float]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("stage,wall_seconds\n")
        for stage, seconds in timings.items():
            fh.write(f"{stage},{seconds:.6f}\n")


def run_pipeline(config: ScenarioConfig, out_dir,
                 quiet: bool = True) -> PipelineReport:
    """Execute the full bi-fidelity experiment and write the CSV artifacts.

    With ``n_select == 0`` the bi-fidelity stages are skipped and the report
    carries low-fidelity errors only.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = config.grid()
    dt = config.dt()
    timings: dict[str, float] = {}
    say = (lambda *_: None) if quiet else print

    def timed(stage: str, fn):
        start = time.perf_counter()
        result = fn()
        timings[stage] = time.perf_counter() - start
        say(f"[{config.name}] {stage}: {timings[stage]:.2f}s")
        return result

    candidates = collocation.uniform_candidates(config.n_candidates,
                                                config.domain, config.seed)
    np.savetxt(out / "candidates.csv", candidates, delimiter=",",
               header=",".join(f"z{k + 1}" for k in range(config.domain.dim)),
               comments="", fmt="%.17g")
    lf_cand = timed("candidate_lf_runs",
                    lambda: _lf_snapshots(config, candidates, dt))

    basis = None
    if config.n_select > 0:
        basis = timed("greedy_selection", lambda: bifidelity.greedy_select(
            SnapshotSet(candidates, lf_cand, grid.dx), config.n_select))
        hf_sel = timed("hf_selected_runs",
                       lambda: _hf_snapshots(config, basis.samples, dt))
        basis = basis.with_hf_snapshots(hf_sel)
        bifidelity.save_basis(basis, out)

    rule = collocation.cc_sparse_grid(config.cc_level, config.domain.dim,
                                      config.domain)
    collocation.rule_to_csv(rule, out / "rule_nodes.csv")
    lf_rule = timed("reference_lf_runs",
                    lambda: _lf_snapshots(config, rule.nodes, dt))
    hf_rule = timed("reference_hf_runs",
                    lambda: _hf_snapshots(config, rule.nodes, dt))
    lf_stats = collocation.estimate_stats(lf_rule, rule)
    hf_stats = collocation.estimate_stats(hf_rule, rule)

    bf_stats = None
    rows: list[dict] = []
    if basis is not None:
        def build_rows():
            out_rows = []
            for n_used in range(1, basis.n + 1):
                sub = basis.truncated(n_used)
                bf = bifidelity.bifi_stats(sub, rule, lf_rule)
                out_rows.append(_error_row(n_used, bf, lf_stats, hf_stats,
                                           config, grid.dx))
            return out_rows
        rows = timed("error_table", build_rows)
        bf_stats = bifidelity.bifi_stats(basis, rule, lf_rule)
        _write_fields_csv(out / "fields_bf.csv", config, grid.x, bf_stats)
    else:
        rows = [_error_row(0, None, lf_stats, hf_stats, config, grid.dx)]

    _write_fields_csv(out / "fields_hf.csv", config, grid.x, hf_stats)
    _write_fields_csv(out / "fields_lf.csv", config, grid.x, lf_stats)
    _write_error_csv(out / "error_decay.csv", rows)

    single = single_run_timing(config, dt)
    timings.update(single)
    # Amortized per-run cost of the batched stages: the honest cost ratio of
    # the two fidelities under the pipeline's real workloads.
    lf_per_run = timings["candidate_lf_runs"] / config.n_candidates
    hf_per_run = timings["reference_hf_runs"] / rule.n_nodes
    timings["candidate_lf_per_run"] = lf_per_run
    timings["reference_hf_per_run"] = hf_per_run
    timings["hf_over_lf_batched_ratio"] = hf_per_run / lf_per_run
    timings["total"] = sum(v for k, v in timings.items()
                           if not k.endswith("_ratio")
                           and not k.endswith("_per_run"))
    _write_timing_csv(out / "timing.csv", timings)

    r0 = baseline_reproduction_number(config)
    return PipelineReport(scenario=config.name, out_dir=out, dt=dt,
                          basis=basis, hf_stats=hf_stats, lf_stats=lf_stats,
                          bf_stats=bf_stats, error_rows=rows,
                          timings=timings, baseline_r0=r0)


def single_run_timing(config: ScenarioConfig, dt: float | None = None
                      ) -> dict[str, float]:
    """Wall-clock of one low- and one high-fidelity run at the baseline z."""
    if dt is None:
        dt = config.dt()
    z = config.baseline_z[None]
    start = time.perf_counter()
    _lf_snapshots(config, z, dt)
    lf_seconds = time.perf_counter() - start
    start = time.perf_counter()
    _hf_snapshots(config, z, dt)
    hf_seconds = time.perf_counter() - start
    return {"lf_single_run": lf_seconds, "hf_single_run": hf_seconds,
            "hf_over_lf_ratio": hf_seconds / lf_seconds}
