"""Command-line interface for the experiment pipeline.

Subcommands:
  run <scenario>     full pipeline, writes all CSV artifacts
  select <scenario>  candidate runs + greedy selection + high-fidelity runs
                     at the selected points (persists the basis)
  stats <scenario>   bi-fidelity and low-fidelity statistics from a persisted
                     basis (writes fields_bf.csv / fields_lf.csv)
  errors <scenario>  reference statistics and the error-decay table

``<scenario>`` is one of test1a, test1b, test2a, test2b, or ``custom``
together with --config pointing at a flat key = value file naming a base
scenario and numeric overrides.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import bifidelity, collocation
from .errors import EpiuqError
from .pipeline import (PipelineReport, _error_row, _hf_snapshots,
                       _lf_snapshots, _write_error_csv, _write_fields_csv,
                       run_pipeline)
from .scenarios import (SCENARIO_NAMES, apply_overrides, build_scenario,
                        scenario_from_config)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("scenario", choices=SCENARIO_NAMES + ("custom",))
    parser.add_argument("--config", type=Path, default=None,
                        help="flat key = value scenario file")
    parser.add_argument("--out", type=Path, required=True,
                        help="output directory for CSV artifacts")
    parser.add_argument("--n", type=int, default=None,
                        help="number of selected points")
    parser.add_argument("--candidates", type=int, default=None,
                        help="candidate set size")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--nx", type=int, default=None, help="spatial cells")
    parser.add_argument("--nv", type=int, default=None,
                        help="velocity nodes (high fidelity)")
    parser.add_argument("--quiet", action="store_true")


def _resolve_scenario(args):
    if args.scenario == "custom":
        if args.config is None:
            raise EpiuqError("scenario 'custom' requires --config")
        config = scenario_from_config(args.config)
    elif args.config is not None:
        config = scenario_from_config(args.config)
        if config.name != args.scenario:
            raise EpiuqError(
                f"config file builds {config.name!r}, not {args.scenario!r}")
    else:
        config = build_scenario(args.scenario)
    return apply_overrides(config, n=args.n, candidates=args.candidates,
                           seed=args.seed, nx=args.nx, nv=args.nv)


def _cmd_run(args) -> int:
    config = _resolve_scenario(args)
    report = run_pipeline(config, args.out, quiet=args.quiet)
    _print_report(report, quiet=args.quiet)
    return 0


def _cmd_select(args) -> int:
    config = _resolve_scenario(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dt = config.dt()
    candidates = collocation.uniform_candidates(config.n_candidates,
                                                config.domain, config.seed)
    np.savetxt(out / "candidates.csv", candidates, delimiter=",",
               header=",".join(f"z{k + 1}" for k in range(config.domain.dim)),
               comments="", fmt="%.17g")
    lf_cand = _lf_snapshots(config, candidates, dt)
    basis = bifidelity.greedy_select(
        bifidelity.SnapshotSet(candidates, lf_cand, config.grid().dx),
        config.n_select)
    basis = basis.with_hf_snapshots(_hf_snapshots(config, basis.samples, dt))
    bifidelity.save_basis(basis, out)
    if not args.quiet:
        print(f"selected {basis.n} points -> {out / 'selected_points.csv'}")
    return 0


def _rule_and_lf(config, out):
    rule = collocation.cc_sparse_grid(config.cc_level, config.domain.dim,
                                      config.domain)
    collocation.rule_to_csv(rule, out / "rule_nodes.csv")
    cache = out / "lf_rule_evals.csv"
    if cache.exists():
        lf_rule = np.loadtxt(cache, delimiter=",", ndmin=2)
    else:
        lf_rule = _lf_snapshots(config, rule.nodes, config.dt())
        np.savetxt(cache, lf_rule, delimiter=",", fmt="%.17g")
    return rule, lf_rule


def _cmd_stats(args) -> int:
    config = _resolve_scenario(args)
    out = Path(args.out)
    basis = bifidelity.load_basis(out)
    rule, lf_rule = _rule_and_lf(config, out)
    grid = config.grid()
    lf_stats = collocation.estimate_stats(lf_rule, rule)
    bf_stats = bifidelity.bifi_stats(basis, rule, lf_rule)
    _write_fields_csv(out / "fields_lf.csv", config, grid.x, lf_stats)
    _write_fields_csv(out / "fields_bf.csv", config, grid.x, bf_stats)
    if not args.quiet:
        print(f"wrote {out / 'fields_bf.csv'}")
    return 0


def _cmd_errors(args) -> int:
    config = _resolve_scenario(args)
    out = Path(args.out)
    basis = bifidelity.load_basis(out)
    rule, lf_rule = _rule_and_lf(config, out)
    grid = config.grid()
    hf_rule = _hf_snapshots(config, rule.nodes, config.dt())
    hf_stats = collocation.estimate_stats(hf_rule, rule)
    lf_stats = collocation.estimate_stats(lf_rule, rule)
    rows = []
    for n_used in range(1, basis.n + 1):
        bf = bifidelity.bifi_stats(basis.truncated(n_used), rule, lf_rule)
        rows.append(_error_row(n_used, bf, lf_stats, hf_stats, config,
                               grid.dx))
    _write_fields_csv(out / "fields_hf.csv", config, grid.x, hf_stats)
    _write_error_csv(out / "error_decay.csv", rows)
    if not args.quiet:
        print(f"wrote {out / 'error_decay.csv'}")
    return 0


def _print_report(report: PipelineReport, quiet: bool) -> None:
    if quiet:
        return
    last = report.error_rows[-1]
    print(f"scenario {report.scenario}: dt={report.dt:.6g}, "
          f"baseline R0={report.baseline_r0:.4g}")
    for key in sorted(k for k in last if k.endswith("_all")):
        print(f"  {key} = {last[key]:.3e}")
    ratio = report.timings.get("hf_over_lf_ratio")
    if ratio is not None:
        print(f"  single-run wall clock: high/low fidelity = {ratio:.2f}x")
    print(f"  artifacts in {report.out_dir}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="epiuq",
        description="Bi-fidelity uncertainty quantification for multiscale "
                    "epidemic transport models.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("run", _cmd_run), ("select", _cmd_select),
                     ("stats", _cmd_stats), ("errors", _cmd_errors)):
        p = sub.add_parser(name)
        _add_common(p)
        p.set_defaults(fn=fn)
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except EpiuqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
