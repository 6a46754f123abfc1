"""Command-line experiment runner.

Exit codes: 0 success, 2 config error, 3 operational error, 4 statistical
gate failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np
from filelock import FileLock, Timeout

from . import config as cfg
from .edge_step import (
    FAMILIES,
    err_term,
    expected_vertices,
    g_bound,
    h_integral,
    integral_asymptotic,
)
from .stats import compare_to_theory, default_threads, max_degree_trace, run_ensemble
from .theory import evolve_expectations, read_expectation_csv

EXIT_OK, EXIT_CONFIG, EXIT_OPERATIONAL, EXIT_GATE = 0, 2, 3, 4
DEFAULT_KARAMATA_GRID = tuple(10**k for k in range(2, 9))
LOCK_NAME = ".edgestep.lock"

FLAG_KEYS = {
    "seed": "seed",
    "replicas": "replicas",
    "checkpoints": "checkpoints",
    "gamma": "gamma",
    "family": "family",
    "delta": "delta",
    "out": "out",
    "threads": "threads",
    "c": "c",
    "p": "p",
    "sv_delta": "sv_delta",
    "d_max": "d_max",
    "d_report": "d_report",
    "A": "A",
    "alpha": "alpha",
}


class OperationalError(RuntimeError):
    pass


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return repr(float(v)) if isinstance(v, float) else str(v)


def _parent_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", metavar="PATH", help="plain-text key=value config file")
    p.add_argument("--seed", metavar="U64")
    p.add_argument("--replicas", metavar="N")
    p.add_argument("--checkpoints", metavar="T1,T2,...")
    p.add_argument("--gamma", metavar="X")
    p.add_argument("--family", metavar="NAME", help=f"one of {', '.join(sorted(FAMILIES))}")
    p.add_argument("--c", metavar="X")
    p.add_argument("--p", metavar="X")
    p.add_argument("--sv-delta", dest="sv_delta", metavar="X")
    p.add_argument("--delta", metavar="X", help="affine attachment offset (>= 0)")
    p.add_argument("--d-max", dest="d_max", metavar="N")
    p.add_argument("--d-report", dest="d_report", metavar="N")
    p.add_argument("--A", dest="A", metavar="X")
    p.add_argument("--alpha", metavar="X")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--threads", metavar="N")
    return p


def build_parser() -> argparse.ArgumentParser:
    parent = _parent_parser()
    parser = argparse.ArgumentParser(prog="edgestep", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[parent], help="run replicas, write degree histograms")
    sub.add_parser("expect", parents=[parent], help="exact E N_t(d) table")
    compare = sub.add_parser("compare", parents=[parent], help="replicas vs exact expectations")
    compare.add_argument("--oracle", metavar="PATH", help="expectation CSV to use instead of computing it")
    sub.add_parser("karamata", parents=[parent], help="H, G bound, F(t) and err_t on a time grid")
    sub.add_parser("maxdeg", parents=[parent], help="max degree and first-vertex degree traces")
    sweep = sub.add_parser("sweep", parents=[parent], help="compare over a family x gamma grid")
    sweep.add_argument("--families", metavar="F1,F2,...", required=True)
    sweep.add_argument("--gammas", metavar="G1,G2,...", required=True)
    return parser


def resolve_config(args, sweep: bool = False) -> tuple[cfg.ExperimentConfig, dict]:
    """Config file values overlaid with command-line flags.

    For a sweep the shared config carries a placeholder spec; each cell
    builds its own from the returned raw values.
    """
    values = {}
    if args.config:
        try:
            values = cfg.tokenize(Path(args.config).read_text())
        except OSError as exc:
            raise cfg.ConfigError(f"cannot read config {args.config}: {exc}") from None
    for attr, key in FLAG_KEYS.items():
        v = getattr(args, attr, None)
        if v is not None:
            values[key] = v
    if "threads" not in values:
        values["threads"] = str(default_threads())
    if sweep:
        shared = {k: v for k, v in values.items() if k not in cfg.SPEC_KEYS}
        return cfg.from_mapping({**shared, "family": "constant"}), values
    return cfg.from_mapping(values), values


class _OutDir:
    """Creates the output directory, holds its lock file, persists the resolved config."""

    def __init__(self, config: cfg.ExperimentConfig):
        self.path = Path(config.out)
        self.config = config

    def __enter__(self):
        try:
            self.path.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OperationalError(f"cannot create {self.path}: {exc}") from None
        self.lock = FileLock(str(self.path / LOCK_NAME))
        try:
            self.lock.acquire(timeout=0)
        except Timeout:
            raise OperationalError(f"{self.path} is in use by another run") from None
        (self.path / "config.txt").write_text(cfg.serialize(self.config))
        return self.path

    def __exit__(self, *exc):
        self.lock.release()
        try:
            os.remove(self.path / LOCK_NAME)
        except OSError:
            pass
        return False


def _ensemble(config, track_births=False):
    return run_ensemble(
        config.spec, config.delta, config.checkpoints, config.replicas, config.base_seed,
        threads=config.threads, track_births=track_births,
    )


def cmd_simulate(config: cfg.ExperimentConfig) -> int:
    with _OutDir(config) as out:
        ens = _ensemble(config)
        for t in ens.checkpoints:
            pooled: dict = {}
            for h in ens.at(t):
                for d, c in h.items():
                    pooled[d] = pooled.get(d, 0) + c
            with open(out / f"histogram_t{t}.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["d", "count"])
                w.writerows(sorted(pooled.items()))
        with open(out / "summary.jsonl", "w") as fh:
            for r, hists in enumerate(ens.histograms):
                for t in ens.checkpoints:
                    h = hists[t]
                    rec = {
                        "replica": r,
                        "seed": ens.seeds[r],
                        "t": t,
                        "vertex_count": h.vertex_count,
                        "max_degree": h.max_degree,
                        "first_vertex_degree": h.first_vertex_degree,
                    }
                    fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return EXIT_OK


def _expectation_table(config):
    return evolve_expectations(config.spec, config.checkpoints, config.resolved_d_max())


def check_identities(table, tol=1e-9) -> list[str]:
    """Mass and degree identities for untruncated checkpoints; retained-mass bound otherwise."""
    problems = []
    for t in table.checkpoints:
        row, F = table.rows[t], table.F[t]
        mass = float(row.sum())
        if table.d_max >= 2 * t:
            degree_sum = float(np.arange(row.size) @ row)
            if abs(mass - F) > tol * F:
                problems.append(f"t={t}: sum E N_t(d) = {mass!r} != F(t) = {F!r}")
            if abs(degree_sum - 2 * t) > tol * 2 * t:
                problems.append(f"t={t}: sum d E N_t(d) = {degree_sum!r} != 2t")
        elif mass > F * (1 + tol):
            problems.append(f"t={t}: retained mass {mass!r} exceeds F(t) = {F!r}")
    return problems


def cmd_expect(config: cfg.ExperimentConfig) -> int:
    with _OutDir(config) as out:
        table = _expectation_table(config)
        problems = check_identities(table)
        for t in table.checkpoints:
            print(f"t={t}: F(t)={table.F[t]!r} truncated_mass={table.truncated_mass[t]!r}")
        if problems:
            for msg in problems:
                print(f"identity check FAILED: {msg}", file=sys.stderr)
            return EXIT_OPERATIONAL
        print("mass identity check: passed")
        if table.truncation_warning:
            print(f"warning: d_max={table.d_max} truncates more than 1e-6 F(t)", file=sys.stderr)
        table.to_csv(out / "expectation.csv")
    return EXIT_OK


def _compare(config, out, oracle_path=None):
    if oracle_path:
        try:
            table = read_expectation_csv(oracle_path, config.spec, config.resolved_d_max())
        except (OSError, ValueError) as exc:
            raise OperationalError(f"bad oracle file: {exc}") from None
        problems = [f"t={t}: F_t mismatch" for t in table.checkpoints
                    if abs(table.F[t] - expected_vertices(config.spec, t)) > 1e-9 * table.F[t]]
        if problems:
            raise OperationalError("oracle file inconsistent with spec: " + "; ".join(problems))
    else:
        table = _expectation_table(config)
    ens = _ensemble(config)
    try:
        report = compare_to_theory(ens, table, config.A, config.alpha, config.d_report)
    except KeyError as exc:
        raise OperationalError(f"checkpoint mismatch: {exc}") from None
    report.to_csv(out / "comparison.csv")
    report.to_jsonl(out / "comparison.jsonl")
    for t, n in sorted(report.gate.items()):
        print(f"t={t}: {n} of the first 10 degree cells beyond 4 SE")
    return report


def cmd_compare(config: cfg.ExperimentConfig, oracle_path: str | None = None) -> int:
    with _OutDir(config) as out:
        report = _compare(config, out, oracle_path)
    if report.gate_pass:
        print("oracle agreement gate: passed")
        return EXIT_OK
    print("oracle agreement gate: FAILED", file=sys.stderr)
    return EXIT_GATE


def cmd_karamata(config: cfg.ExperimentConfig, grid=DEFAULT_KARAMATA_GRID) -> int:
    spec = config.spec
    sub = spec.gamma < 1.0
    if not sub:
        print(f"warning: gamma={spec.gamma} >= 1; H, G_bound, F_asym and err_term left blank", file=sys.stderr)
    with _OutDir(config) as out, open(out / "karamata.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "H", "G_bound", "F_exact", "F_asym", "err_term"])
        for t in grid:
            F = expected_vertices(spec, t)
            if sub:
                row = [t, h_integral(spec, t), g_bound(spec, t), F,
                       integral_asymptotic(spec, t), err_term(spec, t, config.alpha)]
            else:
                row = [t, None, None, F, None, None]
            w.writerow([_fmt(v) for v in row])
    return EXIT_OK


def cmd_maxdeg(config: cfg.ExperimentConfig) -> int:
    with _OutDir(config) as out:
        trace = max_degree_trace(_ensemble(config))
        with open(out / "maxdeg.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "max_degree", "first_vertex_degree", "first_over_t", "first_over_tf", "replica"])
            for r in range(trace.max_degree.shape[0]):
                for j, t in enumerate(trace.checkpoints):
                    w.writerow([t, int(trace.max_degree[r, j]), int(trace.first_vertex_degree[r, j]),
                                _fmt(float(trace.first_over_t[r, j])),
                                _fmt(float(trace.first_over_tf[r, j])), r])
        with open(out / "maxdeg_summary.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "mean_max_degree", "mean_first_vertex_degree", "mean_first_over_t", "mean_first_over_tf"])
            for j, t in enumerate(trace.checkpoints):
                w.writerow([t] + [_fmt(float(getattr(trace, name)[:, j].mean())) for name in
                                  ("max_degree", "first_vertex_degree", "first_over_t", "first_over_tf")])
    return EXIT_OK


def cmd_sweep(config: cfg.ExperimentConfig, values: dict, families, gammas) -> int:
    root = Path(config.out)
    results = []
    with _OutDir(config):
        for family in families:
            for gamma in gammas:
                params = FAMILIES[family]().params()
                sub_values = {k: v for k, v in values.items() if k not in cfg.SPEC_KEYS or k in params}
                sub_values["family"] = family
                if "gamma" in params:
                    sub_values["gamma"] = gamma
                elif float(gamma) != 0.0:
                    continue
                sub_values["out"] = str(root / f"{family}_gamma{gamma}")
                sub = cfg.from_mapping(sub_values)
                with _OutDir(sub) as out:
                    report = _compare(sub, out)
                for t, n in sorted(report.gate.items()):
                    results.append((family, gamma, t, n, n <= 1))
        with open(root / "sweep.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["family", "gamma", "t", "cells_beyond_4se", "gate_pass"])
            for fam, g, t, n, ok in results:
                w.writerow([fam, g, t, n, "true" if ok else "false"])
    return EXIT_OK if all(r[4] for r in results) else EXIT_GATE


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "sweep":
            families = [f for f in args.families.split(",") if f]
            bad = [f for f in families if f not in FAMILIES]
            if not families or bad:
                raise cfg.ConfigError(f"families: unknown or empty {bad}")
            gammas = [g for g in args.gammas.split(",") if g]
            for g in gammas:
                float(g)
        config, values = resolve_config(args, sweep=args.command == "sweep")
    except (cfg.ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "simulate":
            return cmd_simulate(config)
        if args.command == "expect":
            return cmd_expect(config)
        if args.command == "compare":
            return cmd_compare(config, args.oracle)
        if args.command == "karamata":
            grid = config.checkpoints if "checkpoints" in values else DEFAULT_KARAMATA_GRID
            return cmd_karamata(config, grid)
        if args.command == "maxdeg":
            return cmd_maxdeg(config)
        if args.command == "sweep":
            return cmd_sweep(config, values, families, gammas)
    except cfg.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OperationalError, OSError, MemoryError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OPERATIONAL
    parser.error(f"unknown command {args.command}")
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
