"""Command-line driver: generate, recover, bench-svd, accuracy-sweep.

Exit codes: 0 success, 2 usage error, 3 convergence failure, 4 rank anomaly.
Every output file gets a sidecar ``<output>.manifest.json`` recording the
parameters and environment; CSV files name their manifest in a leading
``#`` comment line, JSON outputs under a ``manifest`` key.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import statistics
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .assembly import build_T, index_set
from .diagnostics import max_t_error, rel_c_error
from .errors import (ConvergenceError, EmptyModelError, InputError, PronyError,
                     RankDeficiencyError, RankOverflowError, SingularBasisError)
from .pipeline import TIMING_COLUMNS, PipelineConfig, run_prony
from .reduced_svd import BACKENDS, RankCriterion, reduced_svd
from .signal_model import (ExponentialSum, NoiseSpec, load_grid, load_signal, paper_test_family,
                           sample_grid, save_grid, save_signal)

EXIT_OK, EXIT_USAGE, EXIT_CONVERGENCE, EXIT_RANK = 0, 2, 3, 4
WORKERS_ENV = "PRONY_WORKERS"

BENCH_COLUMNS = ("backend", "d", "m", "n", "N", "rank", "time_median_s", "reps",
                 "sigma_max_rel_dev", "error")
SWEEP_COLUMNS = ("epsilon", "tol", "residual_rel", "max_t_error", "rel_c_error", "rank",
                 "row_seed")
SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"{WORKERS_ENV}={raw!r} is not an integer") from None
    if value < 1:
        raise UsageError(f"{WORKERS_ENV} must be >= 1")
    return value


def manifest_path(output) -> Path:
    return Path(str(output) + ".manifest.json")


def write_manifest(command: str, params: dict, outputs, workers: int) -> Path:
    outputs = [str(p) for p in outputs]
    path = manifest_path(outputs[0])
    data = {
        "command": command,
        "params": params,
        "environment": {
            "workers": workers,
            "build_id": f"pencil_prony {__version__}; numpy {np.__version__}; scipy {scipy.__version__}",
            "python": platform.python_version(),
            "platform": platform.platform(),
        },
        "outputs": outputs,
    }
    path.write_text(json.dumps(data, indent=2) + "\n")
    return path


def write_csv(path, columns, rows, manifest: Path, schema: str):
    with Path(path).open("w", newline="") as fh:
        fh.write(f"# schema={schema}/v{SCHEMA_VERSION} manifest={manifest.name}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c, "")) for c in columns])


def read_csv(path) -> list:
    """Rows of a CSV written by this tool, as dicts of strings."""
    with Path(path).open(newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return value


def _criterion(mode: str, tol):
    if mode == "machine":
        if tol is not None:
            raise UsageError("--tol only applies with --tol-mode noise")
        return RankCriterion.machine()
    if tol is None:
        raise UsageError("--tol-mode noise requires --tol")
    return RankCriterion.noise(tol)


# commands

def cmd_generate(args) -> int:
    if args.family == "paper":
        if args.d is None or args.m is None:
            raise UsageError("--family paper requires --d and --m")
        if args.signal is not None:
            raise UsageError("--signal only applies with --family file")
        sig = paper_test_family(args.d, args.m)
    else:
        if args.signal is None:
            raise UsageError("--family file requires --signal")
        sig = load_signal(args.signal)
        if args.d is not None and args.d != sig.d or args.m is not None and args.m != sig.m:
            raise UsageError("--d/--m disagree with the signal file")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    prefix = args.prefix or f"signal_d{sig.d}_m{sig.m}_n{args.n}"
    sig_path = out_dir / f"{prefix}.signal.json"
    grid_path = out_dir / f"{prefix}.grid"
    grid = sample_grid(sig, args.n, NoiseSpec(args.noise, args.seed))
    params = {"d": sig.d, "m": sig.m, "n": args.n, "family": args.family, "noise": args.noise,
              "seed": args.seed}
    manifest = write_manifest("generate", params, [grid_path, sig_path], args.workers)
    save_signal(sig, sig_path, meta={"manifest": manifest.name})
    save_grid(grid, grid_path, meta={"manifest": manifest.name})
    print(grid_path)
    print(sig_path)
    return EXIT_OK


def cmd_recover(args) -> int:
    grid = load_grid(args.grid)
    n = args.n if args.n is not None else grid.n
    config = PipelineConfig(
        n=n, d=grid.d, m_expected=args.m, svd_backend=None if args.svd == "auto" else args.svd,
        rank_criterion=_criterion(args.tol_mode, args.tol), seed=args.seed,
        workers=args.workers, lane_mode=args.lanes, power_r0=args.r0)
    params = {k: v for k, v in vars(args).items() if k != "func"}
    out = Path(args.out)
    outputs = [out] + ([Path(args.timings_csv)] if args.timings_csv else [])
    manifest = write_manifest("recover", params, outputs, args.workers)
    try:
        report = run_prony(grid, config)
    except (ConvergenceError, RankOverflowError, SingularBasisError) as exc:
        _write_failure(out, manifest, "convergence", exc)
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (EmptyModelError, RankDeficiencyError) as exc:
        _write_failure(out, manifest, "rank", exc)
        print(f"rank failure: {exc}", file=sys.stderr)
        return EXIT_RANK
    data = report.to_dict()
    data["manifest"] = manifest.name
    if args.signal:
        truth = load_signal(args.signal)
        if truth.m == report.rank_detected and truth.d == grid.d:
            data["errors"] = {
                "max_t_error": max_t_error(report.t_recovered, truth.t),
                "rel_c_error": rel_c_error(report.t_recovered, report.c_recovered,
                                           truth.t, truth.c),
            }
        else:
            data["errors"] = None
    out.write_text(json.dumps(data, indent=2) + "\n")
    if args.timings_csv:
        write_csv(args.timings_csv, TIMING_COLUMNS,
                  [dict(zip(TIMING_COLUMNS, report.timings.row()))], manifest, "timings")
    print(f"rank {report.rank_detected}, residual {report.residual_rel:.3e} -> {out}")
    if report.rank_anomaly:
        print(f"warning: detected rank {report.rank_detected} != expected {args.m}",
              file=sys.stderr)
        return EXIT_RANK
    return EXIT_OK


def _write_failure(out: Path, manifest: Path, kind: str, exc: Exception):
    out.write_text(json.dumps({"failure": kind, "message": str(exc),
                               "manifest": manifest.name}, indent=2) + "\n")


def _parse_case(text: str):
    try:
        d, m, n = (int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"case {text!r} is not of the form d,m,n") from None
    if min(d, m, n) < 1:
        raise UsageError(f"case {text!r} has a non-positive entry")
    return d, m, n


def bench_case(d: int, m: int, n: int, backends, reps: int, warmup: int, seed: int):
    """Median SVD time and detected rank of T for each backend on one case."""
    sig = paper_test_family(d, m)
    grid = sample_grid(sig, n)
    T = build_T(grid, index_set(n, d))
    rows, sigmas = [], {}
    for backend in backends:
        row = {"backend": backend, "d": d, "m": m, "n": n, "N": T.shape[0], "reps": reps}
        try:
            times = []
            for rep in range(warmup + reps):
                t0 = time.perf_counter()
                svd = reduced_svd(T, backend, seed=seed, r0=2 * m, expected_rank=m)
                elapsed = time.perf_counter() - t0
                if rep >= warmup:
                    times.append(elapsed)
            row["rank"] = svd.rank
            row["time_median_s"] = float(statistics.median(times))
            sigmas[backend] = svd.sigma
        except PronyError as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    ref = sigmas.get("dense")
    for row in rows:
        s = sigmas.get(row["backend"])
        if ref is not None and s is not None and s.size == ref.size:
            row["sigma_max_rel_dev"] = float(np.max(np.abs(s - ref)) / ref[0])
    return rows


def cmd_bench_svd(args) -> int:
    cases = [_parse_case(c) for c in args.cases]
    backends = args.backends or list(BACKENDS)
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")
    manifest = write_manifest("bench-svd", {k: v for k, v in vars(args).items() if k != "func"},
                              [args.out], args.workers)
    rows = []
    for d, m, n in cases:
        rows.extend(bench_case(d, m, n, backends, args.reps, args.warmup, args.seed))
        for row in rows[-len(backends):]:
            print(", ".join(f"{k}={row.get(k, '')}" for k in ("backend", "N", "rank",
                                                              "time_median_s")))
    write_csv(args.out, BENCH_COLUMNS, rows, manifest, "bench-svd")
    return EXIT_OK


def row_seed(seed: int, row: int) -> int:
    """Independent noise seed per sweep row, derived from the base seed."""
    return int(np.random.SeedSequence([seed, row]).generate_state(1, dtype=np.uint64)[0])


def accuracy_row(sig: ExponentialSum, n: int, eps: float, tol, seed: int, backend: str | None,
                 workers: int = 1, lanes: str = "parallel") -> dict:
    grid = sample_grid(sig, n, NoiseSpec(eps, seed))
    crit = RankCriterion.machine() if tol is None else RankCriterion.noise(tol)
    config = PipelineConfig(n=n, d=sig.d, m_expected=sig.m, svd_backend=backend,
                            rank_criterion=crit, seed=0, workers=workers, lane_mode=lanes)
    report = run_prony(grid, config)
    row = {"epsilon": float(eps), "tol": "machine" if tol is None else float(tol),
           "residual_rel": report.residual_rel, "rank": report.rank_detected, "row_seed": seed}
    if report.rank_detected == sig.m:
        row["max_t_error"] = max_t_error(report.t_recovered, sig.t)
        row["rel_c_error"] = rel_c_error(report.t_recovered, report.c_recovered, sig.t, sig.c)
    else:
        row["max_t_error"] = row["rel_c_error"] = "nan"
    return row


def _float_list(text: str):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"{text!r} is not a comma-separated list of numbers") from None


def cmd_accuracy_sweep(args) -> int:
    eps_list = _float_list(args.eps_list)
    if any(e < 0 for e in eps_list):
        raise UsageError("noise levels must be >= 0")
    if args.tol_list is not None:
        tols = _float_list(args.tol_list)
        if len(tols) != len(eps_list):
            raise UsageError("--tol-list must have one entry per noise level")
    else:
        tols = list(eps_list)
    # a zero tolerance means the machine criterion
    tols = [None if t == 0 else t for t in tols]
    sig = paper_test_family(args.d, args.m)
    manifest = write_manifest("accuracy-sweep",
                              {k: v for k, v in vars(args).items() if k != "func"},
                              [args.out], args.workers)
    rows = []
    for i, (eps, tol) in enumerate(zip(eps_list, tols)):
        backend = None if args.svd == "auto" else args.svd
        row = accuracy_row(sig, args.n, eps, tol, row_seed(args.seed, i), backend,
                           args.workers, args.lanes)
        rows.append(row)
        print(", ".join(f"{k}={row[k]}" for k in SWEEP_COLUMNS[:6]))
    write_csv(args.out, SWEEP_COLUMNS, rows, manifest, "accuracy-sweep")
    anomaly = any(r["rank"] != args.m for r in rows)
    return EXIT_RANK if anomaly else EXIT_OK


# argument parsing

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pencil-prony",
                                description="Matrix-pencil recovery of sparse exponential sums.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--workers", type=int, default=None,
                        help=f"worker threads (default ${WORKERS_ENV} or 1)")
        sp.add_argument("--seed", type=int, default=0)

    g = sub.add_parser("generate", help="sample a signal on the grid and write it to disk")
    g.add_argument("--d", type=int)
    g.add_argument("--m", type=int)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--family", choices=("paper", "file"), default="paper")
    g.add_argument("--signal", help="signal JSON for --family file")
    g.add_argument("--noise", type=float, default=0.0, help="relative noise bound epsilon")
    g.add_argument("--out-dir", default=".")
    g.add_argument("--prefix")
    common(g)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("recover", help="recover nodes and coefficients from a grid file")
    r.add_argument("--grid", required=True)
    r.add_argument("--n", type=int, help="index-set size (default: the grid's n)")
    r.add_argument("--m", type=int, help="expected number of terms")
    r.add_argument("--svd", choices=("auto",) + BACKENDS, default="auto")
    r.add_argument("--tol-mode", choices=("machine", "noise"), default="machine")
    r.add_argument("--tol", type=float)
    r.add_argument("--lanes", choices=("sequential", "parallel"), default="parallel")
    r.add_argument("--r0", type=int, help="rank overestimate for the power backend")
    r.add_argument("--signal", help="ground-truth signal JSON; adds errors to the report")
    r.add_argument("--out", required=True, help="report JSON path")
    r.add_argument("--timings-csv", help="also write the stage timings as a CSV row")
    common(r)
    r.set_defaults(func=cmd_recover)

    b = sub.add_parser("bench-svd", help="time the SVD backends on test-family cases")
    b.add_argument("--cases", nargs="+", required=True, metavar="d,m,n")
    b.add_argument("--backends", nargs="+", choices=BACKENDS)
    b.add_argument("--reps", type=int, default=5)
    b.add_argument("--warmup", type=int, default=1)
    b.add_argument("--out", required=True)
    common(b)
    b.set_defaults(func=cmd_bench_svd)

    a = sub.add_parser("accuracy-sweep", help="recovery errors across noise levels")
    a.add_argument("--eps-list", required=True, help="comma-separated noise levels")
    a.add_argument("--tol-list", help="comma-separated rank tolerances (default: eps; 0 = machine)")
    a.add_argument("--d", type=int, required=True)
    a.add_argument("--m", type=int, required=True)
    a.add_argument("--n", type=int, required=True)
    a.add_argument("--svd", choices=("auto",) + BACKENDS, default="auto")
    a.add_argument("--lanes", choices=("sequential", "parallel"), default="parallel")
    a.add_argument("--out", required=True)
    common(a)
    a.set_defaults(func=cmd_accuracy_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.workers is None:
            args.workers = default_workers()
        if args.workers < 1:
            raise UsageError("--workers must be >= 1")
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except InputError as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
