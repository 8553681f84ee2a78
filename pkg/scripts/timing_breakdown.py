#!/usr/bin/env python3
"""Per-stage timing table for the pipeline on one paper-family case.

Runs each (backend, lane mode) pair --reps times after one warmup run and
prints the median-total run as a CSV row in stage-column order, plus each
stage's share of the total.

Example::

    python scripts/timing_breakdown.py --d 3 --m 5 --n 14 --backends dense power
"""

import argparse
import csv
import sys

from pencil_prony.pipeline import TIMING_COLUMNS, PipelineConfig, run_prony
from pencil_prony.signal_model import paper_test_family, sample_grid


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--m", type=int, default=5)
    p.add_argument("--n", type=int, default=14)
    p.add_argument("--backends", nargs="+", default=["dense", "lanczos", "power"])
    p.add_argument("--modes", nargs="+", default=["sequential", "parallel"])
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args(argv)

    grid = sample_grid(paper_test_family(args.d, args.m), args.n)
    out = csv.writer(sys.stdout)
    out.writerow(("backend", "lane_mode", "rank") + TIMING_COLUMNS + ("svd_share",))
    for backend in args.backends:
        for mode in args.modes:
            cfg = PipelineConfig(n=args.n, d=args.d, m_expected=args.m, svd_backend=backend,
                                 lane_mode=mode, workers=args.workers)
            run_prony(grid, cfg)
            reports = sorted((run_prony(grid, cfg) for _ in range(args.reps)),
                             key=lambda r: r.timings.t_total)
            rep = reports[len(reports) // 2]
            row = rep.timings.row()
            out.writerow((backend, mode, rep.rank_detected) + tuple(f"{x:.4f}" for x in row)
                         + (f"{rep.timings.t_SVD / rep.timings.t_total:.3f}",))
            sys.stdout.flush()


if __name__ == "__main__":
    main()
