"""Command line entry point: ``jfnkmg run | compare | suite``.

Exit codes: 0 success, 1 solver non-convergence (or a failed comparison
with ``--strict``), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import bench
from .multigrid import COARSE_VARIANTS
from .newton import STRATEGIES
from .problems import PROBLEM_KINDS

EXIT_OK, EXIT_SOLVER, EXIT_USAGE = 0, 1, 2


def _level(text: str) -> int:
    t = text.upper().lstrip("L")
    try:
        level = int(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid level {text!r}; use L1..L5")
    if not 1 <= level <= 5:
        raise argparse.ArgumentTypeError("level must be L1..L5")
    return level


def _levels(text: str) -> list:
    return [_level(t) for t in text.split(",") if t]


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jfnkmg", description="Jacobian-free Newton-Krylov with multigrid preconditioning")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="solve one benchmark configuration")
    r.add_argument("--problem", required=True, choices=PROBLEM_KINDS)
    r.add_argument("--level", required=True, type=_level)
    r.add_argument("--strategy", default="cg-mg", choices=STRATEGIES)
    r.add_argument("--coarse", default="shifted", choices=COARSE_VARIANTS)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--nu", type=int, default=5, help="pre- and post-smoothing sweeps")
    r.add_argument("--gamma", type=float, default=5.0)
    r.add_argument("--pairs", type=int, default=20, help="L-BFGS secant pairs")
    r.add_argument("--out", help="JSON report path (default: stdout)")
    r.add_argument("--csv", help="append-free single-row CSV path")
    r.add_argument("--timing", action="store_true", help="record wall time (breaks byte-reproducibility)")

    c = sub.add_parser("compare", help="compare a JSON run report with the published tables")
    c.add_argument("--report", required=True)
    c.add_argument("--strict", action="store_true", help="exit 1 when any metric FAILs")

    s = sub.add_parser("suite", help="run every cell of one published table")
    s.add_argument("--table", required=True, type=int, choices=(1, 2, 3))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--levels", type=_levels, help="comma-separated subset, e.g. L1,L2")
    s.add_argument("--include-l5", action="store_true")
    s.add_argument("--csv", help="CSV output path (default: stdout)")
    s.add_argument("--out-dir", help="also write one JSON report per run here")
    s.add_argument("--timing", action="store_true")
    return p


def _cmd_run(args) -> int:
    cfg = bench.BenchmarkConfig(
        args.problem,
        args.level,
        args.strategy,
        args.coarse,
        seed=args.seed,
        nu_pre=args.nu,
        nu_post=args.nu,
        gamma=args.gamma,
        n_pairs=args.pairs,
    )
    report, record = bench.run(cfg, timing=args.timing)
    _write(args.out, bench.record_to_json(record))
    if args.csv:
        _write(args.csv, bench.records_to_csv([record]))
    return EXIT_OK if report.converged else EXIT_SOLVER


def _cmd_compare(args) -> int:
    with open(args.report) as fh:
        record = json.load(fh)
    verdicts = bench.compare(record)
    key = f"{record['problem']} L{record['level']} {record['strategy']}"
    if record.get("coarse_variant"):
        key += f" coarse={record['coarse_variant']}"
    print(key)
    for v in verdicts:
        print("  " + v.line())
    if args.strict and any(v.verdict == "FAIL" for v in verdicts):
        return EXIT_SOLVER
    return EXIT_OK


def _cmd_suite(args) -> int:
    import os

    cfgs = bench.suite_configs(args.table, seed=args.seed, levels=args.levels, include_l5=args.include_l5)
    records = []
    ok = True
    for cfg in cfgs:
        report, record = bench.run(cfg, timing=args.timing)
        ok &= report.converged
        records.append(record)
        logging.getLogger(__name__).info(
            "%s L%d %s/%s: %s IN=%d K=%d GE=%.1f",
            cfg.problem, cfg.level, cfg.strategy, cfg.coarse, report.status,
            record["newton_iters"], record["krylov_iters"], record["ge_effective"],
        )
        if args.out_dir:
            os.makedirs(args.out_dir, exist_ok=True)
            name = f"{cfg.problem}_L{cfg.level}_{cfg.strategy}_{cfg.coarse}.json"
            _write(os.path.join(args.out_dir, name), bench.record_to_json(record))
    _write(args.csv, bench.records_to_csv(records))
    return EXIT_OK if ok else EXIT_SOLVER


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "compare":
            return _cmd_compare(args)
        return _cmd_suite(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
