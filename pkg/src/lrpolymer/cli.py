"""Command line entry point.

Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time

from . import harness as hz
from . import report as rp

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

log = logging.getLogger("lrpolymer")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lrpolymer", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--workers", type=int, default=None, help="worker processes")
    common.add_argument("--out", default=None, help="output directory for reports")
    common.add_argument("--dump-fields", action="store_true", help="write binary field dumps")
    common.add_argument("--no-figures", action="store_true", help="skip the PNG figures")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    c = sub.add_parser("converge", parents=[common], help="run the convergence checks")
    c.add_argument("config")
    m = sub.add_parser("moments", parents=[common], help="second moments of the Wick chaos terms")
    m.add_argument("config")
    m.add_argument("--m", type=int, required=True, choices=(1, 2))
    o = sub.add_parser("oracle", parents=[common], help="continuum reference values only")
    o.add_argument("config")
    s = sub.add_parser("selftest", parents=[common], help="fast invariant checks")
    s.add_argument("--fault", default=None, help=argparse.SUPPRESS)
    return p


def _load(args) -> hz.ExperimentConfig:
    cfg = hz.load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise hz.ConfigError("--seed must be non-negative")
        cfg.seed = args.seed
    if args.workers is not None:
        if args.workers < 1:
            raise hz.ConfigError("--workers must be positive")
        cfg.workers = args.workers
    if args.out is not None:
        cfg.output_dir = args.out
    return cfg


def _emit(rep: dict, out_dir: str, figures: bool) -> None:
    paths = rp.emit_report(rep, out_dir)
    for p in paths.values():
        print(f"wrote {p}")
    if figures and rep["records"]:
        from .plotting import render_figures
        for p in render_figures(rep, out_dir):
            print(f"wrote {p}")


def _summary(rep: dict) -> None:
    if not rep["records"]:
        for k, v in rep.get("oracle", {}).items():
            if isinstance(v, dict):
                v = ", ".join(f"{a}={b:.6g}" if isinstance(b, float) else f"{a}={b}" for a, b in v.items())
            elif isinstance(v, float):
                v = f"{v:.10g}"
            elif isinstance(v, list):
                v = ", ".join(f"{x:.6g}" for x in v)
            print(f"{k:<22s} {v}")
    for r in rep["records"]:
        flag = "PASS" if r["pass"] else "FAIL"
        print(f"{flag}  N={r['N']:<6d} {r['check']:<20s} est={r['estimate']:.6g} oracle={r['oracle']:.6g} "
              f"z={r['z']:.3g}")
    for name, t in rep["trends"].items():
        print(f"{'PASS' if t['pass'] else 'FAIL'}  trend {name}")
    print("overall:", "PASS" if rep["passed"] else "FAIL")


def _selftest(args) -> int:
    from .selftest import run_selftest
    t0 = time.perf_counter()
    try:
        results = run_selftest(args.fault)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<36s} {r.seconds:6.2f}s  {r.detail}")
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results)} checks, {n_fail} failed, {time.perf_counter() - t0:.1f}s")
    if args.out:
        rows = [{"name": r.name, "pass": r.passed, "detail": r.detail, "seconds": r.seconds} for r in results]
        rp.atomic_write(os.path.join(args.out, "selftest.json"), rp.dumps({"checks": rows, "passed": n_fail == 0}))
    return EXIT_PASS if n_fail == 0 else EXIT_FAIL


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "selftest":
        return _selftest(args)
    try:
        cfg = _load(args)
    except hz.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "converge":
            rep = hz.run_convergence(cfg, dump_fields=args.dump_fields, out_dir=cfg.output_dir)
        elif args.command == "moments":
            rep = hz.run_moments(cfg, args.m)
        else:
            rep = hz.run_oracle(cfg)
        if args.dump_fields and args.command != "converge":
            hz._dump_fields(cfg, cfg.output_dir)
        _summary(rep)
        _emit(rep, cfg.output_dir, not args.no_figures)
    except hz.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_PASS if rep["passed"] else EXIT_FAIL
