"""Command line interface: ``shetorus <command> [--config PATH] [--seed U64] ...``."""

import argparse
import json
import logging
import math
import os
import sys

from . import __version__
from .config import SUITES, load
from .exceptions import ConfigError, InvalidParameterError
from .io import write_snapshots, write_summary_csv
from .localization import stopping_record
from .presets import default_config
from .solver import NoiseStream, simulate
from .verification import digest

VERIFY = ("kernel", "moments", "holder", "comparison", "positivity", "critical", "superlinear")


def _common(p):
    p.add_argument("--config", metavar="PATH", help="TOML experiment config (default: canonical preset)")
    p.add_argument("--seed", type=int, metavar="U64", help="override noise.master_seed")
    p.add_argument("--replicas", type=int, metavar="N", help="override noise.replicas")
    p.add_argument("--workers", type=int, metavar="N", help="worker processes for replica fan-out")
    p.add_argument("--out", metavar="DIR", help="output directory")


def build_parser():
    parser = argparse.ArgumentParser(prog="shetorus", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", help="simulate one path; write snapshots and summaries")
    _common(p)
    p.add_argument("--replica", type=int, default=0, help="replica index of the noise stream")
    for name in VERIFY:
        _common(sub.add_parser(f"verify-{name}", help=f"run the {name} suite"))
    p = sub.add_parser("run", help="run a suite")
    _common(p)
    p.add_argument("--suite", choices=SUITES)
    p = sub.add_parser("report", help="rebuild report.txt and plot CSVs from reports.json")
    p.add_argument("--out", metavar="DIR", required=True)
    return parser


def _config(args, suite):
    cfg = load(args.config) if args.config else default_config("positivity" if suite in (None, "all") else suite)
    return cfg.with_overrides(seed=args.seed, replicas=args.replicas, workers=args.workers, out=args.out,
                              suite=suite)


def _cmd_simulate(args):
    cfg = _config(args, None)
    grid = cfg.torus_grid()
    coef = cfg.coefficient()
    path = simulate(coef, cfg.initial_field(grid.n), grid, NoiseStream(cfg.seed, args.replica), cfg.stride)
    out = cfg.run.get("out", "out")
    os.makedirs(out, exist_ok=True)
    write_snapshots(os.path.join(out, "snapshots.bin"), path)
    write_summary_csv(os.path.join(out, "summary.csv"), path)
    eps = [cfg.param("ladder_base", math.e) ** -k for k in cfg.param("epsilon_exponents", [2, 4, 6])]
    stopping_record(path, eps).to_csv(os.path.join(out, "stopping.csv"))
    manifest = {"config_digest": digest(cfg.to_dict()), "code_version": __version__, "seed": cfg.seed,
                "replica": args.replica, "censored": path.blowup_step is not None}
    with open(os.path.join(out, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {out}: {len(path.snapshot_steps)} snapshots, {grid.steps} steps")
    return 0


def _cmd_suite(args, suite):
    from . import suites

    cfg = _config(args, suite)
    configs = None
    if suite == "all" and not args.config:
        configs = {name: _config(args, name) for name in suites.SUITE_ORDER}
    out = cfg.run.get("out", "out")
    status = suites.run(cfg, suite, out, configs=configs)
    with open(os.path.join(out, "report.txt"), encoding="utf-8") as fh:
        sys.stdout.write(fh.read())
    return status


def _cmd_report(args):
    from .suites import emit_plot_data, load_reports

    reports = load_reports(args.out)
    emit_plot_data(reports, args.out)
    rows = [f"{r['claim']:<32} {'PASS' if r['passed'] else 'FAIL'}" for r in reports]
    text = "\n".join(rows) + "\n"
    sys.stdout.write(text)
    return 0 if all(r["passed"] for r in reports) else 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "report":
            return _cmd_report(args)
        if args.command == "run":
            return _cmd_suite(args, args.suite or (load(args.config).suite if args.config else "all"))
        return _cmd_suite(args, args.command[len("verify-"):])
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (InvalidParameterError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


__all__ = ["main", "build_parser"]
