"""Command line driver: ``flrw-dust run | verify | plotdata``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from importlib import metadata
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy

from .checkpoint import read_checkpoint, write_checkpoint
from .config import config_hash, config_to_dict, load_config
from .diagnostics import DiagnosticsWriter, RatioDriftTracker, read_csv, select_columns, truncate_csv
from .error import CheckpointError, ConfigError, MissingColumn
from .evolution import run
from .verify import SUITES, run_suites

logger = logging.getLogger(__name__)

__all__ = ["main", "build_parser", "cmd_run", "cmd_verify", "cmd_plotdata"]

LOG_ENV = "FLRW_DUST_LOG"

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def _version() -> str:
    try:
        return metadata.version("flrw-dust")
    except metadata.PackageNotFoundError:
        return "unknown"


# ─── run ─────────────────────────────────────────────────────────────────────


def cmd_run(config_path: str, resume: str | None = None) -> int:
    try:
        cfg = load_config(config_path)
        cfg.validate()
    except ConfigError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        logger.error("cannot read config: %s", exc)
        return EXIT_IO

    digest = config_hash(cfg)
    out_dir = cfg.output.resolve()
    started = time.perf_counter()
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        checkpoint = None
        if resume is not None:
            checkpoint = read_checkpoint(resume, bytes.fromhex(digest))
        csv_path = out_dir / "diagnostics.csv"
        drift = None
        if checkpoint is not None and csv_path.exists():
            truncate_csv(csv_path, checkpoint.step)
            drift = RatioDriftTracker.from_rows(read_csv(csv_path)[1])

        def on_checkpoint(steps: int, state) -> None:
            path = write_checkpoint(out_dir / f"checkpoint_{steps:08d}.bin", state, steps, bytes.fromhex(digest))
            logger.info("checkpoint step %d written to %s", steps, path)

        with DiagnosticsWriter(csv_path, append=checkpoint is not None) as writer:
            result = run(
                cfg, resume=checkpoint, on_sample=writer.write, on_checkpoint=on_checkpoint, drift=drift
            )
        write_checkpoint(out_dir / "final_state.bin", result.final, result.steps, bytes.fromhex(digest))

        status = result.report.scenario.exit_code
        manifest = {
            "config": config_to_dict(cfg),
            "config_hash": digest,
            "versions": {"flrw-dust": _version(), "numpy": np.__version__, "scipy": scipy.__version__},
            "wall_time": time.perf_counter() - started,
            "steps": result.steps,
            "final_time": result.final.t,
            "exit_status": status,
            "breakdown": result.report.to_dict(),
            "ratio_drift": result.ratio_drift,
        }
        with open(out_dir / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except CheckpointError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    except ConfigError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        return EXIT_IO
    return status


# ─── verify ──────────────────────────────────────────────────────────────────


def cmd_verify(suite: str, quick: bool = False, report_path: str | None = None) -> int:
    names = list(SUITES) if suite == "all" else [suite]
    report = run_suites(names, quick)
    body = json.dumps(report.to_dict(), indent=2)
    try:
        if report_path is None:
            print(body)
        else:
            Path(report_path).write_text(body + "\n")
    except OSError as exc:
        logger.error("cannot write report: %s", exc)
        return EXIT_IO
    return EXIT_OK if report.passed else EXIT_FAILED


# ─── plotdata ────────────────────────────────────────────────────────────────


def cmd_plotdata(run_dir: str, quantities: Sequence[str], output: str | None = None) -> int:
    """Long-format ``t,value,series`` rows, plus a ``log:<name>`` series for every positive column."""
    try:
        columns, rows = read_csv(Path(run_dir) / "diagnostics.csv")
        selected = select_columns(columns, quantities)
    except MissingColumn as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        logger.error("cannot read diagnostics: %s", exc)
        return EXIT_IO

    target = Path(output) if output is not None else Path(run_dir) / "plotdata.csv"
    try:
        with open(target, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "value", "series"])
            for name in selected:
                series = [(row["t"], row[name]) for row in rows if row[name] != ""]
                for t, value in series:
                    writer.writerow([t, value, name])
                try:
                    values = [float(v) for _, v in series]
                except ValueError:
                    continue  # the breakdown column holds scenario names
                if values and all(v > 0.0 and math.isfinite(v) for v in values):
                    for (t, _), v in zip(series, values):
                        writer.writerow([t, repr(math.log(v)), f"log:{name}"])
    except OSError as exc:
        logger.error("cannot write plot data: %s", exc)
        return EXIT_IO
    logger.info("wrote %d series to %s", len(selected), target)
    return EXIT_OK


# ─── entry point ─────────────────────────────────────────────────────────────


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flrw-dust", description="Dust-Einstein evolution on T^3 with Lambda > 0")
    parser.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    parser.add_argument("--log-level", default=os.environ.get(LOG_ENV, "INFO"), help="logging level (env %s)" % LOG_ENV)
    # accepted after the subcommand too; the top-level value is the default
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[common], help="evolve a configuration")
    p_run.add_argument("config")
    p_run.add_argument("--resume", metavar="CHECKPOINT")

    p_verify = sub.add_parser("verify", parents=[common], help="run acceptance suites")
    p_verify.add_argument("suite", choices=[*SUITES, "all"])
    p_verify.add_argument("--quick", action="store_true")
    p_verify.add_argument("--report", metavar="PATH")

    p_plot = sub.add_parser("plotdata", parents=[common], help="extract plot series from a run directory")
    p_plot.add_argument("run_dir")
    p_plot.add_argument("--quantities", nargs="+", required=True)
    p_plot.add_argument("--output", metavar="PATH")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    if args.command == "run":
        return cmd_run(args.config, args.resume)
    if args.command == "verify":
        return cmd_verify(args.suite, args.quick, args.report)
    return cmd_plotdata(args.run_dir, args.quantities, args.output)


if __name__ == "__main__":
    sys.exit(main())
