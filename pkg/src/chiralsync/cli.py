"""Command-line entry point.

    chiralsync simulate <scenario-file> [--out DIR] [--seed N] [--quiet]
    chiralsync reproduce <figure-id> [--out DIR] [--seed N] [--quiet]
    chiralsync predict <network-file> [--out DIR] [--quiet]
    chiralsync validate <network-file> [--quiet]

Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import exports
from .dynamics import assemble_drift, predict_clusters, spectral_analysis
from .moments import NoStationaryStateError, UnphysicalStateError
from .network import InvalidNetworkError, load_network, validate_network
from .runner import FIGURE_IDS, ScenarioError, load_scenario, reproduce_figure, run_scenario

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2

log = logging.getLogger("chiralsync")


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=None, help="output directory")
    common.add_argument("--seed", type=int, default=None, help="seed for random networks")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    parser = argparse.ArgumentParser(prog="chiralsync", description="Chiral oscillator network synchronisation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", parents=[common], help="run a scenario file")
    p.add_argument("scenario", type=Path)
    p = sub.add_parser("reproduce", parents=[common], help="emit the data behind a figure")
    p.add_argument("figure_id", type=int, choices=FIGURE_IDS)
    p = sub.add_parser("predict", parents=[common], help="spectral cluster prediction for a network file")
    p.add_argument("network", type=Path)
    p = sub.add_parser("validate", parents=[common], help="check a network file")
    p.add_argument("network", type=Path)
    return parser


def _load(path: Path):
    try:
        return load_network(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidNetworkError(f"cannot read network {path}: {exc}") from None


def _cmd_simulate(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {args.scenario}: {exc}") from None
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    out = args.out or (Path(scenario.output_dir) if scenario.output_dir else Path("out") / scenario.name)
    report = run_scenario(scenario, out)
    log.info("wrote %d files to %s", len(report.files), out)
    return EXIT_OK


def _cmd_reproduce(args) -> int:
    out = args.out or Path("out") / f"fig{args.figure_id}"
    files = reproduce_figure(args.figure_id, out, seed=args.seed)
    log.info("wrote %d files to %s", len(files), out)
    return EXIT_OK


def _cmd_predict(args) -> int:
    spec = _load(args.network)
    report = validate_network(spec)
    if not report.ok:
        raise InvalidNetworkError(str(report))
    decomp = spectral_analysis(assemble_drift(spec))
    doc = {"spectral": decomp.to_dict(), "prediction": predict_clusters(decomp).to_dict()}
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        exports.write_json(args.out / "prediction.json", doc)
        log.info("wrote %s", args.out / "prediction.json")
    if not args.quiet:
        print(json.dumps(exports._jsonable(doc["prediction"]), indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_validate(args) -> int:
    spec = _load(args.network)
    report = validate_network(spec)
    if not args.quiet:
        print(report)
    return EXIT_OK if report.ok else EXIT_INVALID


COMMANDS = {
    "simulate": _cmd_simulate,
    "reproduce": _cmd_reproduce,
    "predict": _cmd_predict,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UnphysicalStateError, NoStationaryStateError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    except (InvalidNetworkError, ScenarioError) as exc:
        log.error("invalid input: %s", exc)
        return EXIT_INVALID
    except (RuntimeError, FloatingPointError, np.linalg.LinAlgError, ValueError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
