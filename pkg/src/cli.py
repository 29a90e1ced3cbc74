#!/usr/bin/env python3
"""
Command Line Interface for the radial tree spectral toolkit

Validates geometry configurations and runs the spectral analyses, writing
JSON/CSV reports and a one-line summary per command.
"""

import argparse
import asyncio
import json
import logging
import sys
from typing import Any, Dict, List, Optional

import numpy as np

from .config import (
    DEFAULT_WINDOW_ATOMS,
    LOG_FILE,
    LOG_FORMAT,
    LOG_LEVEL,
    OUTPUT_FORMATS,
    SCHEMA,
)
from .config_parser import ConfigParser, RunConfig
from .errors import InternalInvariantError, ParameterError, TreeSpecError, UsageError
from .floquet import floquet_bands
from .geometry import build_measure, decompose_tree, symbol_sequence
from .measure import loc_bound_estimate, norm_loc, periodic_line
from .periodicity import detect_eventual_periodicity, encode_symbols
from .pieces import alphabet_from_geometry, certify_sfdp, check_fdp, check_sfdp
from .reports import (
    bands_frame,
    bands_payload,
    decomposition_frame,
    decomposition_payload,
    reflectionless_frame,
    reflectionless_payload,
    spectral_frame,
    spectral_payload,
    tree_frame,
    tree_payload,
    write_report,
)
from .spectral import (
    Thresholds,
    boundary_m_plus,
    tail_m_plus,
    tree_spectrum_report,
)
from .sweep import EnergySweep
from .weyl import m_plus

logger = logging.getLogger(__name__)


class StrictArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of printing usage and exiting."""

    def error(self, message: str) -> None:
        raise UsageError(f"{self.prog}: {message}")


def configure_logging(verbose: bool = False) -> None:
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if LOG_FILE:
        handlers.append(logging.FileHandler(LOG_FILE))
    logging.basicConfig(
        level=logging.DEBUG if verbose else getattr(logging, LOG_LEVEL),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )


def setup_argparser() -> StrictArgumentParser:
    """Set up command line argument parser."""
    common = StrictArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="Run configuration (.json or .toml)")
    common.add_argument("--output", help="Report base path; .json/.csv suffixes are added")
    common.add_argument("--format", choices=OUTPUT_FORMATS, help="Report format")
    common.add_argument("--count", type=int, help="Atoms materialized per measure window")
    common.add_argument("--threads", type=int, help="Worker threads for energy sweeps")
    common.add_argument("-v", "--verbose", action="store_true", help="Debug logging")

    energy = StrictArgumentParser(add_help=False)
    energy.add_argument("--grid", type=int, help="Number of energy grid points")
    energy.add_argument("--e-min", type=float, help="Lower end of the energy grid")
    energy.add_argument("--e-max", type=float, help="Upper end of the energy grid")

    ladder = StrictArgumentParser(add_help=False)
    ladder.add_argument("--y-ladder", help="Comma-separated decreasing distances to the real axis")
    ladder.add_argument("--tol", type=float, help="Weyl disk radius tolerance")
    ladder.add_argument("--eps-low", type=float, help="Lower classification threshold")
    ladder.add_argument("--eps-high", type=float, help="Upper classification threshold")
    ladder.add_argument("--allow-negative", action="store_true", default=None, help="Allow E < 0")

    parser = StrictArgumentParser(
        prog="treespec",
        description="Spectral analysis of Kirchhoff Laplacians on radial metric trees",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Check a geometry
  treespec validate --config tree.json

  # Floquet bands of a periodic tree
  treespec bands --config tree.json --e-max 20 --output bands --format both

  # Absolutely continuous spectrum estimate
  treespec sigma-ac --config fibonacci.toml --y-ladder 1e-2,1e-3,1e-4 --threads 4

  # m-function at one spectral parameter
  treespec m --config free.json --z "1.0+0.001i"
        """,
    )
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    validate_parser = subparsers.add_parser("validate", parents=[common], help="Validate a geometry")
    validate_parser.add_argument(
        "--emit-normalized", action="store_true", help="Write the normalized geometry instead of a report"
    )

    subparsers.add_parser("bands", parents=[common, energy], help="Floquet bands of a periodic tail")
    subparsers.add_parser(
        "sigma-ac", parents=[common, energy, ladder], help="Classify energies by boundary values of m+"
    )

    m_parser = subparsers.add_parser("m", parents=[common], help="Evaluate m+ at one spectral parameter")
    m_parser.add_argument("--z", required=True, help="Spectral parameter, e.g. '1.0+0.001i'")
    m_parser.add_argument("--t", type=float, help="Base point (default 0)")
    m_parser.add_argument("--tol", type=float, help="Weyl disk radius tolerance")
    m_parser.add_argument("--b-max", type=float, help="Largest truncation point")
    m_parser.add_argument(
        "--method", choices=["auto", "weyl", "tail"], default="auto", help="Evaluation method"
    )

    decompose_parser = subparsers.add_parser("decompose", parents=[common], help="Halfline decomposition")
    decompose_parser.add_argument("--generations", type=int, help="Largest generation")

    subparsers.add_parser("periodicity", parents=[common], help="Eventual periodicity of the profile")

    pieces_parser = subparsers.add_parser("pieces", parents=[common], help="Decomposition properties")
    pieces_parser.add_argument("--ell", type=float, help="Block length for the simple property")

    reflectionless_parser = subparsers.add_parser(
        "reflectionless", parents=[common, energy], help="Reflectionless defect of the periodic line"
    )
    reflectionless_parser.add_argument("--y", type=float, help="Distance to the real axis")
    reflectionless_parser.add_argument("--t", type=float, help="Midgap base point")
    reflectionless_parser.add_argument("--cells", type=int, help="Periods materialized per side")
    reflectionless_parser.add_argument("--tol", type=float, help="Weyl disk radius tolerance")

    tree_parser = subparsers.add_parser(
        "tree-report", parents=[common, energy, ladder], help="Per-generation spectral report"
    )
    tree_parser.add_argument("--generations", type=int, help="Largest generation")

    return parser


OVERRIDE_FLAGS = [
    "e_min", "e_max", "grid", "y_ladder", "tol", "eps_low", "eps_high", "generations", "ell",
    "count", "t", "z", "y", "b_max", "cells", "threads", "format", "output", "allow_negative",
]


def load_config(args: argparse.Namespace) -> RunConfig:
    overrides = {name: getattr(args, name, None) for name in OVERRIDE_FLAGS}
    return ConfigParser().load(args.config, overrides)


def energy_grid(config: RunConfig) -> np.ndarray:
    analysis = config.analysis
    return np.linspace(analysis.e_min, analysis.e_max, analysis.grid)


def thresholds_of(config: RunConfig) -> Thresholds:
    return Thresholds(eps_low=config.analysis.eps_low, eps_high=config.analysis.eps_high)


def summarize(config: RunConfig, line: str) -> None:
    """One-line summary; on stderr when the report itself goes to stdout."""
    if config.analysis.output is None:
        print(line, file=sys.stderr)
    else:
        print(line)


async def validate_config(args: argparse.Namespace) -> int:
    """Check the standing assumptions and report gamma, min branching and the local norm."""
    config = load_config(args)
    geometry = config.geometry
    if args.emit_normalized:
        document = json.dumps({"geometry": geometry.to_dict(), "seed": config.seed}, sort_keys=True, indent=2)
        if config.analysis.output:
            with open(config.analysis.output, "w", encoding="utf-8") as f:
                f.write(document + "\n")
        else:
            print(document)
        return 0

    measure = build_measure(geometry, DEFAULT_WINDOW_ATOMS)
    loc_norm = norm_loc(measure)
    payload = {
        "kind": "validate",
        "geometry": geometry.to_dict(),
        "gamma": geometry.gamma,
        "min_branching": geometry.min_branching,
        "window_atoms": len(measure),
        "loc_norm": loc_norm,
        "loc_bound_estimate": loc_bound_estimate(measure),
    }
    write_report(payload, None, config.analysis.output, "json")
    summarize(
        config,
        f"valid {geometry.kind} geometry: gamma={geometry.gamma:g}, "
        f"min_branching={geometry.min_branching}, loc_norm={loc_norm:.6g}",
    )
    return 0


async def compute_bands(args: argparse.Namespace) -> int:
    config = load_config(args)
    analysis = config.analysis
    bands = floquet_bands(config.geometry.period_pairs(), (analysis.e_min, analysis.e_max), analysis.grid)
    write_report(bands_payload(bands), bands_frame(bands), analysis.output, analysis.format)
    summarize(config, f"{len(bands.bands)} bands in [{analysis.e_min:g}, {analysis.e_max:g}]")
    return 0


async def estimate_sigma_ac(args: argparse.Namespace) -> int:
    config = load_config(args)
    analysis = config.analysis
    measure = build_measure(config.geometry, analysis.count)
    sweep = EnergySweep(max_workers=analysis.threads)
    report = await sweep.sigma_ac(
        measure,
        energy_grid(config),
        analysis.y_ladder,
        thresholds_of(config),
        t=analysis.t or 0.0,
        tol=analysis.tol,
        b_max=analysis.b_max,
        allow_negative=analysis.allow_negative,
    )
    write_report(spectral_payload(report), spectral_frame(report), analysis.output, analysis.format)
    counts = report.counts()
    summarize(
        config,
        f"ac-like fraction {report.ac_fraction():.4f} "
        f"({counts['ac-like']} ac-like, {counts['singular-like']} singular-like, "
        f"{counts['undecided']} undecided)",
    )
    return 0


async def evaluate_m(args: argparse.Namespace) -> int:
    """m+ at one point; exit status 3 when the Weyl enclosure did not reach tol."""
    config = load_config(args)
    analysis = config.analysis
    measure = build_measure(config.geometry, analysis.count)
    t = analysis.t or 0.0
    if args.method == "weyl":
        result = m_plus(measure, t, analysis.z, tol=analysis.tol, b_max=analysis.b_max)
    elif args.method == "tail":
        if measure.tail is None:
            raise ParameterError(f"{config.geometry.kind} geometry has no tail for exact evaluation")
        result = tail_m_plus(measure, t, analysis.z)
    else:
        result = boundary_m_plus(measure, t, analysis.z, tol=analysis.tol, b_max=analysis.b_max)

    payload = {
        "kind": "m",
        "z": analysis.z,
        "t": t,
        "m": result.value,
        "error_bound": result.error_bound,
        "truncation": result.truncation,
        "converged": result.converged,
        "method": result.method,
    }
    write_report(payload, None, analysis.output, "json")
    summarize(
        config,
        f"m+ = {result.value.real:.10g}{result.value.imag:+.10g}i "
        f"(error bound {result.error_bound:.3g}, {result.method})",
    )
    return 0 if result.converged else 3


async def decompose(args: argparse.Namespace) -> int:
    config = load_config(args)
    analysis = config.analysis
    entries = decompose_tree(config.geometry, analysis.generations, analysis.count)
    write_report(decomposition_payload(entries), decomposition_frame(entries), analysis.output, analysis.format)
    multiplicities = ", ".join(str(e.multiplicity) if e.multiplicity_available else "n/a" for e in entries)
    summarize(config, f"{len(entries)} halfline operators, multiplicities {multiplicities}")
    return 0


async def detect_periodicity(args: argparse.Namespace) -> int:
    config = load_config(args)
    analysis = config.analysis
    word, legend = encode_symbols(symbol_sequence(config.geometry, analysis.count))
    report = detect_eventual_periodicity(word, legend)
    payload = {"kind": "periodicity", **report.to_dict()}
    write_report(payload, None, analysis.output, "json")
    if report.found:
        summary = f"period {report.period} after preperiod {report.preperiod} (window of {len(word)} symbols)"
    else:
        summary = f"no eventual periodicity within a window of {len(word)} symbols"
    summarize(config, summary)
    return 0


async def check_pieces(args: argparse.Namespace) -> int:
    config = load_config(args)
    analysis = config.analysis
    measure = build_measure(config.geometry, analysis.count)
    alphabet = alphabet_from_geometry(config.geometry)
    ell = analysis.ell or 2 * alphabet.max_length
    x0 = float(measure.positions[0])

    tiling = check_fdp(measure, alphabet, x0)
    payload: Dict[str, Any] = {
        "kind": "pieces",
        "alphabet": alphabet.to_dict(),
        "ell": ell,
        "fdp": {"success": tiling.success, **tiling.to_dict()},
        "certified": certify_sfdp(alphabet, ell),
    }
    if tiling.success:
        sfdp = check_sfdp(tiling, alphabet, ell, measure)
        payload["sfdp"] = sfdp.to_dict()
        summary = (
            f"tiled by {len(alphabet)} pieces; s.f.d.p. {'holds' if sfdp.holds else 'fails'} "
            f"on the window (ell={ell:g})"
        )
    else:
        payload["sfdp"] = None
        summary = f"no tiling: {tiling.reason} at {tiling.position:g}"
    write_report(payload, None, analysis.output, "json")
    summarize(config, summary)
    return 0


async def probe_reflectionless(args: argparse.Namespace) -> int:
    config = load_config(args)
    analysis = config.analysis
    period = config.geometry.period_pairs()
    line = periodic_line(period, analysis.cells)
    t = analysis.t if analysis.t is not None else period[0][0] / 2
    sweep = EnergySweep(max_workers=analysis.threads)
    defect = await sweep.reflectionless(line, t, energy_grid(config), analysis.y, tol=analysis.tol)
    write_report(reflectionless_payload(defect), reflectionless_frame(defect), analysis.output, analysis.format)
    summarize(config, f"max reflectionless defect {defect.max_defect():.3e} at y={analysis.y:g}")
    return 0


async def tree_report(args: argparse.Namespace) -> int:
    config = load_config(args)
    analysis = config.analysis
    report = tree_spectrum_report(
        config.geometry,
        analysis.generations,
        energy_grid(config),
        analysis.y_ladder,
        thresholds_of(config),
        count=analysis.count,
        tol=analysis.tol,
        allow_negative=analysis.allow_negative,
    )
    write_report(tree_payload(report), tree_frame(report), analysis.output, analysis.format)
    summarize(
        config,
        f"{len(report.generations)} generations, union ac-like fraction {report.union_ac_fraction():.4f}",
    )
    return 0


COMMANDS = {
    "validate": validate_config,
    "bands": compute_bands,
    "sigma-ac": estimate_sigma_ac,
    "m": evaluate_m,
    "decompose": decompose,
    "periodicity": detect_periodicity,
    "pieces": check_pieces,
    "reflectionless": probe_reflectionless,
    "tree-report": tree_report,
}


def emit_error(error: TreeSpecError) -> None:
    print(json.dumps({"schema": SCHEMA, "error": error.to_record()}, sort_keys=True), file=sys.stderr)


async def run(argv: Optional[List[str]] = None) -> int:
    """Parse arguments and dispatch the command."""
    parser = setup_argparser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.error("a command is required")
    configure_logging(args.verbose)
    return await COMMANDS[args.command](args)


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; maps errors to exit codes and JSON error records on stderr."""
    try:
        return asyncio.run(run(argv))
    except TreeSpecError as e:
        logger.error(e.message)
        emit_error(e)
        return e.exit_status
    except KeyboardInterrupt:
        logger.info("Operation cancelled by user")
        return 1
    except Exception as e:
        logger.exception(f"Unexpected error: {e}")
        emit_error(InternalInvariantError(f"unexpected error: {e}"))
        return 4


if __name__ == "__main__":
    sys.exit(main())
