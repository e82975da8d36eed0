"""CLI entry point: conductivity-recon

Subcommands:
    run      Reconstruct sigma for one example and write CSV/JSON/VTK outputs
    sweep    Run a parameter grid from a config file and fit convergence rates
    verify   Run the fast property suite and print a PASS/FAIL table
    report   Print a saved report.json or sweep_report.json

Usage:
    conductivity-recon run --example 1 --n 48 --k 3 --eps 1e-3 --out /tmp/ex1
    conductivity-recon run --example 3 --data-n 24 --k0 2 --delta 0.1 --noise element --eps 0.01
    conductivity-recon sweep --config grids/example1_eps.txt --out /tmp/sweep --workers 4
    conductivity-recon verify
    conductivity-recon report /tmp/ex1/report.json
"""

from __future__ import annotations

import argparse
import logging
import sys

from .core.config import DATA_MODES, RunConfig
from .data.measurement import NOISE_MODELS
from .errors import ReconstructionError

DEFAULTS = RunConfig()


def _configure_logging(args: argparse.Namespace) -> None:
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s: %(message)s",
        datefmt="%H:%M:%S",
    )


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        example=args.example,
        n=args.n,
        data_n=args.data_n if args.data_n is not None else args.n,
        k=args.k,
        k0=args.k0,
        eps=args.eps,
        delta=args.delta,
        seed=args.seed,
        noise=args.noise,
        penalty=args.penalty,
        tol=args.tol,
        output_dir=args.out,
        data_mode=args.data_mode,
        measure_order=args.measure_order,
    )


def _cmd_run(args: argparse.Namespace) -> int:
    """Run one reconstruction."""
    from .core.runner import print_report, reconstruct, save_outputs

    _configure_logging(args)
    config = _config_from_args(args)
    problems = config.validate()
    if problems:
        for p in problems:
            print(f"Error: {p}", file=sys.stderr)
        return 1

    try:
        report = reconstruct(config, keep_system=args.dump_matrix)
        print_report(report)
        written = save_outputs(report, config.output_dir, dump_matrix=args.dump_matrix)
    except ReconstructionError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1

    print(f"\nWrote {len(written)} files to {config.output_dir}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    """Run a parameter sweep."""
    from .core.config import default_workers, load_config_file
    from .core.sweep import print_sweep_report, save_sweep_report, sweep

    _configure_logging(args)
    workers = args.workers if args.workers is not None else default_workers()
    try:
        axes = load_config_file(args.config)
        report = sweep(axes, args.out, base=RunConfig(output_dir=args.out), workers=workers)
    except ReconstructionError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1

    print_sweep_report(report)
    save_sweep_report(report, args.out)
    print(f"\nSweep tables and charts saved to {args.out}")
    if report.rows and len(report.failed) == len(report.rows):
        print("Error: every sweep cell failed", file=sys.stderr)
        return 1
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    """Run the property suite."""
    from .core.verify import print_verification, run_verification

    _configure_logging(args)
    try:
        report = run_verification(args.only or None)
    except ReconstructionError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1
    print_verification(report)
    return 0 if report.passed else 1


def _cmd_report(args: argparse.Namespace) -> int:
    """Print a saved reconstruction or sweep report."""
    from .core.runner import load_report, print_saved_report, read_report_json
    from .core.sweep import load_sweep_report, print_saved_sweep_report

    try:
        if "axes" in read_report_json(args.report_file):
            print_saved_sweep_report(load_sweep_report(args.report_file))
        else:
            print_saved_report(load_report(args.report_file))
    except ReconstructionError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    """Main CLI entry point."""
    parser = argparse.ArgumentParser(
        prog="conductivity-recon",
        description="Conductivity reconstruction from internal data by upwind DG transport",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Verbose logging")

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    # --- run ---
    run_parser = subparsers.add_parser("run", help="Reconstruct sigma for one example")
    run_parser.add_argument("--example", type=int, choices=(1, 2, 3, 4), default=DEFAULTS.example, help="Case id")
    run_parser.add_argument("--n", type=int, default=DEFAULTS.n, help=f"Mesh subdivisions (default: {DEFAULTS.n})")
    run_parser.add_argument("--data-n", type=int, default=None, help="Data mesh subdivisions (default: --n)")
    run_parser.add_argument("--k", type=int, default=DEFAULTS.k, help=f"Reconstruction degree (default: {DEFAULTS.k})")
    run_parser.add_argument("--k0", type=int, default=DEFAULTS.k0, help=f"Data degree (default: {DEFAULTS.k0})")
    run_parser.add_argument(
        "--eps", type=float, default=DEFAULTS.eps, help=f"Regularization (default: {DEFAULTS.eps:g})"
    )
    run_parser.add_argument("--delta", type=float, default=DEFAULTS.delta, help="Relative noise level (default: 0)")
    run_parser.add_argument("--seed", type=int, default=DEFAULTS.seed, help="Noise seed")
    run_parser.add_argument(
        "--noise",
        choices=NOISE_MODELS,
        default=DEFAULTS.noise,
        help="One xi per measurement point, or one gain per data triangle (default: pointwise)",
    )
    run_parser.add_argument("--penalty", type=float, default=DEFAULTS.penalty, help="DG jump penalty (default: 100)")
    run_parser.add_argument("--tol", type=float, default=DEFAULTS.tol, help="Solver relative residual")
    run_parser.add_argument("--out", default=DEFAULTS.output_dir, help="Output directory")
    run_parser.add_argument(
        "--data-mode",
        choices=DATA_MODES,
        default=DEFAULTS.data_mode,
        help="exact: closed-form grad u (examples 1, 4, no noise); measured: sample, perturb and project",
    )
    run_parser.add_argument(
        "--measure-order",
        type=int,
        default=DEFAULTS.measure_order,
        help="Measurement lattice order per element, >= k0 (default: k0 for clean data, k0 + 2 with noise)",
    )
    run_parser.add_argument("--dump-matrix", action="store_true", help="Also write system.mtx (Matrix Market)")

    # --- sweep ---
    sweep_parser = subparsers.add_parser("sweep", help="Run a parameter grid and fit rates")
    sweep_parser.add_argument("--config", required=True, help="Grid file (key = v1, v2 text or YAML)")
    sweep_parser.add_argument("--out", default=DEFAULTS.output_dir, help="Output directory")
    sweep_parser.add_argument(
        "--workers", type=int, default=None, help="Concurrent cells (default: $CONDUCTIVITY_RECON_WORKERS or 1)"
    )

    # --- verify ---
    verify_parser = subparsers.add_parser("verify", help="Run the property suite")
    verify_parser.add_argument("--only", action="append", default=[], metavar="CHECK", help="Run only this check")

    # --- report ---
    report_parser = subparsers.add_parser("report", help="Print a saved report")
    report_parser.add_argument("report_file", help="Path to report.json or sweep_report.json")

    args = parser.parse_args()

    if not args.command:
        parser.print_help()
        sys.exit(1)

    handlers = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "verify": _cmd_verify,
        "report": _cmd_report,
    }

    handler = handlers.get(args.command)
    if handler:
        sys.exit(handler(args))
    else:
        parser.print_help()
        sys.exit(1)


if __name__ == "__main__":
    main()
