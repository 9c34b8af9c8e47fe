"""Command-line driver: ``densemimo {uplink,downlink,validate} [options]``."""

from __future__ import annotations

import argparse
import logging
import sys

from .exceptions import ConfigError, NumericalFailure
from .harness import SweepConfig, emit_csv, run_downlink_sweep, run_uplink_sweep, validate_model

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_PROPERTY = 0, 1, 2, 3


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")


def _quad(text):
    try:
        if "x" in text:
            n_theta, n_phi = (int(v) for v in text.lower().split("x"))
        else:
            n_theta = int(text)
            n_phi = 2 * n_theta
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or NTHETAxNPHI, got {text!r}")
    return n_theta, n_phi


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="densemimo",
        description="Dense-array massive MIMO with one-bit converters: fixed-aperture sweeps.",
    )
    common = argparse.ArgumentParser(add_help=False)
    d = SweepConfig()
    common.add_argument("--aperture", type=float, default=d.aperture_lambda,
                        help="array side length in wavelengths (default %(default)s)")
    common.add_argument("--elements", type=_int_list, default=d.element_counts,
                        help="comma-separated element counts, each a perfect square")
    common.add_argument("--users", type=int, default=d.users)
    common.add_argument("--snr", type=float, default=d.snr,
                        help="eps_k/N0 (uplink) or eps/(N0 N_F) (downlink)")
    common.add_argument("--noise-figure", type=float, default=d.noise_figure)
    common.add_argument("--realizations", type=int, default=d.realizations)
    common.add_argument("--seed", type=int, default=d.seed)
    common.add_argument("--delta", type=float, default=d.delta,
                        help="eigenvalue threshold of the dither projector")
    common.add_argument("--dither-ratio", type=float, default=d.dither_ratio,
                        help="sigma_d^2/eps in units of lambda/a (default 1/3)")
    common.add_argument("--no-dither", action="store_true", help="disable non-radiating dither")
    common.add_argument("--quad-points", type=_quad, default=d.quad_points,
                        help="quadrature grid for the coupling oracle, N or NTHETAxNPHI")
    common.add_argument("--workers", type=int, default=d.workers)
    common.add_argument("--out", default=None, help="CSV output path (default: stdout)")
    common.add_argument("-v", "--verbose", action="store_true")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("uplink", parents=[common], help="uplink one-bit ADC sweep")
    sub.add_parser("downlink", parents=[common], help="downlink one-bit DAC sweep")
    val = sub.add_parser("validate", parents=[common], help="run the model property suite")
    val.add_argument("--inject-coupling-scale", type=float, default=1.0, metavar="C",
                     help="scale coupling matrices by C before the passivity checks (fault injection)")
    return parser


def _config(args) -> SweepConfig:
    return SweepConfig(
        aperture_lambda=args.aperture,
        element_counts=args.elements,
        users=args.users,
        snr=args.snr,
        noise_figure=args.noise_figure,
        realizations=args.realizations,
        seed=args.seed,
        delta=args.delta,
        dither_ratio=args.dither_ratio,
        dither=not args.no_dither,
        quad_points=args.quad_points,
        workers=args.workers,
        output_path=args.out,
    ).validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        report = validate_model(cfg, coupling_scale=args.inject_coupling_scale)
        print(report)
        return EXIT_OK if report.passed else EXIT_PROPERTY

    sweep = run_uplink_sweep if args.command == "uplink" else run_downlink_sweep
    try:
        rows = sweep(cfg)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    try:
        emit_csv(rows, cfg.output_path or sys.stdout)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
