"""Command-line front end: one subcommand per simulated data product.

Exit codes: 0 success, 1 invalid input, 2 I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .experiment import (
    ConfigError,
    ExperimentConfig,
    expectation_values,
    prepare_state,
    run_bell_experiment,
    run_witness_experiment,
    theta_scan,
)
from .fileio import load_config, parse_angle, write_json, write_manifest, write_scan_csv
from .gbi import CLASSICAL_BOUND, gbi_result_json, lhv_max
from .quantum import make_phase_ghz
from .tomography import fidelity_with_error, mle_reconstruct, reconstruction_json, simulate_tomography_counts
from .witness import N_PARTIES, SUPPORTED_LABEL, witness_result_json

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2


class InvalidInput(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InvalidInput(message)


def _angle(text: str) -> float:
    try:
        return parse_angle(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _config(args) -> ExperimentConfig:
    if args.config is None:
        raise InvalidInput("--config is required for this subcommand")
    config = load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    return config


def cmd_scan(args) -> int:
    config = _config(args)
    if args.steps < 2:
        raise InvalidInput("scan needs at least 2 steps")
    grid = np.linspace(args.theta_min, args.theta_max, args.steps)
    rows = theta_scan(config, grid)
    write_scan_csv(rows, args.out)
    write_manifest("scan", config, config.seed, [args.out], args.out)
    return EXIT_OK


def cmd_expectations(args) -> int:
    config = _config(args)
    theta = config.theta if args.theta is None else args.theta
    write_json({"theta": theta, "mode": config.mode, "expectations": expectation_values(config, theta)}, args.out)
    write_manifest("expectations", config, config.seed, [args.out], args.out)
    return EXIT_OK


def cmd_witness(args) -> int:
    config = _config(args)
    theta = config.theta if args.theta is None else args.theta
    try:
        run = run_witness_experiment(config, theta)
    except ValueError as exc:
        raise InvalidInput(f"unsupported witness phase; choose one of {SUPPORTED_LABEL} ({exc})") from None
    write_json(witness_result_json(theta, run.witness, run.sigma, run.method), args.out)
    write_manifest("witness", config, config.seed, [args.out], args.out)
    return EXIT_OK


def cmd_tomography(args) -> int:
    config = _config(args)
    if not args.shots > 0:
        raise InvalidInput("--shots must be positive")
    theta = config.theta if args.theta is None else args.theta
    rho = prepare_state(config, theta)
    tset = simulate_tomography_counts(rho, args.shots, config.seed)
    target = make_phase_ghz(N_PARTIES, theta)
    fit = mle_reconstruct(tset)
    f, sigma = fidelity_with_error(tset, target, n_bootstrap=config.n_bootstrap, rng_seed=config.seed)
    counts_path = Path(args.out).with_suffix(".counts.json")
    counts_path.write_text(tset.to_json() + "\n")
    out = reconstruction_json(
        fit.rho, f, sigma,
        theta=theta,
        shots_per_setting=float(args.shots),
        log_likelihood=fit.log_likelihood,
        iterations=fit.iterations,
        n_bootstrap=config.n_bootstrap,
    )
    write_json(out, args.out)
    write_manifest("tomography", config, config.seed, [args.out, counts_path], args.out)
    return EXIT_OK


def cmd_lhv(args) -> int:
    if not 1 <= args.n <= 6:
        raise InvalidInput("lhv enumeration supports 1 to 6 parties")
    bound, strategy = lhv_max(args.n)
    write_json(
        {
            "n": args.n,
            "bound": bound,
            "strategy": [list(p) for p in strategy.outcomes],
            "strategies_enumerated": 4**args.n,
            "classical_bound": CLASSICAL_BOUND,
        },
        args.out,
    )
    write_manifest("lhv", None, None, [args.out], args.out)
    return EXIT_OK


def cmd_bell_test(args) -> int:
    config = _config(args)
    if args.theta is not None:
        config = config.with_theta(args.theta)
    run = run_bell_experiment(config)
    out = gbi_result_json(config.theta, run.S, run.table, run.errors)
    out["sigma_S"] = run.sigma_S
    out["significance_sd"] = run.significance_sd
    out["mode"] = config.mode
    out["records"] = [run.records[k].to_dict() for k in sorted(run.records)]
    write_json(out, args.out)
    write_manifest("bell-test", config, config.seed, [args.out], args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="ExperimentConfig JSON file")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", required=True, help="output file")

    parser = _Parser(prog="phaseghz", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("scan", parents=[common], help="S versus phase (CSV)")
    p.add_argument("--theta-min", type=_angle, default=0.0)
    p.add_argument("--theta-max", type=_angle, default=np.pi)
    p.add_argument("--steps", type=int, default=65)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("expectations", parents=[common], help="the 16 correlation values")
    p.add_argument("--theta", type=_angle)
    p.set_defaults(func=cmd_expectations)

    p = sub.add_parser("witness", parents=[common], help=f"GHZ witness at theta in {{{SUPPORTED_LABEL}}}")
    p.add_argument("--theta", type=_angle)
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("tomography", parents=[common], help="simulate 256-projector QST and reconstruct")
    p.add_argument("--shots", type=float, required=True, help="mean counts per projector at unit probability")
    p.add_argument("--theta", type=_angle)
    p.set_defaults(func=cmd_tomography)

    p = sub.add_parser("lhv", parents=[common], help="classical bound by exhaustive enumeration")
    p.add_argument("--n", type=int, default=4)
    p.set_defaults(func=cmd_lhv)

    p = sub.add_parser("bell-test", parents=[common], help="one simulated GBI measurement")
    p.add_argument("--theta", type=_angle)
    p.set_defaults(func=cmd_bell_test)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (InvalidInput, ConfigError, ValueError) as exc:
        print(f"phaseghz: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"phaseghz: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
