"""Command line entry point: ``thinch <subcommand> [--config F] [--out-dir D]``.

Exit status is 0 iff every enabled check passed (or, for plain runs, the run
finished).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from .bulk import StepError, ThinDomain
from .config import ConfigError, ExperimentConfig
from .geometry import GeometryError
from .potential import PotentialError
from .pullback import dump_coefficients
from .study import (
    run_convergence_study,
    run_residual_sweep,
    run_verification_suite,
    simulate_bulk,
    simulate_surface,
)


def _load(args):
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.replace(bulk__seed=args.seed)
    return cfg


def cmd_verify(cfg, out_dir):
    report = run_verification_suite(cfg)
    lines = report.lines()
    print("\n".join(lines))
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "verify.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return report.ok


def cmd_converge(cfg, out_dir):
    report = run_convergence_study(cfg, out_dir=out_dir)
    for col, rate in report.fitted_rates.items():
        verdict = report.passed.get(col)
        tag = {True: "PASS", False: "FAIL", None: "n/a"}[verdict] if col in report.passed else "info"
        print(f"[{tag:4s}] rate {col}: {rate:.3f}")
    for note in report.notes:
        print(f"note: {note}")
    return report.ok


def cmd_residual_sweep(cfg, out_dir):
    for row in run_residual_sweep(cfg, out_dir=out_dir):
        print("eps={:g} zeta_delta={:.3e} zeta_F={:.3e} grad_zeta_delta={:.3e}".format(*row))
    return True


def cmd_dump_coefficients(cfg, out_dir):
    domain = ThinDomain(cfg.chart(), cfg.profile(), cfg.grid())
    os.makedirs(out_dir, exist_ok=True)
    dump_coefficients(domain.coeffs, os.path.join(out_dir, "coefficients.csv"))
    print(f"c_ell={domain.coeffs.c_ell:.6g} det_mismatch={domain.coeffs.det_mismatch:.2e}")
    return True


def cmd_simulate_bulk(cfg, out_dir):
    traj = simulate_bulk(cfg, out_dir)
    print(f"{len(traj.rows) - 1} steps, final energy {traj.rows[-1][3]:.6g}")
    return True


def cmd_simulate_surface(cfg, out_dir):
    traj = simulate_surface(cfg, out_dir)
    print(f"{len(traj.rows) - 1} steps, final energy {traj.rows[-1][3]:.6g}")
    return True


COMMANDS = {
    "verify": cmd_verify,
    "simulate-bulk": cmd_simulate_bulk,
    "simulate-surface": cmd_simulate_surface,
    "converge": cmd_converge,
    "residual-sweep": cmd_residual_sweep,
    "dump-coefficients": cmd_dump_coefficients,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="thinch", description="Cahn-Hilliard in curved thin shells and its surface limit."
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="key = value configuration file")
    parser.add_argument("--out-dir", default=".", help="directory for CSV outputs")
    parser.add_argument("--seed", type=int, help="override bulk.seed")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    try:
        cfg = _load(args)
        ok = COMMANDS[args.command](cfg, args.out_dir)
    except (ConfigError, GeometryError, PotentialError, StepError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
