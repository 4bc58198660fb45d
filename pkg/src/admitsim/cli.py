"""Command line front end.

Exit codes: 0 success, 2 configuration problem, 3 a verification suite
found property violations, 4 numerical failure (estimation did not
converge or a linear algebra routine gave up).
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .clogit import ConvergenceError
from .config import ConfigError, load_config
from .experiment import STAGES, StageError, run_all, stage_estimate, write_manifest
from .harness import misreport_suite, stability_suite

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VIOLATION = 3
EXIT_NUMERICAL = 4


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="JSON config file")
    parser.add_argument("--preset", default=None, help="named preset configuration")
    parser.add_argument("--seed", type=int, default=None, help="master seed")
    parser.add_argument(
        "--replications", type=int, default=None, help="bootstrap replications"
    )
    parser.add_argument(
        "--out", type=Path, default=Path("out"), help="artifact directory"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="admitsim",
        description="Centralized admission market simulator and estimators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, blurb in [
        ("generate", "draw a synthetic population and its submitted lists"),
        ("match", "clear the market on previously generated lists"),
        ("cutoffs", "bootstrap the admission cutoff distribution"),
        ("beliefs", "score subjective beliefs against the bootstrap"),
        ("estimate", "run the survey regressions and demand models"),
        ("run-all", "run every stage in order and write a manifest"),
    ]:
        p = sub.add_parser(name, help=blurb)
        _add_common(p)
        if name == "estimate":
            p.add_argument(
                "--mode",
                choices=("revealed", "stated", "stability"),
                default=None,
                help="fit only this demand sampling mode",
            )

    v = sub.add_parser("verify", help="run the mechanism verification suites")
    v.add_argument("--seed", type=int, default=0, help="suite seed")
    v.add_argument(
        "--replications", type=int, default=200, help="instances per suite"
    )
    v.add_argument(
        "--max-students",
        type=int,
        default=5,
        help="largest instance for exhaustive misreport enumeration (cap 5)",
    )
    v.add_argument(
        "--max-programs",
        type=int,
        default=4,
        help="largest program count for exhaustive enumeration (cap 4)",
    )
    return parser


def _load(args) -> "ExperimentConfig":
    return load_config(
        path=args.config,
        preset=args.preset,
        seed=args.seed,
        replications=args.replications,
    )


def _run_verify(args) -> int:
    if args.max_students > 5 or args.max_programs > 4:
        raise ConfigError(
            "exhaustive enumeration is capped at 5 students and 4 programs;"
            f" got --max-students {args.max_students} --max-programs {args.max_programs}"
        )
    if args.max_students < 1 or args.max_programs < 1:
        raise ConfigError("verification bounds must be at least 1")
    n = args.replications
    print(f"misreport suite: {n} instances, exhaustive deviations")
    mis = misreport_suite(
        n_instances=n,
        seed=args.seed,
        max_students=args.max_students,
        max_programs=args.max_programs,
    )
    print(
        f"  runs={mis.n_runs} violations={mis.total_violations}"
        f" elapsed={mis.elapsed_seconds:.2f}s"
    )
    for kind, count in sorted(mis.violation_counts.items()):
        print(f"  {kind}: {count}")
    print(f"stability suite: {n} random markets")
    stab = stability_suite(n_markets=n, seed=args.seed + 1)
    print(
        f"  runs={stab.n_runs} violations={stab.total_violations}"
        f" elapsed={stab.elapsed_seconds:.2f}s"
    )
    for kind, count in sorted(stab.violation_counts.items()):
        print(f"  {kind}: {count}")
    if not (mis.passed and stab.passed):
        for example in (mis.examples + stab.examples)[:5]:
            print(f"  example: {example}")
        print("FAIL: property violations found")
        return EXIT_VIOLATION
    print("OK: no violations")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return _run_verify(args)
        cfg = _load(args)
        out = args.out
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "run-all":
            manifest = run_all(cfg, out)
            rates = manifest["summary"].get("outcome_rates", {})
            if rates:
                print(
                    "rates: non_truthful={share_non_truthful:.3f}"
                    " omits_top={share_omits_top:.3f}"
                    " payoff_relevant={share_payoff_relevant:.3f}".format(**rates)
                )
            print(f"wrote {out / 'manifest.json'}")
        elif args.command == "estimate":
            started = time.perf_counter()
            stage_estimate(cfg, out, mode=args.mode)
            write_manifest(cfg, out, {"estimate": time.perf_counter() - started})
            print(f"wrote {out / 'fits.json'}")
        else:
            started = time.perf_counter()
            STAGES[args.command](cfg, out)
            write_manifest(cfg, out, {args.command: time.perf_counter() - started})
            print(f"{args.command}: artifacts in {out}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        cause = exc.cause
        print(str(exc), file=sys.stderr)
        if isinstance(cause, ConfigError):
            return EXIT_CONFIG
        if isinstance(cause, (ConvergenceError, np.linalg.LinAlgError, FloatingPointError)):
            return EXIT_NUMERICAL
        raise
    except (ConvergenceError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
