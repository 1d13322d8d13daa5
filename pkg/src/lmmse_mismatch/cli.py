"""Command-line front end: ``lmmse-mismatch --scenario s1 --out-csv out.csv``.

Exit status is 0 on success, 1 on a usage error and 2 on a runtime failure
(including any grid cell that could not be computed).
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .experiment import (
    DEFAULT_NS,
    DEFAULT_PS,
    DEFAULT_SEED,
    ScenarioConfig,
    run_sweep,
    scenario_config,
)
from .numkit import InvalidInputError
from .report import render_svg, write_csv, write_manifest

log = logging.getLogger("lmmse_mismatch")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

PRESET_COVARIANCE = {"s1": "identity", "s2": "identity", "s3": "randomized", "s4": "identity"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def parse_int_list(text: str) -> tuple[int, ...]:
    """Expand ``"5,10,20:2:30"`` into integers.

    Items are comma separated; ``a:b`` is the inclusive range ``a..b`` and
    ``a:s:b`` the inclusive range with step ``s``.
    """
    out: list[int] = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            raise UsageError(f"empty item in list {text!r}")
        parts = item.split(":")
        try:
            nums = [int(x) for x in parts]
        except ValueError:
            raise UsageError(f"malformed range {item!r}") from None
        if len(nums) == 1:
            out.append(nums[0])
            continue
        if len(nums) == 2:
            start, step, stop = nums[0], 1, nums[1]
        elif len(nums) == 3:
            start, step, stop = nums
        else:
            raise UsageError(f"malformed range {item!r}")
        if step <= 0 or stop < start:
            raise UsageError(f"malformed range {item!r}")
        out.extend(range(start, stop + 1, step))
    return tuple(out)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="lmmse-mismatch",
        description="Monte Carlo sweep of the reduced-order LMMSE estimator "
        "with the closed-form expected MSE alongside.",
    )
    p.add_argument("--scenario", choices=["s1", "s2", "s3", "s4", "custom"], required=True)
    p.add_argument("--p", type=int, help="number of unknowns (default 30)")
    p.add_argument("--ps", help="p_S grid, e.g. 10,20,30 or 1:30 (default 10,20,30)")
    p.add_argument("--n", dest="ns", help="n grid, e.g. 2:2:90 (default 2:2:90)")
    p.add_argument("--replicates", "-M", type=int, default=100)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--mode", choices=["draw", "conditional"], default="conditional")
    p.add_argument("--sigma-x2", type=float, help="signal power per unknown (default 1)")
    p.add_argument("--sigma-v2", type=float, help="true noise variance per sample")
    p.add_argument("--sigma-z2", type=float, help="noise variance assumed by the estimator")
    p.add_argument("--kx", choices=["identity", "randomized"],
                   help="covariance rule for x (custom scenario only)")
    p.add_argument("--common-random-numbers", action="store_true",
                   help="share regressor draws across p_S at equal n")
    p.add_argument("--rcond", type=float, help="relative pseudoinverse cutoff")
    p.add_argument("--threads", type=int, help="worker threads (default: LMMSE_THREADS or CPU count)")
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-svg")
    p.add_argument("--title")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def parse_config(argv: Sequence[str]) -> tuple[ScenarioConfig, argparse.Namespace]:
    """Resolve flags into a :class:`ScenarioConfig`; explicit flags beat presets."""
    args = build_parser().parse_args(list(argv))
    overrides: dict = {}
    if args.p is not None:
        overrides["p"] = args.p
    overrides["ps"] = parse_int_list(args.ps) if args.ps else DEFAULT_PS
    overrides["ns"] = parse_int_list(args.ns) if args.ns else DEFAULT_NS
    for flag, key in (("sigma_x2", "sigma_x2"), ("sigma_v2", "sigma_v2"), ("sigma_z2", "sigma_z2")):
        value = getattr(args, flag)
        if value is not None:
            overrides[key] = value
    if args.kx is not None:
        preset = PRESET_COVARIANCE.get(args.scenario)
        if preset is not None and preset != args.kx:
            raise UsageError(f"--kx {args.kx} contradicts scenario {args.scenario} ({preset})")
        overrides["covariance"] = args.kx
    if args.rcond is not None:
        if args.rcond < 0:
            raise UsageError("--rcond must be >= 0")
        overrides["rcond"] = args.rcond
    overrides.update(
        replicates=args.replicates,
        seed=args.seed,
        mode=args.mode,
        common_random_numbers=args.common_random_numbers,
    )
    if args.threads is not None and args.threads < 0:
        raise UsageError("--threads must be >= 0")
    try:
        cfg = scenario_config(args.scenario, **overrides)
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from None
    return cfg, args


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        cfg, args = parse_config(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        with np.errstate(all="ignore"):
            records = run_sweep(cfg, threads=args.threads)
        write_csv(records, args.out_csv)
        write_manifest(cfg, records, f"{args.out_csv}.manifest", argv)
        if args.out_svg:
            render_svg(records, args.out_svg, title=args.title)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"{parser.prog}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    failed = [r for r in records if r.failed]
    if failed:
        print(f"{parser.prog}: {len(failed)} cell(s) failed; see flags column", file=sys.stderr)
        return EXIT_RUNTIME
    log.info("wrote %d records to %s", len(records), args.out_csv)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
