"""Command-line entry point: ``radialflow {run,suite,report}``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import DEFAULT_TOLERANCES, RunConfig, load_config, parse_config
from .errors import ConfigError, RadialFlowError
from .suite import atomic_write, report_from_dir, run_suite, summary_text, to_json

EXIT_PASS, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULT_CONFIG = """
[scenario]
kind = schwarzschild
n = 3
mass = 2
[flow]
eps = 0.05
T = 2
"""


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="radialflow", description="Radial discrete conformal flow lab.")
    sub = p.add_subparsers(dest="verb", required=True)
    for verb, text in (("run", "single scenario at one eps"),
                       ("suite", "eps ladder with extrapolation and checks"),
                       ("report", "recompute checks from CSVs in --out")):
        sp = sub.add_parser(verb, help=text)
        sp.add_argument("--config", type=Path)
        sp.add_argument("--out", type=Path)
        sp.add_argument("--eps", type=float, action="append")
        sp.add_argument("--t-max", type=float, dest="t_max")
        sp.add_argument("--n", type=int)
        sp.add_argument("--grid-points", type=int, dest="grid_points")
        sp.add_argument("--quiet", action="store_true")
    return p


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else parse_config(DEFAULT_CONFIG)
    eps = tuple(args.eps) if args.eps else None
    if args.verb == "run":
        eps = (eps or cfg.eps)[:1]
    return cfg.with_overrides(eps=eps, t_max=args.t_max, n=args.n, points=args.grid_points,
                              out_dir=str(args.out) if args.out else None)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "report":
            out = args.out or (load_config(args.config).out_dir if args.config else None)
            if out is None:
                raise ConfigError("report needs --out or --config")
            tol = load_config(args.config).tolerances if args.config else dict(DEFAULT_TOLERANCES)
            result = report_from_dir(out, tol)
            atomic_write(Path(out) / "report.json", to_json(result.summary))
        else:
            result = run_suite(_config(args))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RadialFlowError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if not args.quiet:
        sys.stdout.write(summary_text(result.summary))
    return EXIT_PASS if result.status == 0 else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
