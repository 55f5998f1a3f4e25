"""Command-line entry point: ``blockconformal {predict,coverage,ergodicity,simulate}``."""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConformalError
from .experiments import load_config, parse_overrides, run_coverage, run_ergodicity, run_predict, run_simulate


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="flat key = value config file")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", metavar="PATH", help="output CSV (default: stdout)")
    p.add_argument("--full", action="store_true", help="large study: 2000 replications, T in {100,200}, 20 rho values")
    p.add_argument("--scheme", choices=["nob", "cso", "ob", "split"])
    p.add_argument("--block-size", type=int, metavar="B")
    p.add_argument("--alpha", type=float, metavar="A")
    p.add_argument("--grid-points", type=int, metavar="H")
    p.add_argument("--input", metavar="PATH", help="series CSV (t,y,x1,...,xp)")
    p.add_argument("--scorer", choices=["lasso", "ridge", "ols", "ar", "oracle"])
    p.add_argument("--replications", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE",
        help="override any config key (repeatable)",
    )
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blockconformal", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("predict", "prediction set for one series"),
        ("coverage", "Monte Carlo coverage and interval length study"),
        ("ergodicity", "randomization-CDF decay study"),
        ("simulate", "dump a simulated dataset as CSV"),
    ]:
        _common(sub.add_parser(name, help=help_))
    return parser


_FLAG_KEYS = ["seed", "out", "scheme", "block_size", "alpha", "grid_points", "input", "scorer", "replications", "workers"]


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        pairs = []
        for item in args.set:
            if "=" not in item:
                raise ConformalError(f"--set expects KEY=VALUE, got {item!r}")
            pairs.append(tuple(item.split("=", 1)))
        overrides = parse_overrides(pairs)
        overrides.update({k: getattr(args, k) for k in _FLAG_KEYS if getattr(args, k) is not None})
        overrides["experiment"] = args.command
        cfg = load_config(args.config, **overrides)
        if args.full:
            cfg = cfg.with_full_scale()
        if args.command == "predict":
            run = run_predict(cfg)
            print(run.summary, file=sys.stderr if cfg.out is None else sys.stdout)
        elif args.command == "coverage":
            report = run_coverage(cfg)
            if cfg.out is not None:
                for r in report.rows:
                    print(f"T={r.T} rho={r.rho:g} coverage={r.empirical_coverage:.4f} "
                          f"(se {r.mc_standard_error:.4f}) mean_length={r.mean_length:.4f} grid_miss={r.grid_miss}")
        elif args.command == "ergodicity":
            rows = run_ergodicity(cfg)
            if cfg.out is not None:
                for r in rows:
                    print(f"K={r.K} mean_gap={r.mean_gap:.5f} sd_gap={r.sd_gap:.5f}")
        else:
            run_simulate(cfg)
    except ConformalError as e:
        print(f"error [{type(e).__module__}.{type(e).__name__}]: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error [io]: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
