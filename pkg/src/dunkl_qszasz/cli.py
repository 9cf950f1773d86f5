"""Command-line entry point: ``dunkl-qszasz {moments,converge,bivariate,bounds-audit}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import experiments as ex

log = logging.getLogger("dunkl_qszasz")

COMMANDS = {
    "moments": (ex.run_moment_audit, ex.MOMENT_COLUMNS),
    "converge": (ex.run_convergence, ex.CONVERGENCE_COLUMNS),
    "bivariate": (ex.run_bivariate, ex.BIVARIATE_COLUMNS),
    "bounds-audit": (ex.run_bounds_audit, ex.BOUNDS_COLUMNS),
}

# flag name -> config field, parser
_FLAGS = {
    "n_list": lambda s: tuple(int(v) for v in s.split(",") if v.strip()),
    "q": float,
    "q_schedule": str,
    "mu": float,
    "alpha": float,
    "beta": float,
    "x_max": float,
    "grid_points": int,
    "functions": lambda s: tuple(v.strip() for v in s.split(",") if v.strip()),
    "tail_tol": float,
    "max_terms": int,
    "audit_tol": float,
    "lambda_form": str,
    "format": str,
    "out": str,
    "workers": int,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dunkl-qszasz", description="Moment audits and convergence tables for the Dunkl q-Szasz-Kantorovich-Stancu operators.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="flat 'key = value' file; flags override it")
        p.add_argument("--n-list", dest="n_list", help="comma separated operator indices")
        p.add_argument("--q", type=float, help="fixed q; implies --q-schedule fixed unless given")
        p.add_argument("--q-schedule", dest="q_schedule", choices=ex.SCHEDULES)
        for flag in ("mu", "alpha", "beta"):
            p.add_argument(f"--{flag}", type=float)
        p.add_argument("--x-max", dest="x_max", type=float)
        p.add_argument("--grid-points", dest="grid_points", type=int)
        p.add_argument("--functions", help="comma separated registry names")
        p.add_argument("--tail-tol", dest="tail_tol", type=float)
        p.add_argument("--max-terms", dest="max_terms", type=int)
        p.add_argument("--audit-tol", dest="audit_tol", type=float)
        p.add_argument("--lambda-form", dest="lambda_form", choices=("printed", "corrected"))
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--workers", type=int, help="process pool size (default 1)")
    return parser


def config_from_args(args: argparse.Namespace) -> ex.ExperimentConfig:
    base = ex.ExperimentConfig()
    if args.config is not None:
        base = ex.parse_config(args.config.read_text())
    overrides = {}
    for key, conv in _FLAGS.items():
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = conv(value) if isinstance(value, str) else value
    if "q" in overrides and "q_schedule" not in overrides:
        overrides["q_schedule"] = "fixed"
    return replace(base, **overrides)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
    except (ValueError, KeyError) as exc:
        parser.error(str(exc))
    runner, columns = COMMANDS[args.command]
    log.info("running %s for n in %s", args.command, cfg.n_list)
    rows, failed = runner(cfg)
    text = ex.format_table(rows, columns, cfg.format)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    audited = [r for r in rows if r.get("pass") is not None]
    bad = sum(1 for r in audited if r["pass"] is False)
    log.info("%d audited cells, %d outside tolerance", len(audited), bad)
    if failed:
        print(f"equality audit failed ({bad} cells outside tolerance)", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
