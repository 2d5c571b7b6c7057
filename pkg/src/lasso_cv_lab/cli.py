"""Command-line entry point ``lasso-cv-lab``.

Exit status: 0 on success, 1 on a hard error, 2 when a ``diagnose`` check fails.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import checks
from .cv import cv_curve
from .design import Dataset, generate_design, realize
from .errors import LassoLabError
from .experiments import (SCHEMA_VERSION, ExperimentConfig, default_config, emit_report,
                          run_consistency_sweep)
from .lasso import compute_path
from .risk import default_grid, risk_curve
from .seeding import MASK64, derive_seed

FORMATS = ("csv", "json", "plotdata")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value <= MASK64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _add_globals(parser, default=None):
    # subparsers use SUPPRESS so flags given before the subcommand survive
    parser.add_argument("--config", type=Path, default=default, help="experiment config (JSON)")
    parser.add_argument("--seed", type=_u64, default=default, help="master / data seed")
    parser.add_argument("--out", type=Path, default=default, help="output directory")
    parser.add_argument("--format", choices=FORMATS, default=default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lasso-cv-lab",
        description="Exact lasso paths, exact LOO-CV curves and CV risk-consistency experiments.",
    )
    _add_globals(parser)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def data_opts(p):
        p.add_argument("--data", type=Path, help="dataset JSON; otherwise one is generated")
        p.add_argument("--n", type=int, help="sample size for a generated dataset")

    p = sub.add_parser("path", help="exact regularization path")
    data_opts(p)
    p = sub.add_parser("cv", help="exact leave-one-out CV curve")
    data_opts(p)
    p = sub.add_parser("risk", help="Monte-Carlo predictive risk curve")
    p.add_argument("--n", type=int)
    p.add_argument("--m-draws", type=int)
    p.add_argument("--grid-size", type=int, default=100)
    p = sub.add_parser("diagnose", help="run one empirical check")
    p.add_argument("--check", choices=checks.CHECKS, required=True)
    p = sub.add_parser("sweep", help="consistency sweep over n")
    p.add_argument("--reps", type=int)
    p.add_argument("--m-draws", type=int)
    p.add_argument("--n-schedule", type=lambda s: tuple(int(v) for v in s.split(",")))
    p.add_argument("--workers", type=int, default=1)
    for name in ("path", "cv", "risk", "diagnose", "sweep"):
        _add_globals(sub.choices[name], argparse.SUPPRESS)
    return parser


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config) if args.config else default_config()
    if args.seed is not None:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "master_seed": args.seed})
    return cfg


def _dataset(args, cfg) -> Dataset:
    if getattr(args, "data", None):
        return Dataset.from_json(args.data.read_text(encoding="utf-8"))
    n = args.n or cfg.n_schedule[0]
    design = generate_design(cfg.design_spec(n))
    return realize(design, cfg.truth, derive_seed(cfg.master_seed, n, 0, "data"))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# schema_version={SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows([[float(v) if isinstance(v, (np.floating, float)) else v for v in r]
                 for r in rows])
    return buf.getvalue()


def _emit(args, stem: str, csv_text: str, summary: dict | None, figure=None) -> None:
    """Write ``stem.csv``/``stem.json``/``stem.png`` under --out, or print to stdout."""
    if args.out is None:
        if args.format == "json" and summary is not None:
            print(json.dumps(summary, indent=2))
        else:
            sys.stdout.write(csv_text)
        return
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / f"{stem}.csv").write_text(csv_text, encoding="utf-8")
    if summary is not None:
        (args.out / f"{stem}.json").write_text(json.dumps(summary, indent=2) + "\n",
                                               encoding="utf-8")
    if figure is not None:
        figure(args.out / f"{stem}.png")


def cmd_path(args) -> int:
    from .plotting import plot_path

    cfg = _config(args)
    data = _dataset(args, cfg)
    path = compute_path(data.X, data.y)
    lams = np.asarray(path.knots)
    vals = path.evaluate(lams)
    header = ["lambda"] + [f"theta_{j + 1}" for j in range(data.p)]
    text = _csv_text(header, [[lam, *row] for lam, row in zip(lams, vals)])
    summary = {"schema_version": SCHEMA_VERSION, **path.to_dict()}
    _emit(args, "path", text, summary, lambda f: plot_path(path, f))
    return 0


def cmd_cv(args) -> int:
    from .plotting import plot_cv_curve

    cfg = _config(args)
    data = _dataset(args, cfg)
    curve = cv_curve(data)
    lams = np.unique(np.concatenate([curve.breakpoints, curve.vertices()]))
    text = _csv_text(["lambda", "cv_risk"], zip(lams, curve(lams)))
    summary = {"schema_version": SCHEMA_VERSION, "lambda_hat": curve.lambda_hat,
               "min_cv_risk": curve.min_value, "lambda_top": curve.lambda_top}
    _emit(args, "cv", text, summary, lambda f: plot_cv_curve(curve, f))
    return 0


def cmd_risk(args) -> int:
    from .plotting import plot_risk_curve

    cfg = _config(args)
    n = args.n or cfg.n_schedule[0]
    design = generate_design(cfg.design_spec(n))
    truth = cfg.truth
    top = float(np.abs(design.rows.T @ (design.rows @ truth.theta)).max() / n)
    # rough upper end: the noiseless lambda_max plus four noise standard deviations
    top = 1.01 * (top + 4 * truth.sigma * design.c_x_bound / np.sqrt(n))
    if top <= 0:
        top = 1.0
    grid = default_grid(top, size=args.grid_size)
    curve = risk_curve(design, truth, grid, args.m_draws or cfg.m_draws,
                       derive_seed(cfg.master_seed, n, "risk"))
    text = _csv_text(["lambda", "risk", "std_error"],
                     zip(curve.lambdas, curve.estimates, curve.std_errors))
    summary = {"schema_version": SCHEMA_VERSION, "lambda_star": curve.lambda_star,
               "risk_at_star": curve.risk_at_star}
    _emit(args, "risk", text, summary, lambda f: plot_risk_curve(curve, f))
    return 0


def cmd_diagnose(args) -> int:
    cfg = _config(args)
    fields, rows, verdict = checks.run_check(args.check, cfg, cfg.master_seed)
    verdict = {"schema_version": SCHEMA_VERSION, **verdict}
    text = _csv_text(fields, [[r[f] for f in fields] for r in rows])
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / f"diagnose_{args.check}.csv").write_text(text, encoding="utf-8")
        (args.out / f"diagnose_{args.check}.json").write_text(
            json.dumps(verdict, indent=2) + "\n", encoding="utf-8")
    print(json.dumps(verdict))
    return 0 if verdict["pass"] else 2


def cmd_sweep(args) -> int:
    cfg = _config(args)
    over = {}
    if args.reps:
        over["reps"] = args.reps
    if args.m_draws:
        over["m_draws"] = args.m_draws
    if args.n_schedule:
        over["n_schedule"] = list(args.n_schedule)
    if over:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), **over})
    report = run_consistency_sweep(cfg, workers=args.workers)
    out = args.out or Path(cfg.output_dir)
    for fmt in ([args.format] if args.format else FORMATS):
        for path in emit_report(report, fmt, out):
            print(path)
    return 0


COMMANDS = {"path": cmd_path, "cv": cmd_cv, "risk": cmd_risk,
            "diagnose": cmd_diagnose, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (LassoLabError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
