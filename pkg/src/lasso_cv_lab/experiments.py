"""Consistency sweep over growing sample sizes and its report formats.

For every ``(n, rep)`` the sweep realizes one dataset, picks ``lambda_hat``
by exact leave-one-out CV, estimates the risk curve on fresh draws, and
records the paired risk gap together with the stability diagnostics.
Child seeds are ``derive_seed(master_seed, n, rep, purpose)`` so a record
never depends on how many other records the sweep contains.
"""
from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .cv import cv_curve, loo_paths, loo_stability
from .design import (BoundedBall, DesignSpec, GroundTruth, NoiseFamily, ReplicatedBlock,
                     ScaledOrthogonal, generate_design, realize)
from .diagnostics import sup_gap_between
from .errors import IoFailure, LassoLabError
from .lasso import lipschitz_diagnostic
from .risk import default_grid, risk_curve, risk_gap
from .seeding import derive_seed, rng

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

RECORD_FIELDS = (
    "n", "rep", "seed", "lambda_hat", "lambda_star", "lambda_top",
    "risk_at_hat", "risk_at_star", "risk_gap", "risk_gap_se",
    "sup_gap", "sup_gap_se", "loo_stability", "lipschitz_bound",
    "realized_max_slope", "slope_bound_ratio",
)
AGGREGATE_FIELDS = (
    "n", "count", "median_gap", "q25_gap", "q75_gap",
    "median_supgap", "q25_supgap", "q75_supgap", "median_stability",
)
PLOTDATA_FIELDS = ("n", "median_gap", "q25", "q75", "median_supgap")


def family_to_dict(fam) -> dict:
    if isinstance(fam, ReplicatedBlock):
        return {"family": "replicated_block", "base_rows": [list(r) for r in fam.base_rows]}
    if isinstance(fam, BoundedBall):
        return {"family": "bounded_ball", "radius": fam.radius, "seed": fam.seed}
    return {"family": "scaled_orthogonal", "seed": fam.seed}


def family_from_dict(d: dict):
    kind = d["family"]
    if kind == "replicated_block":
        return ReplicatedBlock(d["base_rows"])
    if kind == "bounded_ball":
        return BoundedBall(float(d["radius"]), int(d.get("seed", 0)))
    if kind == "scaled_orthogonal":
        return ScaledOrthogonal(d.get("seed"))
    raise ValueError(f"unknown design family {kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    design: object  # a design family
    n_schedule: tuple
    p: int
    theta: tuple
    sigma: float = 1.0
    noise: str = "gaussian"
    reps: int = 20
    m_draws: int = 200
    master_seed: int = 0
    output_dir: str = "results"
    grid_size: int = 100

    def __post_init__(self):
        sched = tuple(int(n) for n in self.n_schedule)
        object.__setattr__(self, "n_schedule", sched)
        object.__setattr__(self, "theta", tuple(float(t) for t in self.theta))
        if any(b <= a for a, b in zip(sched, sched[1:])):
            raise ValueError("n_schedule must be strictly increasing")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if len(self.theta) != self.p:
            raise ValueError("theta must have length p")
        NoiseFamily(self.noise)

    @property
    def truth(self) -> GroundTruth:
        return GroundTruth(np.array(self.theta), self.sigma, NoiseFamily(self.noise))

    def design_spec(self, n: int) -> DesignSpec:
        return DesignSpec(self.design, n, self.p)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["design"] = family_to_dict(self.design)
        d["n_schedule"] = list(self.n_schedule)
        d["theta"] = list(self.theta)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        d["design"] = family_from_dict(d["design"])
        known = cls.__dataclass_fields__
        return cls(**{k: v for k, v in d.items() if k in known})

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def default_base_rows(m: int = 10, p: int = 5, radius: float = 2.0, seed: int = 2013):
    """``m`` fixed rows in ``R^p`` with norms spread over ``[radius/2, radius]``."""
    g = rng(seed)
    z = g.standard_normal((m, p))
    scale = radius * g.uniform(0.5, 1.0, size=m)
    return z / np.linalg.norm(z, axis=1, keepdims=True) * scale[:, None]


def default_config(**overrides) -> ExperimentConfig:
    cfg = dict(
        design=ReplicatedBlock(default_base_rows()),
        n_schedule=(50, 100, 200, 400, 800),
        p=5,
        theta=(1.0, -1.0, 0.5, 0.0, 0.0),
        sigma=1.0,
        noise="gaussian",
        reps=20,
        m_draws=200,
        master_seed=0,
    )
    cfg.update(overrides)
    return ExperimentConfig(**cfg)


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    records: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    aggregates: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "records": self.records,
            "failures": self.failures,
            "aggregates": self.aggregates,
        }


def run_record(config: ExperimentConfig, n: int, rep: int) -> dict:
    design = generate_design(config.design_spec(n))
    truth = config.truth
    seed = derive_seed(config.master_seed, n, rep, "data")
    data = realize(design, truth, seed)
    loo = loo_paths(data)
    cv = cv_curve(data, loo)
    grid = default_grid(cv.lambda_top, loo.full_path.knots, config.grid_size)
    rc = risk_curve(design, truth, grid, config.m_draws,
                    derive_seed(config.master_seed, n, rep, "risk"))
    gap = risk_gap(rc, cv.lambda_hat)
    sup = sup_gap_between(cv, rc)
    lip = lipschitz_diagnostic(loo.full_path, design)
    ratio = lip.segment_slopes / lip.segment_bounds if lip.segment_bounds.size else np.zeros(1)
    return {
        "n": n,
        "rep": rep,
        "seed": seed,
        "lambda_hat": cv.lambda_hat,
        "lambda_star": rc.lambda_star,
        "lambda_top": cv.lambda_top,
        "risk_at_hat": gap.risk_at_hat,
        "risk_at_star": gap.risk_at_star,
        "risk_gap": gap.gap,
        "risk_gap_se": gap.std_error,
        "sup_gap": sup.value,
        "sup_gap_se": sup.risk_std_error,
        "loo_stability": loo_stability(loo),
        "lipschitz_bound": lip.prop1_bound,
        "realized_max_slope": lip.realized_max_slope,
        "slope_bound_ratio": float(ratio.max()),
    }


def _job(args):
    config, n, rep = args
    try:
        return run_record(config, n, rep), None
    except LassoLabError as exc:
        seed = derive_seed(config.master_seed, n, rep, "data")
        return None, {"n": n, "rep": rep, "seed": seed, "error": f"{type(exc).__name__}: {exc}"}


def aggregate(records) -> list:
    out = []
    for n in sorted({r["n"] for r in records}):
        rows = [r for r in records if r["n"] == n]
        gap = np.array([r["risk_gap"] for r in rows])
        sup = np.array([r["sup_gap"] for r in rows])
        stab = np.array([r["loo_stability"] for r in rows])
        q_gap = np.percentile(gap, [25, 50, 75])
        q_sup = np.percentile(sup, [25, 50, 75])
        out.append({
            "n": n,
            "count": len(rows),
            "median_gap": float(q_gap[1]),
            "q25_gap": float(q_gap[0]),
            "q75_gap": float(q_gap[2]),
            "median_supgap": float(q_sup[1]),
            "q25_supgap": float(q_sup[0]),
            "q75_supgap": float(q_sup[2]),
            "median_stability": float(np.median(stab)),
        })
    return out


def run_consistency_sweep(config: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    jobs = [(config, n, rep) for n in config.n_schedule for rep in range(config.reps)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]
    report = ExperimentReport(config)
    for record, failure in results:
        if failure is not None:
            log.warning("skipped n=%d rep=%d seed=%d: %s", failure["n"], failure["rep"],
                        failure["seed"], failure["error"])
            report.failures.append(failure)
        else:
            report.records.append(record)
    report.aggregates = aggregate(report.records)
    return report


def _write_csv(path: Path, fields, rows) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(f"# schema_version={SCHEMA_VERSION}\n")
        writer = csv.DictWriter(fh, fieldnames=list(fields), extrasaction="ignore",
                                lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def _parse(key, text):
    if key in ("n", "rep", "seed", "count", "instance"):
        return int(text)
    try:
        return float(text)
    except ValueError:
        return text


def read_csv(path) -> list:
    """Rows of a CSV written by this package, with numbers parsed."""
    with Path(path).open(encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return [{k: _parse(k, v) for k, v in row.items()} for row in csv.DictReader(lines)]


def emit_report(report: ExperimentReport, fmt: str, out_dir) -> list:
    """Write ``records.csv``, ``report.json`` or ``plotdata.csv`` (+ ``sweep.png``)."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if fmt == "csv":
            path = out / "records.csv"
            _write_csv(path, RECORD_FIELDS, report.records)
            return [path]
        if fmt == "json":
            path = out / "report.json"
            path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
            return [path]
        if fmt == "plotdata":
            path = out / "plotdata.csv"
            rows = [
                {"n": a["n"], "median_gap": a["median_gap"], "q25": a["q25_gap"],
                 "q75": a["q75_gap"], "median_supgap": a["median_supgap"]}
                for a in report.aggregates
            ]
            _write_csv(path, PLOTDATA_FIELDS, rows)
            from .plotting import plot_sweep

            fig_path = out / "sweep.png"
            plot_sweep(report.aggregates, fig_path)
            return [path, fig_path]
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    raise ValueError(f"unknown format {fmt!r}")
