"""Pass/fail checks behind ``lasso-cv-lab diagnose``.

Each check returns ``(fields, rows, verdict)``: CSV columns, CSV rows and a
verdict dict ``{"check", "pass", "statistic", "threshold"}``.
"""
from __future__ import annotations

import numpy as np

from .cv import loo_paths, loo_stability
from .design import RADEMACHER, GAUSSIAN, generate_design, realize
from .diagnostics import (biii_decay, decomposition_terms, mean_convergence_probe,
                          quadratic_form_tail, sup_cv_risk_gap)
from .experiments import ExperimentConfig
from .risk import default_grid
from .seeding import derive_seed

CHECKS = ("stability", "mean", "decomp", "tail", "biii", "supgap")
SMALL_N, LARGE_N = 100, 800


def _verdict(name, ok, statistic, threshold):
    # non-finite statistics are written as null to keep the JSON valid
    stat = float(statistic) if np.isfinite(statistic) else None
    return {"check": name, "pass": bool(ok), "statistic": stat, "threshold": float(threshold)}


def _ratio(num, den):
    """``num / den``, or nan when the trend is degenerate (zero at the small size)."""
    return num / den if den > 0 else np.nan


def _trend(name, config, seed, fn):
    rows = []
    med = {}
    for n in (SMALL_N, LARGE_N):
        design = generate_design(config.design_spec(n))
        vals = [fn(design, n, r) for r in range(config.reps)]
        rows += [{"n": n, "rep": r, "value": v} for r, v in enumerate(vals)]
        med[n] = float(np.median(vals))
    ratio = _ratio(med[LARGE_N], med[SMALL_N])
    return ("n", "rep", "value"), rows, _verdict(name, ratio <= 0.5, ratio, 0.5)


def check_stability(config: ExperimentConfig, seed: int):
    truth = config.truth

    def one(design, n, r):
        return loo_stability(realize(design, truth, derive_seed(seed, n, r, "stability")))

    return _trend("stability", config, seed, one)


def _probe_grid(config, seed):
    design = generate_design(config.design_spec(SMALL_N))
    data = realize(design, config.truth, derive_seed(seed, "grid"))
    top = loo_paths(data).lambda_top
    return default_grid(top, size=50)


def check_mean(config: ExperimentConfig, seed: int):
    truth, grid = config.truth, _probe_grid(config, seed)

    def one(design, n, r):
        probe = mean_convergence_probe(design, truth, grid, config.m_draws,
                                       derive_seed(seed, n, r, "mean"))
        return probe.sup_deviation

    return _trend("mean", config, seed, one)


def check_supgap(config: ExperimentConfig, seed: int):
    truth = config.truth

    def one(design, n, r):
        return sup_cv_risk_gap(design, truth, config.m_draws,
                               derive_seed(seed, n, r, "supgap")).value

    return _trend("supgap", config, seed, one)


def check_decomp(config: ExperimentConfig, seed: int, instances: int = 10, n_lambdas: int = 20):
    truth = config.truth
    design = generate_design(config.design_spec(SMALL_N))
    rows = []
    for k in range(instances):
        s = derive_seed(seed, k, "decomp")
        top = loo_paths(realize(design, truth, derive_seed(s, "data"))).lambda_top
        lams = np.linspace(0.0, top, n_lambdas)
        for rec in decomposition_terms(design, truth, lams, config.m_draws, s):
            rows.append({"instance": k, "lambda": rec.lam, "lhs": rec.lhs,
                         "term_a": rec.term_a, "term_b": rec.term_b, "term_c": rec.term_c,
                         "combined_se": rec.combined_se, "slack": rec.slack})
    worst = min(r["slack"] for r in rows)
    fields = ("instance", "lambda", "lhs", "term_a", "term_b", "term_c", "combined_se", "slack")
    return fields, rows, _verdict("decomp", worst >= 0, worst, 0.0)


def check_tail(config: ExperimentConfig, seed: int, n: int = 100, trials: int = 100_000):
    rows = []
    worst = -np.inf
    for noise in (GAUSSIAN, RADEMACHER):
        rep = quadratic_form_tail(noise, n, 0.0, [1.0, 2.0, 4.0], trials,
                                  derive_seed(seed, "tail", noise.kind.value))
        allow = rep.monte_carlo_allowance()
        for k, t in enumerate(rep.t_values):
            excess = rep.empirical_exceedance[k] - rep.analytic_bound[k] - allow[k]
            worst = max(worst, excess)
            rows.append({"noise": noise.kind.value, "t": t,
                         "exceedance": rep.empirical_exceedance[k],
                         "bound": rep.analytic_bound[k], "allowance": allow[k],
                         "simple_eps": rep.simple_eps[k],
                         "simple_bound": rep.simple_bound[k],
                         "simple_exceedance": rep.simple_exceedance[k]})
    fields = ("noise", "t", "exceedance", "bound", "allowance", "simple_eps",
              "simple_bound", "simple_exceedance")
    return fields, rows, _verdict("tail", worst <= 0, worst, 0.0)


def check_biii(config: ExperimentConfig, seed: int):
    rep = biii_decay(config.design, config.p, config.truth, (SMALL_N, LARGE_N),
                     config.reps, derive_seed(seed, "biii"))
    rows = [{"n": n, "rep": r, "value": rep.raw[a, r]}
            for a, n in enumerate(rep.n_values) for r in range(rep.raw.shape[1])]
    m_small, m_large = rep.medians
    ratio = np.inf if m_large == 0 < m_small else _ratio(m_small, m_large)
    return ("n", "rep", "value"), rows, _verdict("biii", ratio > 2, ratio, 2.0)


def run_check(name: str, config: ExperimentConfig, seed: int):
    fn = {
        "stability": check_stability,
        "mean": check_mean,
        "decomp": check_decomp,
        "tail": check_tail,
        "biii": check_biii,
        "supgap": check_supgap,
    }[name]
    return fn(config, seed)
