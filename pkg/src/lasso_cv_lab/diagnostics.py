"""Empirical checks of the ingredients behind CV risk consistency.

All routines are pure functions of their inputs and seed.  Expectations are
replaced by Monte-Carlo means over replicates drawn with
:func:`lasso_cv_lab.risk.draw_paths`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cv import CvCurve, cv_curve, loo_ols_all, loo_paths, loo_stability
from .design import (DesignFamily, DesignMatrix, DesignSpec, GroundTruth, NoiseFamily,
                     generate_design, realize, sample_noise)
from .risk import RiskCurve, _sem, default_grid, draw_paths, risk_curve
from .seeding import derive_seed

__all__ = [
    "loo_stability",
    "mean_convergence_probe",
    "decomposition_terms",
    "quadratic_form_tail",
    "biii_decay",
    "sup_cv_risk_gap",
    "sup_gap_between",
]


@dataclass(frozen=True)
class MeanProbe:
    sup_deviation: float
    per_lambda: np.ndarray  # max_j |theta_j(lam) - mean_j(lam)|
    weighted: np.ndarray  # ||theta(lam) - mean(lam)||_C^2
    lambdas: np.ndarray


def mean_convergence_probe(design: DesignMatrix, truth: GroundTruth, lambda_grid,
                           m_draws: int, seed: int) -> MeanProbe:
    """Deviation of one fresh path from the Monte-Carlo mean path."""
    if m_draws < 2:
        raise ValueError("m_draws must be >= 2")
    lams = np.asarray(lambda_grid, dtype=float)
    paths = draw_paths(design, truth, m_draws, derive_seed(seed, "mean"))
    mean = np.zeros((lams.size, design.p))
    for P in paths:
        mean += P.evaluate(lams)
    mean /= m_draws
    fresh = draw_paths(design, truth, 1, derive_seed(seed, "heldout"))[0].evaluate(lams)
    d = fresh - mean
    per = np.abs(d).max(axis=1)
    weighted = np.einsum("lj,jk,lk->l", d, design.gram, d)
    return MeanProbe(float(per.max(initial=0.0)), per, weighted, lams)


@dataclass(frozen=True)
class DecompositionRecord:
    lam: float
    term_a: float
    term_b: float
    term_c: float
    lhs: float
    se_a: float
    se_b: float
    se_lhs: float

    @property
    def combined_se(self) -> float:
        return math.sqrt(self.se_a ** 2 + self.se_b ** 2 + self.se_lhs ** 2)

    @property
    def slack(self) -> float:
        """Positive when the triangle inequality holds with 3 standard errors to spare."""
        return self.term_a + self.term_b + self.term_c + 3 * self.combined_se - self.lhs


def decomposition_terms(design: DesignMatrix, truth: GroundTruth, lambdas, m_draws: int,
                        seed: int) -> list:
    """Monte-Carlo estimates of the three pieces bounding ``|R(lam) - R_cv(lam)|``.

    (a) ``|E||X theta||^2/n - mean_i (x_i^T theta^(i))^2|``
    (b) ``2 |E (X theta)^T X theta_0 / n - mean_i y_i x_i^T theta^(i)|``
    (c) ``|theta_0^T C theta_0 + sigma^2 - mean_i y_i^2|``

    One realization supplies the data-dependent parts; ``m_draws`` fresh
    replicates supply the expectations, shared across all three terms.
    """
    if m_draws < 2:
        raise ValueError("m_draws must be >= 2")
    lams = np.atleast_1d(np.asarray(lambdas, dtype=float))
    C, th, s2 = design.gram, truth.theta, truth.sigma ** 2

    paths = draw_paths(design, truth, m_draws, derive_seed(seed, "mc"))
    Q = np.empty((m_draws, lams.size))
    Pm = np.empty((m_draws, lams.size))
    loss = np.empty((m_draws, lams.size))
    Cth = C @ th
    for m, P in enumerate(paths):
        T = P.evaluate(lams)
        Q[m] = np.einsum("lj,jk,lk->l", T, C, T)
        Pm[m] = T @ Cth
        d = T - th
        loss[m] = np.einsum("lj,jk,lk->l", d, C, d)

    data = realize(design, truth, derive_seed(seed, "data"))
    X, y = data.X, data.y
    loo = loo_paths(data)
    preds = np.array([P.evaluate(lams) @ X[i] for i, P in enumerate(loo.paths)])  # (n, L)
    A = (preds ** 2).mean(axis=0)
    B = (y[:, None] * preds).mean(axis=0)
    ybar2 = float(np.mean(y ** 2))
    cv_value = ybar2 + A - 2 * B

    term_a = np.abs(Q.mean(axis=0) - A)
    term_b = 2 * np.abs(Pm.mean(axis=0) - B)
    term_c = abs(float(th @ Cth) + s2 - ybar2)
    lhs = np.abs(loss.mean(axis=0) + s2 - cv_value)
    se_a, se_b, se_l = _sem(Q), 2 * _sem(Pm), _sem(loss)
    return [
        DecompositionRecord(float(lams[k]), float(term_a[k]), float(term_b[k]), term_c,
                            float(lhs[k]), float(se_a[k]), float(se_b[k]), float(se_l[k]))
        for k in range(lams.size)
    ]


@dataclass(frozen=True)
class TailBoundReport:
    t_values: np.ndarray
    analytic_bound: np.ndarray  # e^{-t}
    empirical_exceedance: np.ndarray
    g_sigma: np.ndarray
    g_mu: np.ndarray
    trials: int
    mean_sq_over_n: float
    # simplified two-sided bound, reported but not asserted
    simple_eps: np.ndarray
    simple_bound: np.ndarray
    simple_exceedance: np.ndarray

    def monte_carlo_allowance(self) -> np.ndarray:
        b = self.analytic_bound
        return 3 * np.sqrt(b * (1 - b) / self.trials)


def tail_thresholds(tau: float, n: int, mu_sq: float, t):
    """``g_sigma(t)`` and ``g_mu(t)`` for ``A = I`` (``tr S = tr S^2 = n``, ``||S|| = 1``)."""
    t = np.asarray(t, dtype=float)
    g_sigma = tau ** 2 * (n + 2 * np.sqrt(n * t) + 2 * t)
    u = t / n
    g_mu = mu_sq * np.sqrt(1 + 4 * np.sqrt(u) + 4 * u)
    return g_sigma, g_mu


def quadratic_form_tail(noise: NoiseFamily, n: int, mu, t_values, trials: int, seed: int,
                        chunk: int = 10_000) -> TailBoundReport:
    """Exceedance frequencies of ``||mu + W||^2`` over the sub-Gaussian quadratic-form bound."""
    if trials < 10_000:
        raise ValueError("trials must be >= 1e4")
    mu = np.broadcast_to(np.asarray(mu, dtype=float), (n,))
    t = np.asarray(t_values, dtype=float)
    tau = noise.tau
    mu_sq = float(mu @ mu)
    g_s, g_m = tail_thresholds(tau, n, mu_sq, t)
    thresh = g_s + g_m

    delta = np.sqrt(t / n)
    eps = 2 * delta * (tau ** 2 * (1 + 2 * delta) + mu_sq / n)

    exceed = np.zeros(t.size)
    exceed4 = np.zeros(t.size)
    total = 0.0
    done, k = 0, 0
    while done < trials:
        m = min(chunk, trials - done)
        W = sample_noise(noise, m * n, derive_seed(seed, "tail", k)).reshape(m, n)
        S = ((mu + W) ** 2).sum(axis=1)
        exceed += (S[:, None] > thresh).sum(axis=0)
        exceed4 += (np.abs(S[:, None] / n - mu_sq / n - 1.0) > eps).sum(axis=0)
        total += S.sum()
        done += m
        k += 1
    return TailBoundReport(
        t_values=t,
        analytic_bound=np.exp(-t),
        empirical_exceedance=exceed / trials,
        g_sigma=g_s,
        g_mu=g_m,
        trials=trials,
        mean_sq_over_n=total / trials / n,
        simple_eps=eps,
        simple_bound=2 * np.exp(-n * eps ** 2),
        simple_exceedance=exceed4 / trials,
    )


@dataclass(frozen=True)
class BiiiReport:
    n_values: tuple
    medians: np.ndarray
    raw: np.ndarray  # (len(n_values), reps)


def biii_decay(family: DesignFamily, p: int, truth: GroundTruth, n_values, reps: int,
               seed: int) -> BiiiReport:
    """``(sigma^2 C_X / n) |sum_i W_i ||theta^(i)(0)||_1|`` across sample sizes."""
    raw = np.zeros((len(n_values), reps))
    for a, n in enumerate(n_values):
        design = generate_design(DesignSpec(family, n, p))
        for r in range(reps):
            data = realize(design, truth, derive_seed(seed, n, r, "biii"))
            fits = loo_ols_all(data)
            total = data.noise_draw @ np.abs(fits).sum(axis=1)
            raw[a, r] = truth.sigma ** 2 * design.c_x_bound / n * abs(total)
    return BiiiReport(tuple(n_values), np.median(raw, axis=1), raw)


@dataclass(frozen=True)
class SupGap:
    value: float
    lam: float
    risk_std_error: float
    lambda_top: float


def sup_gap_between(cv: CvCurve, risk: RiskCurve) -> SupGap:
    """Max of ``|R_cv(lam) - R(lam)|`` over CV breakpoints, CV vertices and the risk grid."""
    pts = np.concatenate([cv.breakpoints, cv.vertices(), risk.lambdas])
    pts = np.unique(pts[(pts >= 0) & (pts <= cv.lambda_top)])
    r_hat = cv(pts)
    r, se = risk.evaluate(pts)
    gap = np.abs(r_hat - r)
    k = int(np.argmax(gap))
    return SupGap(float(gap[k]), float(pts[k]), float(se[k]), cv.lambda_top)


def sup_cv_risk_gap(design: DesignMatrix, truth: GroundTruth, m_draws: int, seed: int,
                    grid_size: int = 100) -> SupGap:
    data = realize(design, truth, derive_seed(seed, "data"))
    loo = loo_paths(data)
    cv = cv_curve(data, loo)
    grid = default_grid(cv.lambda_top, loo.full_path.knots, grid_size)
    rc = risk_curve(design, truth, grid, m_draws, derive_seed(seed, "risk"))
    return sup_gap_between(cv, rc)
