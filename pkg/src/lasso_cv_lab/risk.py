"""Monte-Carlo estimate of the predictive risk ``E||theta(lam) - theta||_C^2 + sigma^2``.

Each replicate ``m`` draws its noise from the child seed
``derive_seed(seed, "draw", m)`` and computes one full lasso path; every
lambda on a grid is then evaluated on the same draws (common random numbers).
Reductions run in ascending replicate order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import DesignMatrix, GroundTruth, sample_noise
from .lasso import homotopy_from_gram
from .seeding import derive_seed

_TIE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class RiskCurve:
    lambdas: np.ndarray
    estimates: np.ndarray
    std_errors: np.ndarray
    lambda_star: float
    m_draws: int
    seed: int
    design: DesignMatrix
    truth: GroundTruth
    paths: tuple  # one lasso path per replicate, reused for any lambda

    @property
    def risk_at_star(self) -> float:
        return float(self.estimates[np.searchsorted(self.lambdas, self.lambda_star)])

    def losses(self, lams) -> np.ndarray:
        """Per-replicate ``||theta_m(lam) - theta||_C^2``, shape ``(m_draws, len(lams))``."""
        return _losses(self.paths, self.design, self.truth, lams)

    def evaluate(self, lams):
        """Risk estimates and standard errors at arbitrary lambdas, on the same draws."""
        L = self.losses(lams)
        return L.mean(axis=0) + self.truth.sigma ** 2, _sem(L)


def _sem(values: np.ndarray) -> np.ndarray:
    m = values.shape[0]
    return values.std(axis=0, ddof=1) / np.sqrt(m)


def _losses(paths, design, truth, lams) -> np.ndarray:
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    C = design.gram
    out = np.empty((len(paths), lams.size))
    for m, P in enumerate(paths):
        d = P.evaluate(lams) - truth.theta
        out[m] = np.einsum("lj,jk,lk->l", d, C, d)
    return out


def draw_paths(design: DesignMatrix, truth: GroundTruth, m_draws: int, seed: int) -> tuple:
    X = design.rows
    n = design.n
    XtX = n * design.gram
    mean = X @ truth.theta
    paths = []
    for m in range(m_draws):
        W = sample_noise(truth.noise, n, derive_seed(seed, "draw", m))
        y = mean + truth.sigma * W
        paths.append(homotopy_from_gram(XtX, X.T @ y, n))
    return tuple(paths)


def grid_argmin(lams: np.ndarray, values: np.ndarray) -> float:
    """Largest lambda attaining the minimum."""
    best = values.min()
    tied = values <= best + _TIE_RTOL * abs(best)
    return float(np.asarray(lams)[tied].max())


def default_grid(lambda_top: float, knots=(), size: int = 100) -> np.ndarray:
    """``{0}``, a geometric grid on ``(0, lambda_top]`` and any knots inside it."""
    geo = np.geomspace(lambda_top * 1e-4, lambda_top, size - 1)
    knots = np.asarray(knots, dtype=float)
    knots = knots[(knots >= 0) & (knots <= lambda_top)]
    return np.unique(np.concatenate([[0.0], geo, knots]))


def risk_curve(design: DesignMatrix, truth: GroundTruth, lambda_grid, m_draws: int,
               seed: int) -> RiskCurve:
    if m_draws < 2:
        raise ValueError("m_draws must be >= 2")
    lams = np.asarray(lambda_grid, dtype=float)
    if lams.size == 0:
        raise ValueError("empty lambda grid")
    if np.any(np.diff(lams) < 0):
        raise ValueError("lambda grid must be sorted")
    paths = draw_paths(design, truth, m_draws, seed)
    L = _losses(paths, design, truth, lams)
    est = L.mean(axis=0) + truth.sigma ** 2
    return RiskCurve(
        lambdas=lams,
        estimates=est,
        std_errors=_sem(L),
        lambda_star=grid_argmin(lams, est),
        m_draws=m_draws,
        seed=seed,
        design=design,
        truth=truth,
        paths=paths,
    )


def risk_at(design: DesignMatrix, truth: GroundTruth, lam: float, m_draws: int,
            seed: int) -> tuple:
    curve = risk_curve(design, truth, [lam], m_draws, seed)
    return float(curve.estimates[0]), float(curve.std_errors[0])


@dataclass(frozen=True)
class RiskGap:
    gap: float
    std_error: float
    risk_at_hat: float
    risk_at_star: float


def risk_gap(curve: RiskCurve, lambda_hat: float) -> RiskGap:
    """Paired estimate of ``R(lambda_hat) - R(lambda_star)`` on the curve's draws."""
    if lambda_hat < 0:
        raise ValueError("lambda_hat must be nonnegative")
    L = curve.losses([lambda_hat, curve.lambda_star])
    diff = L[:, 0] - L[:, 1]
    s2 = curve.truth.sigma ** 2
    return RiskGap(
        gap=float(diff.mean()),
        std_error=float(_sem(diff[:, None])[0]),
        risk_at_hat=float(L[:, 0].mean() + s2),
        risk_at_star=float(L[:, 1].mean() + s2),
    )
