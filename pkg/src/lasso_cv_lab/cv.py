"""Exact leave-one-out cross-validation for the lasso.

Every leave-one-out path is piecewise linear in lambda, so on each interval
between consecutive merged knots each held-out residual is affine in lambda
and the CV risk is an explicit quadratic.  The curve is stored interval by
interval and minimized in closed form.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import Dataset
from .errors import RankDeficientFold, SingularDowndate
from .lasso import LassoPath, homotopy_from_gram
from .seeding import rng

TOP_MARGIN = 1.01
_FOLD_RANK_RTOL = 1e-10
_TIE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class LooPathSet:
    paths: tuple
    merged_knots: np.ndarray  # strictly decreasing, ends at 0
    full_path: LassoPath
    lambda_top: float


@dataclass(frozen=True, eq=False)
class CvCurve:
    """Piecewise-quadratic LOO risk.

    ``quad_coeffs[k] = (q0, q1, q2)`` gives ``q0 + q1 lam + q2 lam^2`` on
    ``[breakpoints[k + 1], breakpoints[k]]``; breakpoints decrease from
    ``lambda_top`` to 0.
    """

    breakpoints: np.ndarray
    quad_coeffs: np.ndarray
    lambda_hat: float
    min_value: float
    lambda_top: float

    def _interval(self, lams):
        asc = self.breakpoints[::-1]
        K = len(self.quad_coeffs)
        k_asc = np.clip(np.searchsorted(asc, lams, side="right") - 1, 0, K - 1)
        return K - 1 - k_asc

    def __call__(self, lams):
        scalar = np.ndim(lams) == 0
        lams = np.atleast_1d(np.asarray(lams, dtype=float))
        # beyond lambda_top every fit is zero and the curve is constant
        clipped = np.minimum(lams, self.lambda_top)
        q = self.quad_coeffs[self._interval(clipped)]
        val = q[:, 0] + clipped * (q[:, 1] + clipped * q[:, 2])
        return float(val[0]) if scalar else val

    def vertices(self) -> np.ndarray:
        """Interior minimizers of the interval quadratics."""
        q0, q1, q2 = self.quad_coeffs.T
        hi, lo = self.breakpoints[:-1], self.breakpoints[1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            v = -q1 / (2 * q2)
        keep = (q2 > 0) & (v > lo) & (v < hi)
        return np.sort(v[keep])[::-1]


def _check_fold(gram: np.ndarray) -> None:
    ev = np.linalg.eigvalsh(gram)
    if ev[0] <= _FOLD_RANK_RTOL * max(ev[-1], 1e-300):
        raise RankDeficientFold("training design without the held-out rows is rank deficient")


def loo_paths(dataset: Dataset) -> LooPathSet:
    X, y = dataset.X, dataset.y
    n = X.shape[0]
    if n < 2:
        raise ValueError("leave-one-out needs n >= 2")
    XtX = X.T @ X
    Xty = X.T @ y
    full = homotopy_from_gram(XtX, Xty, n)
    paths = []
    for i in range(n):
        x = X[i]
        G = XtX - np.outer(x, x)
        _check_fold(G)
        paths.append(homotopy_from_gram(G, Xty - x * y[i], n - 1))
    knots = np.concatenate([np.asarray(full.knots)] + [np.asarray(P.knots) for P in paths])
    top = max(P.lambda_max for P in paths + [full]) * TOP_MARGIN
    if top <= 0.0:
        # all-zero fits (zero response); any positive top works
        top = 1.0
    merged = np.unique(np.concatenate([knots, [0.0, top]]))[::-1]
    return LooPathSet(tuple(paths), merged, full, float(top))


def _quad_coefficients(dataset: Dataset, loo: LooPathSet) -> np.ndarray:
    X, y = dataset.X, dataset.y
    bp = loo.merged_knots
    mids = 0.5 * (bp[:-1] + bp[1:])
    coeffs = np.zeros((len(mids), 3))
    for i, P in enumerate(loo.paths):
        a, b = P.affine_at(mids)
        u = y[i] - a @ X[i]
        v = -(b @ X[i])
        coeffs[:, 0] += u * u
        coeffs[:, 1] += 2 * u * v
        coeffs[:, 2] += v * v
    return coeffs / len(loo.paths)


def _minimize(breakpoints, coeffs):
    hi, lo = breakpoints[:-1], breakpoints[1:]
    q0, q1, q2 = coeffs.T
    cand = [lo, hi]
    with np.errstate(divide="ignore", invalid="ignore"):
        v = -q1 / (2 * q2)
    inside = (q2 > 0) & (v > lo) & (v < hi)
    cand.append(np.where(inside, v, lo))
    lam = np.concatenate(cand)
    rep = np.tile(coeffs, (3, 1))
    val = rep[:, 0] + lam * (rep[:, 1] + lam * rep[:, 2])
    best = val.min()
    tied = val <= best + _TIE_RTOL * abs(best)
    return float(lam[tied].max()), float(best)


def cv_curve(dataset: Dataset, loo: LooPathSet | None = None) -> CvCurve:
    if loo is None:
        loo = loo_paths(dataset)
    coeffs = _quad_coefficients(dataset, loo)
    lam_hat, best = _minimize(loo.merged_knots, coeffs)
    return CvCurve(loo.merged_knots, coeffs, lam_hat, best, loo.lambda_top)


def argmin_cv(curve: CvCurve) -> float:
    """Largest global minimizer of the CV curve on ``[0, lambda_top]``."""
    return _minimize(curve.breakpoints, curve.quad_coeffs)[0]


def loo_stability(data) -> float:
    """``max_i sup_lam ||theta(lam) - theta^(i)(lam)||_2`` over ``[0, lambda_top]``.

    The difference of two paths is affine between merged knots, so its norm
    is convex there and the supremum is attained at a merged knot.
    """
    loo = data if isinstance(data, LooPathSet) else loo_paths(data)
    bp = loo.merged_knots
    full = loo.full_path.evaluate(bp)
    return max(
        (float(np.linalg.norm(full - P.evaluate(bp), axis=1).max()) for P in loo.paths),
        default=0.0,
    )


def loo_ols_rank_one(dataset: Dataset, i: int) -> np.ndarray:
    """Least-squares fit without observation ``i`` via a Sherman-Morrison downdate."""
    X, y = dataset.X, dataset.y
    A = np.linalg.inv(X.T @ X)
    x = X[i]
    Ax = A @ x
    denom = 1.0 - x @ Ax
    if denom <= 1e-12:
        raise SingularDowndate(f"1 - h_ii = {denom} for observation {i}")
    A_i = A + np.outer(Ax, Ax) / denom
    return A_i @ (X.T @ y - x * y[i])


def loo_ols_all(dataset: Dataset) -> np.ndarray:
    """All leave-one-out least-squares fits, shape ``(n, p)``."""
    X, y = dataset.X, dataset.y
    A = np.linalg.inv(X.T @ X)
    theta = A @ (X.T @ y)
    AX = X @ A  # rows are (A x_i)^T
    h = np.einsum("ij,ij->i", AX, X)
    denom = 1.0 - h
    if np.any(denom <= 1e-12):
        raise SingularDowndate("some leverage equals one")
    resid = y - X @ theta
    return theta - AX * (resid / denom)[:, None]


def loo_ols_appendix(dataset: Dataset, i: int) -> np.ndarray:
    """``theta(0) - C x_i y_i + C x_i x_i^T theta(0)`` with ``C = 1/(n - ||x_i||^2)``.

    Only exact when ``X^T X = n I``.
    """
    X, y = dataset.X, dataset.y
    n = X.shape[0]
    theta = np.linalg.lstsq(X, y, rcond=None)[0]
    x = X[i]
    C = 1.0 / (n - x @ x)
    return theta - C * x * y[i] + C * x * (x @ theta)


def kfold_splits(n: int, K: int, seed: int | None = 0) -> list:
    if not 2 <= K <= n:
        raise ValueError("need 2 <= K <= n")
    order = np.arange(n) if seed is None else rng(seed).permutation(n)
    return np.array_split(order, K)


def kfold_fold_errors(dataset: Dataset, K: int, lambda_grid, seed: int | None = 0) -> np.ndarray:
    """Sum of squared held-out errors per fold, shape ``(K, len(lambda_grid))``."""
    X, y = dataset.X, dataset.y
    lams = np.asarray(lambda_grid, dtype=float)
    XtX, Xty = X.T @ X, X.T @ y
    out = np.zeros((K, lams.size))
    for k, fold in enumerate(kfold_splits(len(y), K, seed)):
        Xf, yf = X[fold], y[fold]
        G = XtX - Xf.T @ Xf
        _check_fold(G)
        path = homotopy_from_gram(G, Xty - Xf.T @ yf, len(y) - len(fold))
        pred = path.evaluate(lams) @ Xf.T  # (grid, fold)
        out[k] = ((yf[None, :] - pred) ** 2).sum(axis=1)
    return out


def kfold_curve(dataset: Dataset, K: int, lambda_grid, seed: int | None = 0) -> list:
    errs = kfold_fold_errors(dataset, K, lambda_grid, seed)
    total = errs.sum(axis=0) / dataset.n
    return list(zip(np.asarray(lambda_grid, dtype=float).tolist(), total.tolist()))
