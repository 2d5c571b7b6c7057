"""Lasso solvers for ``(1/2n)||Y - X theta||^2 + lam ||theta||_1``.

``compute_path`` follows the exact piecewise-linear solution path downward
from ``lambda_max = ||X^T Y||_inf / n`` to zero, handling both variables
entering the active set and active coefficients hitting zero.
``solve_lasso_at`` is an independent cyclic coordinate-descent solver used as
an oracle for the path.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import DegenerateTie, DimensionMismatch, NoConvergence

EVENT_TOL = 1e-12
MAX_SWEEPS = 100_000


@dataclass(frozen=True, eq=False)
class PathSegment:
    """``theta(lam) = intercept + lam * slope`` for ``lambda_lo <= lam <= lambda_hi``."""

    lambda_lo: float
    lambda_hi: float
    active_set: tuple
    signs: tuple
    intercept: np.ndarray
    slope: np.ndarray

    def at(self, lam):
        theta = self.intercept + lam * self.slope
        return _clip_signs(theta, self.active_set, self.signs)


def _clip_signs(theta, active, signs):
    # Inside a segment each active coefficient keeps its sign; rounding at
    # the segment ends is clipped back to zero.
    if len(active):
        idx = list(active)
        s = np.asarray(signs, dtype=float)
        theta[..., idx] = s * np.maximum(theta[..., idx] * s, 0.0)
    return theta


@dataclass(frozen=True, eq=False)
class LassoPath:
    knots: tuple
    segments: tuple
    lambda_max: float
    p: int
    n: int = 0
    # cached stacked arrays, ascending in lambda
    _lo: np.ndarray = field(init=False, repr=False)
    _a: np.ndarray = field(init=False, repr=False)
    _b: np.ndarray = field(init=False, repr=False)
    _sign: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        segs = self.segments[::-1]
        K = len(segs)
        a = np.zeros((K, self.p))
        b = np.zeros((K, self.p))
        sign = np.zeros((K, self.p))
        for k, s in enumerate(segs):
            a[k], b[k] = s.intercept, s.slope
            sign[k, list(s.active_set)] = s.signs
        object.__setattr__(self, "_lo", np.array([s.lambda_lo for s in segs]))
        object.__setattr__(self, "_a", a)
        object.__setattr__(self, "_b", b)
        object.__setattr__(self, "_sign", sign)

    def segment_index(self, lams) -> np.ndarray:
        """Index into ``segments`` covering each lambda; -1 at or above lambda_max."""
        lams = np.asarray(lams, dtype=float)
        K = len(self.segments)
        if K == 0:
            return np.full(lams.shape, -1, dtype=int)
        asc = np.searchsorted(self._lo, lams, side="right") - 1
        asc = np.clip(asc, 0, K - 1)
        idx = K - 1 - asc
        return np.where(lams >= self.lambda_max, -1, idx)

    def affine_at(self, lams):
        """Per-lambda ``(a, b)`` rows with ``theta = a + lam b`` (zero beyond lambda_max)."""
        lams = np.atleast_1d(np.asarray(lams, dtype=float))
        idx = self.segment_index(lams)
        K = len(self.segments)
        asc = np.where(idx < 0, 0, K - 1 - idx)
        if K == 0:
            z = np.zeros((lams.size, self.p))
            return z, z.copy()
        a, b = self._a[asc], self._b[asc]
        off = idx < 0
        a[off] = 0.0
        b[off] = 0.0
        return a, b

    def evaluate(self, lams) -> np.ndarray:
        """Path values at an array of lambdas, shape ``(len(lams), p)``."""
        lams = np.atleast_1d(np.asarray(lams, dtype=float))
        if np.any(lams < 0):
            raise ValueError("lambda must be nonnegative")
        a, b = self.affine_at(lams)
        theta = a + lams[:, None] * b
        idx = self.segment_index(lams)
        K = len(self.segments)
        if K:
            asc = np.where(idx < 0, 0, K - 1 - idx)
            s = self._sign[asc]
            theta = np.where(s != 0, s * np.maximum(theta * s, 0.0), 0.0)
            theta[idx < 0] = 0.0
        return theta

    def __call__(self, lam: float) -> np.ndarray:
        return eval_path(self, lam)

    def to_dict(self) -> dict:
        return {
            "knots": list(self.knots),
            "segments": [
                {
                    "lo": s.lambda_lo,
                    "hi": s.lambda_hi,
                    "active": list(s.active_set),
                    "signs": list(s.signs),
                    "a": s.intercept.tolist(),
                    "b": s.slope.tolist(),
                }
                for s in self.segments
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict, n: int = 0) -> "LassoPath":
        segs = tuple(
            PathSegment(
                s["lo"], s["hi"], tuple(s["active"]), tuple(s["signs"]),
                np.asarray(s["a"], dtype=float), np.asarray(s["b"], dtype=float),
            )
            for s in d["segments"]
        )
        knots = tuple(float(k) for k in d["knots"])
        p = len(segs[0].intercept) if segs else int(d.get("p", 0))
        return cls(knots, segs, knots[0] if knots else 0.0, p, n)


@dataclass(frozen=True)
class KktReport:
    max_violation: float
    per_coordinate: np.ndarray


@dataclass(frozen=True)
class LipschitzReport:
    realized_max_slope: float
    prop1_bound: float
    segment_slopes: np.ndarray
    segment_bounds: np.ndarray  # ||n (X_E^T X_E)^{-1}||_2 * sqrt(|E|) per segment


def _xy(design, response):
    X = np.asarray(getattr(design, "rows", design), dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(response, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"design has {X.shape[0]} rows, response has {y.shape[0]}")
    return X, y


def kkt_residual(design, response, lam: float, theta) -> KktReport:
    X, y = _xy(design, response)
    theta = np.asarray(theta, dtype=float)
    g = X.T @ (y - X @ theta) / X.shape[0]
    r = np.where(
        theta != 0,
        np.abs(g - lam * np.sign(theta)),
        np.maximum(0.0, np.abs(g) - lam),
    )
    return KktReport(float(r.max()) if r.size else 0.0, r)


@numba.njit(cache=True)
def _cd_kernel(G, c, lam, theta, tol, max_sweeps):
    p = c.shape[0]
    for sweep in range(max_sweeps):
        max_step = 0.0
        for j in range(p):
            rho = c[j]
            for k in range(p):
                if k != j:
                    rho -= G[j, k] * theta[k]
            if rho > lam:
                new = (rho - lam) / G[j, j]
            elif rho < -lam:
                new = (rho + lam) / G[j, j]
            else:
                new = 0.0
            step = abs(new - theta[j])
            if step > max_step:
                max_step = step
            theta[j] = new
        if max_step < tol:
            return sweep + 1
    return -1


def solve_lasso_at(design, response, lam: float, tolerance: float = 1e-10,
                   max_sweeps: int = MAX_SWEEPS) -> np.ndarray:
    """Coordinate-descent solution at a single lambda.

    Cyclic sweeps in index order from a zero start; stops once the largest
    coordinate update in a sweep is below ``tolerance / 10`` and the KKT
    residual is at most ``tolerance``.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    X, y = _xy(design, response)
    n = X.shape[0]
    G = X.T @ X / n
    c = X.T @ y / n
    theta = np.zeros(X.shape[1])
    used, step_tol = 0, tolerance / 10
    while used < max_sweeps and step_tol > 1e-300:
        done = _cd_kernel(G, c, float(lam), theta, step_tol, max_sweeps - used)
        if done < 0:
            break
        used += done
        if kkt_residual(X, y, lam, theta).max_violation <= tolerance:
            return theta
        step_tol /= 100
    raise NoConvergence(f"coordinate descent did not reach KKT tolerance {tolerance}")


def homotopy_from_gram(XtX: np.ndarray, Xty: np.ndarray, n: int) -> LassoPath:
    """Exact lasso path from sufficient statistics ``X^T X`` and ``X^T y``."""
    XtX = np.asarray(XtX, dtype=float)
    Xty = np.asarray(Xty, dtype=float)
    p = Xty.shape[0]
    corr0 = np.abs(Xty) / n
    lam_max = float(corr0.max()) if p else 0.0
    if lam_max <= 0.0:
        return LassoPath((0.0,), (), 0.0, p, n)

    order = np.argsort(-corr0, kind="stable")
    if p > 1 and corr0[order[0]] - corr0[order[1]] <= EVENT_TOL:
        raise DegenerateTie(f"variables {order[0]} and {order[1]} enter together at {lam_max}")
    j0 = int(order[0])
    active = [j0]
    signs = [1.0 if Xty[j0] > 0 else -1.0]
    lam = lam_max
    knots = [lam_max]
    segments = []
    just_entered, just_dropped, dropped_sign = j0, None, 0.0
    max_steps = 50 * p + 100

    for _ in range(max_steps):
        E = np.array(active)
        s = np.array(signs)
        fac = cho_factor(XtX[np.ix_(E, E)])
        aE = cho_solve(fac, Xty[E])
        bE = -n * cho_solve(fac, s)
        a = np.zeros(p)
        b = np.zeros(p)
        a[E], b[E] = aE, bE
        # inactive correlations c(lam) = alpha + lam * beta
        alpha = (Xty - XtX[:, E] @ aE) / n
        beta = -(XtX[:, E] @ bE) / n

        events = []  # (lambda, kind, index, sign)
        for k, j in enumerate(active):
            if j == just_entered or bE[k] == 0.0:
                continue
            t = -aE[k] / bE[k]
            if 0.0 < t < lam:
                events.append((t, "drop", j, 0.0))
        inactive = np.setdiff1d(np.arange(p), E)
        for j in inactive:
            for sg in (1.0, -1.0):
                if j == just_dropped and sg == dropped_sign:
                    continue
                den = sg - beta[j]
                if den == 0.0:
                    continue
                t = alpha[j] / den
                if 0.0 < t < lam:
                    events.append((t, "add", int(j), sg))

        events.sort(key=lambda e: -e[0])
        if events and events[0][0] > EVENT_TOL:
            nxt = events[0]
            if len(events) > 1 and nxt[0] - events[1][0] <= EVENT_TOL:
                raise DegenerateTie(
                    f"events {nxt[1:3]} and {events[1][1:3]} coincide near lambda={nxt[0]}"
                )
            lam_next = nxt[0]
        else:
            nxt = None
            lam_next = 0.0

        segments.append(PathSegment(lam_next, lam, tuple(active), tuple(signs), a, b))
        knots.append(lam_next)
        if nxt is None:
            return LassoPath(tuple(knots), tuple(segments), lam_max, p, n)

        lam = lam_next
        _, kind, j, sg = nxt
        if kind == "add":
            active.append(j)
            signs.append(sg)
            just_entered, just_dropped = j, None
        else:
            k = active.index(j)
            dropped_sign = signs[k]
            del active[k]
            del signs[k]
            just_entered, just_dropped = None, j
            if not active:
                # every coefficient returned to zero; re-enter from scratch
                corr = np.abs(Xty) / n
                raise DegenerateTie(f"active set emptied at lambda={lam} (max corr {corr.max()})")
        order_idx = np.argsort(active, kind="stable")
        active = [active[i] for i in order_idx]
        signs = [signs[i] for i in order_idx]
    raise NoConvergence("homotopy exceeded its step budget")


def compute_path(design, response) -> LassoPath:
    X, y = _xy(design, response)
    return homotopy_from_gram(X.T @ X, X.T @ y, X.shape[0])


def eval_path(path: LassoPath, lam: float) -> np.ndarray:
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return path.evaluate([lam])[0]


def lipschitz_diagnostic(path: LassoPath, design) -> LipschitzReport:
    X = np.asarray(getattr(design, "rows", design), dtype=float)
    n = X.shape[0]
    XtX = X.T @ X
    slopes, bounds, op_norms = [], [], {}
    for seg in path.segments:
        E = seg.active_set
        if E not in op_norms:
            inv = np.linalg.inv(XtX[np.ix_(E, E)])
            op_norms[E] = float(np.linalg.norm(n * inv, 2))
        slopes.append(float(np.linalg.norm(seg.slope)))
        bounds.append(op_norms[E] * np.sqrt(len(E)))
    return LipschitzReport(
        realized_max_slope=max(slopes, default=0.0),
        prop1_bound=max(op_norms.values(), default=0.0),
        segment_slopes=np.array(slopes),
        segment_bounds=np.array(bounds),
    )
