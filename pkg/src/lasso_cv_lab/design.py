"""Fixed designs, ground truth and noise for the model ``Y = X theta + sigma W``.

Three design families are provided:

* ``ReplicatedBlock`` cycles a fixed set of base rows, so the normalized Gram
  matrix equals the average base-row outer product for every block multiple.
* ``BoundedBall`` draws rows uniformly from a ball of radius ``C_X``; the
  design for ``n`` rows is a prefix of the design for any larger ``n``.
* ``ScaledOrthogonal`` cycles the rows of a (possibly rotated) orthogonal
  matrix scaled by ``sqrt(p)``, giving ``X^T X = n I``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np

from .errors import BadBlockSize, DimensionMismatch, RankDeficient
from .seeding import rng

_RANK_RTOL = 1e-10


@dataclass(frozen=True)
class ReplicatedBlock:
    base_rows: tuple

    def __post_init__(self):
        rows = np.atleast_2d(np.asarray(self.base_rows, dtype=float))
        object.__setattr__(self, "base_rows", tuple(map(tuple, rows)))

    @property
    def block(self) -> np.ndarray:
        return np.asarray(self.base_rows, dtype=float)


@dataclass(frozen=True)
class BoundedBall:
    radius: float
    seed: int = 0

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError("radius must be positive and finite")


@dataclass(frozen=True)
class ScaledOrthogonal:
    # None keeps the coordinate axes; a seed applies a random rotation.
    seed: Optional[int] = None


DesignFamily = Union[ReplicatedBlock, BoundedBall, ScaledOrthogonal]


@dataclass(frozen=True)
class DesignSpec:
    family: DesignFamily
    n: int
    p: int


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    rows: np.ndarray
    c_x_bound: float
    gram: np.ndarray = field(repr=False)

    @classmethod
    def from_rows(cls, rows, c_x_bound: float | None = None) -> "DesignMatrix":
        X = np.array(rows, dtype=float, ndmin=2)
        if c_x_bound is None:
            c_x_bound = float(np.max(np.linalg.norm(X, axis=1)))
        _check_rank(X, RankDeficient)
        X.setflags(write=False)
        gram = gram_matrix(X)
        gram.setflags(write=False)
        return cls(rows=X, c_x_bound=float(c_x_bound), gram=gram)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def p(self) -> int:
        return self.rows.shape[1]

    @property
    def min_eig(self) -> float:
        return float(np.linalg.eigvalsh(self.gram)[0])

    @property
    def row_norms(self) -> np.ndarray:
        return np.linalg.norm(self.rows, axis=1)


class NoiseKind(str, Enum):
    GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"
    UNIFORM = "uniform"


_TAU = {NoiseKind.GAUSSIAN: 1.0, NoiseKind.RADEMACHER: 1.0, NoiseKind.UNIFORM: math.sqrt(3.0)}


@dataclass(frozen=True)
class NoiseFamily:
    """Zero-mean, unit-variance noise law with sub-Gaussian parameter ``tau``."""

    kind: NoiseKind = NoiseKind.GAUSSIAN

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))

    @property
    def tau(self) -> float:
        return _TAU[self.kind]


GAUSSIAN = NoiseFamily(NoiseKind.GAUSSIAN)
RADEMACHER = NoiseFamily(NoiseKind.RADEMACHER)
UNIFORM = NoiseFamily(NoiseKind.UNIFORM)


@dataclass(frozen=True, eq=False)
class GroundTruth:
    theta: np.ndarray
    sigma: float = 1.0
    noise: NoiseFamily = GAUSSIAN
    l1_bound: float | None = None

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float, ndmin=1)
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        l1 = float(np.abs(theta).sum())
        if self.l1_bound is None:
            object.__setattr__(self, "l1_bound", l1)
        elif l1 > self.l1_bound:
            raise ValueError(f"||theta||_1 = {l1} exceeds l1_bound {self.l1_bound}")


@dataclass(frozen=True, eq=False)
class Dataset:
    design: DesignMatrix
    response: np.ndarray
    noise_draw: np.ndarray
    truth: GroundTruth | None = None
    seed: int = 0

    @property
    def X(self) -> np.ndarray:
        return self.design.rows

    @property
    def y(self) -> np.ndarray:
        return self.response

    @property
    def n(self) -> int:
        return self.design.n

    @property
    def p(self) -> int:
        return self.design.p

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "p": self.p,
            "rows": self.X.tolist(),
            "response": self.response.tolist(),
            "theta": None if self.truth is None else self.truth.theta.tolist(),
            "sigma": None if self.truth is None else self.truth.sigma,
            "seed": self.seed,
        }
        if self.truth is not None:
            out["noise"] = self.truth.noise.kind.value
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "Dataset":
        design = DesignMatrix.from_rows(d["rows"])
        if design.n != d.get("n", design.n) or design.p != d.get("p", design.p):
            raise DimensionMismatch("n/p fields disagree with rows")
        y = np.asarray(d["response"], dtype=float)
        if y.shape != (design.n,):
            raise DimensionMismatch("response length differs from row count")
        truth = None
        noise_draw = np.full(design.n, np.nan)
        if d.get("theta") is not None:
            truth = GroundTruth(
                d["theta"], d.get("sigma") or 0.0, NoiseFamily(d.get("noise", "gaussian"))
            )
            if truth.sigma > 0:
                noise_draw = (y - design.rows @ truth.theta) / truth.sigma
        return cls(design, y, noise_draw, truth, int(d.get("seed", 0)))

    @classmethod
    def from_json(cls, text: str) -> "Dataset":
        return cls.from_dict(json.loads(text))


def _check_rank(X: np.ndarray, exc) -> None:
    s = np.linalg.svd(X, compute_uv=False)
    p = X.shape[1]
    if X.shape[0] < p or s[-1] <= _RANK_RTOL * max(s[0], 1e-300):
        raise exc(f"design has rank < {p}")


def gram_matrix(design) -> np.ndarray:
    """``(1/n) X^T X``, symmetrized."""
    X = getattr(design, "rows", design)
    X = np.asarray(X, dtype=float)
    G = X.T @ X / X.shape[0]
    return 0.5 * (G + G.T)


def _ball_rows(radius: float, seed: int, n: int, p: int) -> np.ndarray:
    # Row k only depends on the first k draws, so designs are nested in n.
    g = rng(seed)
    rows = np.empty((n, p))
    for k in range(n):
        z = g.standard_normal(p)
        r = radius * g.random() ** (1.0 / p)
        rows[k] = r * z / np.linalg.norm(z)
    return rows


def _orthogonal_block(p: int, seed: Optional[int]) -> np.ndarray:
    if seed is None:
        Q = np.eye(p)
    else:
        Q, R = np.linalg.qr(rng(seed).standard_normal((p, p)))
        Q = Q * np.sign(np.diag(R))
    return math.sqrt(p) * Q


def generate_design(spec: DesignSpec) -> DesignMatrix:
    fam, n, p = spec.family, spec.n, spec.p
    if n < 1 or p < 1:
        raise ValueError("n and p must be positive")
    if isinstance(fam, ReplicatedBlock):
        block = fam.block
        if block.shape[1] != p:
            raise DimensionMismatch("base rows do not have length p")
        if np.linalg.matrix_rank(block) < p:
            raise RankDeficient("base rows do not span R^p")
        m = block.shape[0]
        if n % m:
            raise BadBlockSize(f"n={n} is not a multiple of the block length {m}")
        rows = np.tile(block, (n // m, 1))
        c_x = float(np.max(np.linalg.norm(block, axis=1)))
        G = block.T @ block / m
        design = DesignMatrix.from_rows(rows, c_x)
        # exact block average, not the accumulated sum over n rows
        G = 0.5 * (G + G.T)
        G.setflags(write=False)
        object.__setattr__(design, "gram", G)
        return design
    if isinstance(fam, BoundedBall):
        return DesignMatrix.from_rows(_ball_rows(fam.radius, fam.seed, n, p), fam.radius)
    if isinstance(fam, ScaledOrthogonal):
        if n % p:
            raise BadBlockSize(f"n={n} is not a multiple of p={p}")
        rows = np.tile(_orthogonal_block(p, fam.seed), (n // p, 1))
        return DesignMatrix.from_rows(rows, math.sqrt(p))
    raise TypeError(f"unknown design family {fam!r}")


def sample_noise(family: NoiseFamily, n: int, seed: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    g = rng(seed)
    kind = NoiseFamily(family.kind).kind if isinstance(family, NoiseFamily) else NoiseKind(family)
    if kind is NoiseKind.GAUSSIAN:
        return g.standard_normal(n)
    if kind is NoiseKind.RADEMACHER:
        return 2.0 * g.integers(0, 2, size=n) - 1.0
    s = math.sqrt(3.0)
    return g.uniform(-s, s, size=n)


def realize(design: DesignMatrix, truth: GroundTruth, seed: int) -> Dataset:
    if design.p != truth.theta.shape[0]:
        raise DimensionMismatch(f"design has p={design.p}, theta has {truth.theta.shape[0]}")
    W = sample_noise(truth.noise, design.n, seed)
    y = design.rows @ truth.theta + truth.sigma * W
    y.setflags(write=False)
    W.setflags(write=False)
    return Dataset(design, y, W, truth, int(seed))
