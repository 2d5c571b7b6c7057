import json
import math

import numpy as np
import pytest

from lasso_cv_lab.design import (GAUSSIAN, RADEMACHER, UNIFORM, BoundedBall, Dataset,
                                 DesignMatrix, DesignSpec, GroundTruth, ReplicatedBlock,
                                 ScaledOrthogonal, generate_design, gram_matrix, realize,
                                 sample_noise)
from lasso_cv_lab.errors import BadBlockSize, DimensionMismatch, RankDeficient
from lasso_cv_lab.experiments import default_base_rows


def test_replicated_block_gram_is_block_average():
    d = generate_design(DesignSpec(ReplicatedBlock([[1, 0], [0, 1]]), 4, 2))
    np.testing.assert_array_equal(d.gram, np.diag([0.5, 0.5]))
    assert d.rows.shape == (4, 2)


def test_replicated_block_single_row_is_rank_deficient():
    with pytest.raises(RankDeficient):
        generate_design(DesignSpec(ReplicatedBlock([[1, 0]]), 4, 2))


def test_replicated_block_bad_size():
    with pytest.raises(BadBlockSize):
        generate_design(DesignSpec(ReplicatedBlock([[1, 0], [0, 1]]), 3, 2))


@pytest.mark.parametrize("n", [10, 50, 800])
def test_replicated_block_gram_constant_in_n(n):
    base = default_base_rows()
    d = generate_design(DesignSpec(ReplicatedBlock(base), n, 5))
    C = base.T @ base / 10
    assert np.linalg.norm(d.gram - 0.5 * (C + C.T)) == 0.0
    np.testing.assert_allclose(d.rows.T @ d.rows / n, d.gram, atol=1e-13)
    assert d.row_norms.max() <= d.c_x_bound <= 2.0
    assert d.min_eig > 0


def test_bounded_ball_rows_within_radius():
    d = generate_design(DesignSpec(BoundedBall(2.0, seed=7), 100, 5))
    assert np.all(d.row_norms <= 2.0)
    assert d.c_x_bound == 2.0


def test_bounded_ball_designs_are_nested_and_gram_settles():
    fam = BoundedBall(1.5, seed=3)
    small = generate_design(DesignSpec(fam, 100, 4))
    big = generate_design(DesignSpec(fam, 400, 4))
    np.testing.assert_array_equal(big.rows[:100], small.rows)
    drift = []
    for n in (50, 200, 800, 3200):
        a = generate_design(DesignSpec(fam, n, 4)).gram
        b = generate_design(DesignSpec(fam, 2 * n, 4)).gram
        drift.append(np.linalg.norm(a - b))
    assert drift[-1] < drift[0]


def test_scaled_orthogonal_gram():
    for seed in (None, 11):
        d = generate_design(DesignSpec(ScaledOrthogonal(seed), 12, 3))
        np.testing.assert_allclose(d.rows.T @ d.rows, 12 * np.eye(3), atol=1e-12)
        assert d.c_x_bound == pytest.approx(math.sqrt(3))


def test_gram_examples():
    d = generate_design(DesignSpec(ReplicatedBlock([[1, 0], [0, 1]]), 2, 2))
    np.testing.assert_array_equal(d.gram, np.diag([0.5, 0.5]))
    assert gram_matrix(np.ones((2, 1))).tolist() == [[1.0]]


def test_gram_permutation_invariant():
    X = np.random.default_rng(0).standard_normal((30, 4))
    perm = np.random.default_rng(1).permutation(30)
    np.testing.assert_allclose(gram_matrix(X[perm]), gram_matrix(X), atol=1e-14)
    G = gram_matrix(X)
    np.testing.assert_array_equal(G, G.T)


def test_rank_check_on_rows():
    with pytest.raises(RankDeficient):
        DesignMatrix.from_rows([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])


def test_rademacher_support():
    w = sample_noise(RADEMACHER, 1000, 5)
    assert set(np.unique(w)) == {-1.0, 1.0}


def test_uniform_unit_variance():
    w = sample_noise(UNIFORM, 100_000, 12)
    assert abs(w.var() - 1.0) < 0.02
    assert np.abs(w).max() <= math.sqrt(3)


@pytest.mark.parametrize("fam", [GAUSSIAN, RADEMACHER, UNIFORM])
def test_noise_is_deterministic(fam):
    np.testing.assert_array_equal(sample_noise(fam, 50, 99), sample_noise(fam, 50, 99))
    assert not np.array_equal(sample_noise(fam, 50, 99), sample_noise(fam, 50, 100))


@pytest.mark.parametrize("fam", [GAUSSIAN, RADEMACHER, UNIFORM])
def test_subgaussian_mgf_sanity(fam):
    w = sample_noise(fam, 100_000, 2024)
    for t in (-1.0, -0.5, 0.5, 1.0):
        e = np.exp(t * w)
        se = e.std(ddof=1) / math.sqrt(e.size)
        assert e.mean() <= math.exp(fam.tau ** 2 * t ** 2 / 2) * (1 + 3 * se)


def test_realize_examples():
    d = DesignMatrix.from_rows([[1.0], [1.0]])
    ds = realize(d, GroundTruth([3.0], sigma=0.0), 1)
    np.testing.assert_array_equal(ds.response, [3.0, 3.0])
    ds = realize(d, GroundTruth([0.0], sigma=1.0), 1)
    np.testing.assert_array_equal(ds.response, ds.noise_draw)


def test_realize_is_bit_reproducible():
    d = generate_design(DesignSpec(BoundedBall(2.0, 1), 40, 3))
    truth = GroundTruth([1.0, -2.0, 0.0], sigma=0.7)
    a, b = realize(d, truth, 77), realize(d, truth, 77)
    np.testing.assert_array_equal(a.response, b.response)
    np.testing.assert_array_equal(a.response, d.rows @ truth.theta + 0.7 * a.noise_draw)


def test_realize_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        realize(DesignMatrix.from_rows(np.eye(3)), GroundTruth([1.0, 2.0]), 0)


def test_truth_l1_bound():
    with pytest.raises(ValueError):
        GroundTruth([1.0, -2.0], l1_bound=2.5)
    assert GroundTruth([1.0, -2.0]).l1_bound == 3.0


def test_dataset_json_round_trip():
    d = generate_design(DesignSpec(BoundedBall(2.0, 4), 20, 3))
    ds = realize(d, GroundTruth([0.5, 0.0, -1.0], 1.0), 2**64 - 1)
    doc = json.loads(ds.to_json())
    assert set(doc) >= {"n", "p", "rows", "response", "theta", "sigma", "seed"}
    back = Dataset.from_json(ds.to_json())
    np.testing.assert_array_equal(back.X, ds.X)
    np.testing.assert_array_equal(back.response, ds.response)
    np.testing.assert_array_equal(back.truth.theta, ds.truth.theta)
    assert back.seed == 2**64 - 1
