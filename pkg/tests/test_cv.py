import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import dataset_from, random_dataset
from lasso_cv_lab.cv import (CvCurve, argmin_cv, cv_curve, kfold_curve, kfold_fold_errors,
                             loo_ols_all, loo_ols_appendix, loo_ols_rank_one, loo_paths,
                             loo_stability)
from lasso_cv_lab.design import (DesignSpec, GroundTruth, ReplicatedBlock, ScaledOrthogonal,
                                 generate_design, realize)
from lasso_cv_lab.errors import RankDeficientFold
from lasso_cv_lab.lasso import compute_path, eval_path


def brute_cv(ds, loo, lams):
    preds = np.array([P.evaluate(lams) @ ds.X[i] for i, P in enumerate(loo.paths)])
    return ((ds.y[:, None] - preds) ** 2).mean(axis=0)


def press_mean(ds):
    X, y = ds.X, ds.y
    H = X @ np.linalg.solve(X.T @ X, X.T)
    e = y - H @ y
    return np.mean((e / (1 - np.diag(H))) ** 2)


def test_loo_paths_worked(worked):
    loo = loo_paths(worked)
    lams = np.linspace(0, 6, 61)
    np.testing.assert_allclose(loo.paths[0].evaluate(lams)[:, 0], np.maximum(0, 4 - lams),
                               atol=1e-12)
    np.testing.assert_allclose(loo.paths[1].evaluate(lams)[:, 0], np.maximum(0, 2 - lams),
                               atol=1e-12)
    assert loo.lambda_top == pytest.approx(4.04)
    assert np.all(np.diff(loo.merged_knots) < 0) and loo.merged_knots[-1] == 0.0


def test_loo_paths_rank_deficient_fold():
    ds = dataset_from(np.eye(2), [1.0, 2.0])
    with pytest.raises(RankDeficientFold):
        loo_paths(ds)


def test_loo_paths_never_see_held_out_row():
    ds = random_dataset(3, n=25, p=4)
    loo = loo_paths(ds)
    for i in (0, 7, 24):
        keep = np.arange(ds.n) != i
        ref = compute_path(ds.X[keep], ds.y[keep])
        lams = np.linspace(0, loo.lambda_top, 40)
        np.testing.assert_allclose(loo.paths[i].evaluate(lams), ref.evaluate(lams), atol=1e-10)


def test_duplicated_rows_share_flat_region():
    d = generate_design(DesignSpec(ReplicatedBlock([[1.0, 0.2], [0.1, 1.0]]), 20, 2))
    ds = realize(d, GroundTruth([1.0, -0.5]), 4)
    loo = loo_paths(ds)
    for P in loo.paths + (loo.full_path,):
        assert not np.any(eval_path(P, loo.lambda_top))


def test_cv_curve_worked(worked):
    c = cv_curve(worked)
    lams = np.linspace(0, 2, 21)
    np.testing.assert_allclose(c(lams), lams ** 2 + 4, atol=1e-10)
    lams = np.linspace(2, 4, 21)
    np.testing.assert_allclose(c(lams), 0.5 * ((lams - 2) ** 2 + 16), atol=1e-10)
    np.testing.assert_allclose(c(np.array([4.0, 4.04, 10.0])), 10.0, atol=1e-10)
    assert c.lambda_hat == 0.0
    assert c.min_value == pytest.approx(4.0, abs=1e-10)
    assert argmin_cv(c) == 0.0


def test_cv_noiseless_constant():
    c = cv_curve(dataset_from([[1.0], [1.0]], [3.0, 3.0]))
    assert c.lambda_hat == 0.0
    assert c.min_value == pytest.approx(0.0, abs=1e-20)


def test_cv_flat_region_value():
    ds = random_dataset(9, n=40, p=5)
    c = cv_curve(ds)
    assert c(c.lambda_top) == pytest.approx(np.mean(ds.y ** 2), rel=1e-12)
    assert c(5 * c.lambda_top) == pytest.approx(np.mean(ds.y ** 2), rel=1e-12)


def test_argmin_tie_breaks_toward_larger_lambda():
    # flat minimum on [2, 4]
    bp = np.array([6.0, 4.0, 2.0, 0.0])
    q = np.array([[-14.0, 4.5, 0.0], [1.0, 0.0, 0.0], [5.0, -2.0, 0.0]])
    curve = CvCurve(bp, q, 0.0, 0.0, 6.0)
    assert argmin_cv(curve) == 4.0
    const = CvCurve(np.array([3.0, 0.0]), np.array([[2.0, 0.0, 0.0]]), 0.0, 2.0, 3.0)
    assert argmin_cv(const) == 3.0


@pytest.mark.parametrize("seed", range(5))
def test_cv_curve_is_exact(seed):
    ds = random_dataset(seed, n=40, p=6)
    loo = loo_paths(ds)
    c = cv_curve(ds, loo)
    lams = np.random.default_rng(seed).uniform(0, c.lambda_top, 1000)
    np.testing.assert_allclose(c(lams), brute_cv(ds, loo, lams), atol=1e-10, rtol=0)
    # continuity at breakpoints and convexity per interval
    q = c.quad_coeffs
    bp = c.breakpoints[1:-1]
    left = q[1:, 0] + bp * (q[1:, 1] + bp * q[1:, 2])
    right = q[:-1, 0] + bp * (q[:-1, 1] + bp * q[:-1, 2])
    np.testing.assert_allclose(left, right, atol=1e-9)
    assert np.all(q[:, 2] >= 0)
    # global minimum beats a dense grid
    grid = np.linspace(0, c.lambda_top, 20001)
    assert c.min_value <= brute_cv(ds, loo, grid).min() + 1e-12
    assert c(c.lambda_hat) == pytest.approx(c.min_value, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_press_identity(seed):
    ds = random_dataset(100 + seed, n=50, p=6)
    assert cv_curve(ds)(0.0) == pytest.approx(press_mean(ds), rel=1e-8)


def test_press_worked(worked):
    assert press_mean(worked) == pytest.approx(4.0)


def test_scale_equivariance():
    ds = random_dataset(5, n=30, p=4)
    c1 = cv_curve(ds)
    c2 = cv_curve(dataset_from(ds.X, 3.0 * ds.y))
    lams = np.linspace(0, c1.lambda_top, 50)
    np.testing.assert_allclose(c2(3.0 * lams), 9.0 * c1(lams), rtol=1e-9, atol=1e-10)
    assert c2.lambda_hat == pytest.approx(3.0 * c1.lambda_hat, rel=1e-8, abs=1e-12)


# --- leave-one-out least squares ------------------------------------------------

def test_loo_ols_worked(worked):
    assert loo_ols_rank_one(worked, 0)[0] == pytest.approx(4.0)


@pytest.mark.parametrize("seed", range(5))
def test_rank_one_matches_refit(seed):
    ds = random_dataset(200 + seed, n=30, p=5)
    fits = loo_ols_all(ds)
    for i in range(ds.n):
        keep = np.arange(ds.n) != i
        ref = np.linalg.lstsq(ds.X[keep], ds.y[keep], rcond=None)[0]
        np.testing.assert_allclose(loo_ols_rank_one(ds, i), ref, atol=1e-8)
        np.testing.assert_allclose(fits[i], ref, atol=1e-8)


def test_rank_one_duplicated_row():
    d = generate_design(DesignSpec(ReplicatedBlock([[1.0, 0.3], [0.2, -1.0], [0.5, 0.5]]), 6, 2))
    ds = realize(d, GroundTruth([1.0, 2.0]), 8)
    keep = np.arange(6) != 4
    ref = np.linalg.lstsq(ds.X[keep], ds.y[keep], rcond=None)[0]
    np.testing.assert_allclose(loo_ols_rank_one(ds, 4), ref, atol=1e-8)


@pytest.mark.parametrize("seed", [None, 1, 2])
def test_appendix_formula_on_scaled_orthogonal(seed):
    d = generate_design(DesignSpec(ScaledOrthogonal(seed), 20, 4))
    ds = realize(d, GroundTruth([1.0, 0.0, -2.0, 0.5]), 3)
    for i in range(ds.n):
        np.testing.assert_allclose(loo_ols_appendix(ds, i), loo_ols_rank_one(ds, i),
                                   atol=1e-12)


# --- stability --------------------------------------------------------------------

def test_loo_stability_worked(worked):
    assert loo_stability(worked) == pytest.approx(1.0, abs=1e-10)


def test_loo_stability_zero_response():
    assert loo_stability(dataset_from(np.vstack([np.eye(2)] * 2), np.zeros(4))) == 0.0


@pytest.mark.parametrize("seed", range(3))
def test_loo_stability_is_exact_sup(seed):
    ds = random_dataset(300 + seed, n=30, p=4)
    loo = loo_paths(ds)
    grid = np.linspace(0, loo.lambda_top, 10_000)
    full = loo.full_path.evaluate(grid)
    brute = max(np.linalg.norm(full - P.evaluate(grid), axis=1).max() for P in loo.paths)
    assert brute <= loo_stability(loo) + 1e-10


def test_loo_stability_shrinks_with_copies():
    base = [[1.0, 0.4], [-0.3, 1.0]]
    vals = []
    for n in (10, 100):
        d = generate_design(DesignSpec(ReplicatedBlock(base), n, 2))
        vals.append(loo_stability(realize(d, GroundTruth([1.0, -1.0]), 17)))
    assert vals[1] < vals[0]


# --- K-fold -----------------------------------------------------------------------

def test_kfold_worked(worked):
    out = kfold_curve(worked, 2, [0.0, 1.0, 2.0])
    np.testing.assert_allclose([v for _, v in out], [4.0, 5.0, 8.0], atol=1e-12)


def test_kfold_with_k_equal_n_matches_loo():
    ds = random_dataset(7, n=25, p=4)
    c = cv_curve(ds)
    grid = np.linspace(0, c.lambda_top, 30)
    vals = np.array([v for _, v in kfold_curve(ds, ds.n, grid, seed=123)])
    np.testing.assert_allclose(vals, c(grid), atol=1e-10)


def test_kfold_mirrored_folds():
    X = np.array([[1.0, 0.5], [-0.2, 1.0], [1.0, 0.5], [-0.2, 1.0]])
    y = np.array([1.0, -2.0, 1.0, -2.0])
    errs = kfold_fold_errors(dataset_from(X, y), 2, [0.0, 0.1, 0.5], seed=None)
    np.testing.assert_allclose(errs[0], errs[1], atol=1e-12)


def test_kfold_noiseless_zero_at_zero():
    d = generate_design(DesignSpec(ReplicatedBlock([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]), 12, 2))
    ds = realize(d, GroundTruth([2.0, -1.0], sigma=0.0), 0)
    out = kfold_curve(ds, 3, [0.0, 0.2])
    assert out[0][1] == pytest.approx(0.0, abs=1e-20)


def test_kfold_rank_deficient_fold():
    ds = dataset_from([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [1.0, 2.0, 3.0])
    with pytest.raises(RankDeficientFold):
        kfold_curve(ds, 3, [0.0])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_cv_curve_property(seed):
    ds = random_dataset(seed, n=20, p=3)
    loo = loo_paths(ds)
    c = cv_curve(ds, loo)
    lams = np.random.default_rng(seed).uniform(0, c.lambda_top, 200)
    np.testing.assert_allclose(c(lams), brute_cv(ds, loo, lams), atol=1e-10)
    assert 0 <= c.lambda_hat <= c.lambda_top
    assert np.all(c.quad_coeffs[:, 2] >= 0)
