"""Least-squares fits against normal-equation oracles, plus Welch's test."""

import numpy as np
import pytest
from scipy import stats

from admitsim.regression import (
    Design,
    RankDeficientError,
    ols_fit,
    welch_t_test,
    wls_fit,
    zscore,
)


def _random_design(rng, n=80, k=4, weighted=False):
    X = np.column_stack([np.ones(n), rng.normal(size=(n, k - 1))])
    beta = rng.normal(size=k)
    y = X @ beta + rng.normal(scale=0.3, size=n)
    w = rng.uniform(0.2, 3.0, size=n) if weighted else None
    names = [f"x{j}" for j in range(k)]
    return Design(y=y, X=X, names=names, weights=w)


def test_ols_matches_normal_equations():
    rng = np.random.default_rng(3)
    for _ in range(25):
        d = _random_design(rng)
        fit = ols_fit(d)
        want = np.linalg.solve(d.X.T @ d.X, d.X.T @ d.y)
        np.testing.assert_allclose(fit.params, want, rtol=1e-10)


def test_wls_matches_weighted_normal_equations():
    rng = np.random.default_rng(5)
    for _ in range(25):
        d = _random_design(rng, weighted=True)
        fit = wls_fit(d)
        W = np.diag(d.weights)
        want = np.linalg.solve(d.X.T @ W @ d.X, d.X.T @ W @ d.y)
        np.testing.assert_allclose(fit.params, want, rtol=1e-10)


def test_hc1_hand_computed_five_rows():
    """Sandwich on a 5-point line, worked out by hand.

    X'X = [[5, 10], [10, 30]], beta = (1.4, 0.8), residuals
    (-0.4, 0.8, -1.0, 1.2, -0.6); the HC1 factor is 5/3.
    """
    X = np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0], [1.0, 4.0]])
    y = np.array([1.0, 3.0, 2.0, 5.0, 4.0])
    fit = ols_fit(Design(y=y, X=X, names=["const", "slope"]))
    np.testing.assert_allclose(fit.params, [1.4, 0.8], rtol=1e-12)
    want_cov = np.array([[134 / 375, -37 / 375], [-37 / 375, 26 / 375]])
    np.testing.assert_allclose(fit.cov, want_cov, rtol=1e-12)
    np.testing.assert_allclose(
        fit.se, np.sqrt([134 / 375, 26 / 375]), rtol=1e-12
    )


def test_unit_weights_equal_ols_bitwise():
    rng = np.random.default_rng(11)
    d = _random_design(rng)
    unweighted = ols_fit(d)
    weighted = wls_fit(
        Design(y=d.y, X=d.X, names=d.names, weights=np.ones(len(d.y)))
    )
    assert np.array_equal(unweighted.params, weighted.params)


def test_rank_deficiency_names_columns():
    n = 30
    x = np.linspace(0, 1, n)
    X = np.column_stack([np.ones(n), x, 2 * x])
    with pytest.raises(RankDeficientError) as err:
        ols_fit(Design(y=x, X=X, names=["const", "a", "twice_a"]))
    assert err.value.columns
    assert set(err.value.columns) <= {"a", "twice_a"}


def test_more_columns_than_rows_rejected():
    X = np.ones((3, 4))
    with pytest.raises(ValueError, match="more rows"):
        ols_fit(Design(y=np.zeros(3), X=X, names=list("abcd")))


def test_design_validation():
    with pytest.raises(ValueError, match="one name per column"):
        Design(y=np.zeros(4), X=np.ones((4, 2)), names=["only_one"])
    with pytest.raises(ValueError, match="strictly positive"):
        Design(y=np.zeros(4), X=np.ones((4, 1)), names=["c"],
               weights=np.array([1.0, 0.0, 1.0, 1.0]))
    with pytest.raises(ValueError, match="unweighted"):
        ols_fit(Design(y=np.zeros(4), X=np.ones((4, 1)), names=["c"],
                       weights=np.ones(4)))


def test_fit_accessors():
    rng = np.random.default_rng(13)
    d = _random_design(rng)
    fit = ols_fit(d)
    j = d.names.index("x1")
    assert fit["x1"] == fit.params[j]
    assert fit.se_of("x1") == fit.se[j]
    assert fit.z_of("x1") == pytest.approx(fit.params[j] / fit.se[j])
    assert fit.df_resid == len(d.y) - len(d.names)
    frame = fit.coefficient_frame()
    assert list(frame["term"]) == d.names


def test_zscore_moments_and_guard():
    rng = np.random.default_rng(17)
    z = zscore(rng.normal(5.0, 3.0, size=200))
    assert z.mean() == pytest.approx(0.0, abs=1e-12)
    assert z.std(ddof=1) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError, match="constant"):
        zscore(np.full(10, 2.5))


def test_welch_matches_scipy():
    rng = np.random.default_rng(19)
    for _ in range(20):
        a = rng.normal(0.0, 1.0, size=rng.integers(5, 40))
        b = rng.normal(0.3, 2.0, size=rng.integers(5, 40))
        got = welch_t_test(a, b)
        want = stats.ttest_ind(a, b, equal_var=False)
        assert got.statistic == pytest.approx(want.statistic, rel=1e-12)
        assert got.p_value == pytest.approx(want.pvalue, rel=1e-10)
        assert got.df == pytest.approx(want.df, rel=1e-12)


def test_welch_degenerate_conventions():
    same = welch_t_test([2.0, 2.0, 2.0], [2.0, 2.0])
    assert same.statistic == 0.0 and same.p_value == 1.0
    apart = welch_t_test([1.0, 1.0], [3.0, 3.0])
    assert np.isinf(apart.statistic) and apart.p_value == 0.0
    with pytest.raises(ValueError, match="at least two"):
        welch_t_test([1.0], [2.0, 3.0])
