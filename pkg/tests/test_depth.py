import numpy as np
import pytest
from scipy import stats
from scipy.spatial.distance import mahalanobis

from qil.depth import (
    PrecisionMatrix,
    depth_coreset,
    dr_transform,
    log_qil_multivariate,
    log_qil_multivariate_batch,
    mahalanobis_depth,
    mahalanobis_distances,
    partial_correlations,
    partial_variances,
    robust_location_scatter,
    sample_wishart,
    skewnormal_simulate,
)
from qil.designs import ar1_covariance, sparse_precision_design
from qil.errors import DegenerateScatter, InvalidPrecision


def test_precision_matrix_validation():
    PrecisionMatrix(np.eye(3))
    for bad in (np.ones((2, 3)), np.array([[1.0, 0.5], [0.4, 1.0]]), np.diag([1.0, 0.0]),
                np.array([[1.0, 2.0], [2.0, 1.0]])):
        with pytest.raises(InvalidPrecision):
            PrecisionMatrix(bad)


def test_mahalanobis_against_scipy(rng):
    s = ar1_covariance(4, 0.5)
    om = np.linalg.inv(s)
    y = rng.normal(size=(20, 4))
    mu = rng.normal(size=4)
    expect = [mahalanobis(row, mu, om) ** 2 for row in y]
    np.testing.assert_allclose(mahalanobis_distances(y, mu, om), expect, rtol=1e-12)
    m, dm = mahalanobis_depth(y[0], mu, om)
    assert dm == pytest.approx(1 / (1 + expect[0]))


def test_depth_at_centre_is_one():
    m, dm = mahalanobis_depth(np.zeros(3), np.zeros(3), np.eye(3))
    assert m == 0.0 and dm == 1.0


def test_dr_uniform_under_model(rng):
    s = ar1_covariance(5, 0.5)
    y = rng.multivariate_normal(np.zeros(5), s, 4000)
    dr = dr_transform(mahalanobis_distances(y, np.zeros(5), np.linalg.inv(s)), 5)
    assert stats.kstest(dr, "uniform").pvalue > 0.01


def test_log_qil_multivariate_batch_matches_single(rng):
    x = rng.normal(size=(40, 3))
    oms = sample_wishart(np.eye(3), 5, seed=1, size=4)
    batch = log_qil_multivariate_batch(x, oms)
    single = [log_qil_multivariate(x, om).log_qil for om in oms]
    np.testing.assert_allclose(batch, single, rtol=1e-10)
    b10 = log_qil_multivariate_batch(x, oms, d=10)
    assert b10.shape == (4,)


def test_multivariate_qil_prefers_true_precision(rng):
    s = ar1_covariance(3, 0.7)
    x = rng.multivariate_normal(np.zeros(3), s, 2000)
    good = log_qil_multivariate(x, np.linalg.inv(s)).log_qil
    assert good > log_qil_multivariate(x, np.eye(3)).log_qil


def test_wishart_mean_and_rank():
    oms = sample_wishart(np.eye(4) * 0.5, 6, seed=2, size=20000)
    np.testing.assert_allclose(oms.mean(axis=0), 3.0 * np.eye(4), atol=0.06)
    assert np.linalg.eigvalsh(oms[:1000]).min() > 0
    sing = sample_wishart(np.eye(4), 3, seed=3, size=10)
    assert np.all(np.linalg.matrix_rank(sing) == 3)
    assert isinstance(sample_wishart(np.eye(2), 3, seed=4), PrecisionMatrix)
    with pytest.raises(ValueError):
        sample_wishart(np.eye(2), 0)


def test_partial_correlation_formula():
    om = np.array([[2.0, -1.0], [-1.0, 2.0]])
    pc = partial_correlations(om)
    assert pc[0, 1] == pytest.approx(0.5) and pc[0, 0] == 1.0
    np.testing.assert_allclose(partial_variances(om), [0.5, 0.5])
    stack = np.stack([om, om])
    assert partial_correlations(stack).shape == (2, 2, 2)


def test_robust_scatter_and_degenerate(rng):
    x = rng.multivariate_normal([1, 2], [[1, 0.3], [0.3, 1]], 5000)
    mu, sig, prec = robust_location_scatter(x)
    np.testing.assert_allclose(mu, [1, 2], atol=0.06)
    np.testing.assert_allclose(prec @ sig, np.eye(2), atol=1e-10)
    with pytest.raises(DegenerateScatter):
        robust_location_scatter(np.column_stack((x[:, 0], x[:, 0])))


def test_coreset_zero_epsilon_is_identity(rng):
    x = rng.normal(size=(60, 3))
    c = depth_coreset(x, 0.0)
    np.testing.assert_array_equal(c.indices, np.arange(60))
    assert c.gap == 0.0


@pytest.mark.parametrize("eps", [0.1, 0.01, 0.001])
def test_coreset_gap_bound(rng, eps):
    x = rng.normal(size=(20000, 4))
    c = depth_coreset(x, eps)
    assert c.gap <= eps
    assert c.d <= 1.2 / eps
    assert np.all(np.diff(c.indices) > 0)


def test_skewnormal_alpha_zero_is_normal():
    s = ar1_covariance(3, 0.5)
    y = skewnormal_simulate(np.zeros(3), s, np.zeros(3), 50000, seed=1)
    np.testing.assert_allclose(np.cov(y.T), s, atol=0.03)


def test_skewnormal_positive_skew():
    y = skewnormal_simulate([0.0], [[1.0]], [8.0], 50000, seed=2)[:, 0]
    assert stats.skew(y) > 0.5
    # the skew-normal mean is sqrt(2/pi) delta
    delta = 8 / np.sqrt(65)
    assert y.mean() == pytest.approx(np.sqrt(2 / np.pi) * delta, abs=0.02)


def test_sparse_precision_design():
    om, sig, pairs = sparse_precision_design(seed=3)
    iu = np.triu_indices(10, 1)
    assert np.count_nonzero(om[iu]) == 10 and len(pairs) == 10
    assert np.linalg.eigvalsh(om).min() > 0
    np.testing.assert_allclose(om @ sig, np.eye(10), atol=1e-9)
