from importlib import resources

import numpy as np
import pytest
from scipy.optimize import minimize
from scipy.special import expit

from qil.designs import LOGIT_BETA, ar1_covariance, logit_design
from qil.errors import InvalidGraph
from qil.glm import (
    LassoPrior,
    RegressionData,
    binreg_lasso_am,
    binreg_log_qil,
    binreg_map,
    binreg_pivotals,
    lasso_log_prior,
    logistic_irls,
)
from qil.network import (
    QUADRATIC_STATS,
    NetworkGraph,
    erg_change_statistics,
    florentine,
    network_statistics,
    read_edge_list,
    write_edge_list,
)


def random_graph(rng, N, p=0.35):
    a = np.triu((rng.random((N, N)) < p).astype(int), 1)
    return NetworkGraph(a + a.T)


def brute_change(graph, stats):
    a = graph.adjacency.astype(int)
    rows = []
    for j in range(graph.N):
        for k in range(graph.N):
            if j == k:
                continue
            plus, minus = a.copy(), a.copy()
            plus[j, k] = plus[k, j] = 1
            minus[j, k] = minus[k, j] = 0
            rows.append(network_statistics(NetworkGraph(plus), stats)
                        - network_statistics(NetworkGraph(minus), stats))
    return np.array(rows)


# ----------------------------------------------------------- binary regression

def test_pivotals_cases():
    X = np.array([[1.0], [1.0], [-1.0]])
    y = np.array([1.0, 0.0, 1.0])
    t = binreg_pivotals(X, y, [2.0])
    g = expit(2.0)
    np.testing.assert_allclose(t, [0.0, 4 * g ** 2, 4 * g ** 2])
    # a tie at G = 1/2 classifies as 1
    assert binreg_pivotals([[0.0]], [1.0], [1.0])[0] == 0.0


def test_fast_logistic_path_matches_generic(rng):
    data = logit_design(500, seed=1)
    beta = rng.normal(size=data.p0)
    generic = binreg_log_qil(data.X, data.y, beta, link=lambda e: expit(e))
    assert binreg_log_qil(data.X, data.y, beta) == pytest.approx(generic, rel=1e-12)


def test_lasso_prior_closed_form():
    prior = LassoPrior.for_design(3, intercept=True)
    assert prior.shrunk_idx == (1, 2) and prior.free_idx == (0,)
    b = np.array([5.0, 1.0, -2.0])
    lam = 0.7
    expect = 2 * np.log(lam / 2) - lam * 3.0 - lam - 0.5 * np.log(lam)
    assert lasso_log_prior(b, lam, prior) == pytest.approx(expect)
    assert lasso_log_prior(b, 0.0, prior) == -np.inf
    with pytest.raises(ValueError):
        LassoPrior(lam=0.0)


def test_irls_matches_generic_optimizer():
    data = logit_design(3000, seed=2)

    def nll(b):
        eta = data.X @ b
        return np.sum(np.logaddexp(0, eta) - data.y * eta)

    ref = minimize(nll, np.zeros(data.p0), method="BFGS", options={"gtol": 1e-8}).x
    np.testing.assert_allclose(logistic_irls(data.X, data.y), ref, atol=1e-4)


def test_logit_design_covariance():
    s = ar1_covariance(8)
    assert s[0, 2] == pytest.approx(0.25)
    data = logit_design(20000, seed=3)
    np.testing.assert_allclose(np.corrcoef(data.X[:, 1:].T)[0, 2], 0.25, atol=0.03)
    assert data.p0 == LOGIT_BETA.size


def test_regression_data_validation():
    with pytest.raises(ValueError):
        RegressionData(np.ones((3, 2)), [0, 1, 2])
    with pytest.raises(ValueError):
        RegressionData(np.ones((3, 2)), [0, 1])


def test_binreg_map_fixed_lambda_runs():
    data = logit_design(400, seed=4)
    res = binreg_map(data, LassoPrior.for_design(data.p0, True), profile=False)
    assert res.converged and np.all(np.isfinite(res.theta))
    assert res.diagnostics["lambda"] == 0.5


def test_lasso_am_shapes_and_determinism():
    data = erg_change_statistics(florentine())
    prior = LassoPrior.for_design(data.p0, intercept=False)
    a = binreg_lasso_am(data, prior, 400, seed=1)
    b = binreg_lasso_am(data, prior, 400, seed=1)
    assert a.samples.shape == (200, 3)
    assert a.names() == ["edges", "two-stars", "lambda"]
    np.testing.assert_array_equal(a.samples, b.samples)
    assert np.all(a.samples[:, -1] > 0)


# ----------------------------------------------------------- networks

def test_graph_validation():
    with pytest.raises(InvalidGraph):
        NetworkGraph(np.array([[0, 1], [0, 0]]))
    with pytest.raises(InvalidGraph):
        NetworkGraph(np.eye(2, dtype=int))
    with pytest.raises(InvalidGraph):
        NetworkGraph.from_edges(3, [(1, 4)])


def test_statistics_triangle():
    g = NetworkGraph.from_edges(3, [(1, 2), (2, 3), (1, 3)])
    np.testing.assert_array_equal(network_statistics(g), [3, 3])


@pytest.mark.parametrize("seed", range(20))
def test_change_statistics_brute_force(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, int(rng.integers(2, 9)))
    np.testing.assert_array_equal(erg_change_statistics(g).X, brute_change(g, ("edges", "two-stars")))
    np.testing.assert_allclose(erg_change_statistics(g, quadratic=True).X, brute_change(g, QUADRATIC_STATS))


def test_florentine_fixture():
    g = florentine()
    assert g.N == 16 and len(g.edges()) == 15
    data = erg_change_statistics(g)
    assert data.n == 240 and data.y.sum() == 30
    np.testing.assert_array_equal(network_statistics(g)[:1], [15])


def test_edge_list_round_trip_is_lossless(tmp_path):
    ref = resources.files("qil") / "data" / "florentine_edges.csv"
    out = tmp_path / "flo.csv"
    write_edge_list(out, florentine())
    assert out.read_bytes() == ref.read_bytes()
    assert read_edge_list(out) == florentine()
    with pytest.raises(InvalidGraph):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        read_edge_list(bad)
