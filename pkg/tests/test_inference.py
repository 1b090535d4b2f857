import numpy as np
import pytest

from qil.errors import DegenerateWeights, NoConvergence
from qil.models import get_model
from qil.objectives import grouped_objective, iid_objective
from qil.optimize import (
    ObjectiveSpec,
    fd_hessian,
    hessian_covariance,
    minimize_box,
    plm_estimate,
    pls_estimate,
    wilson_hilferty_loss,
)
from qil.quantiles import select_d
from qil.sampling import (
    AdaptiveMetropolis,
    PosteriorDraws,
    RunningCovariance,
    abc_rejection,
    abc_summaries,
    adaptive_metropolis,
    effective_sample_size,
    metropolis,
    normalize_log_weights,
    vanilla_importance,
)
from qil.summary import rmse, summarize, thin_trace, weighted_quantile


def gaussian_objective(mean, cov):
    prec = np.linalg.inv(cov)
    mean = np.asarray(mean, dtype=float)

    def ll(th):
        r = th - mean
        return -0.5 * r @ prec @ r

    return ObjectiveSpec(ll, mean.size, [(-50.0, 50.0)] * mean.size)


# ----------------------------------------------------------- least squares

def test_wilson_hilferty_zero_at_shell():
    d = 10
    t = d * (1 - 2 / (9 * d)) ** 3
    assert wilson_hilferty_loss([(t, d)]) == pytest.approx(0.0, abs=1e-15)
    assert wilson_hilferty_loss([(-1.0, d)]) == np.inf


def test_hessian_of_quadratic():
    a = np.array([[3.0, 1.0], [1.0, 2.0]])
    f = lambda x: 0.5 * x @ a @ x  # noqa: E731
    np.testing.assert_allclose(fd_hessian(f, np.array([1.0, -2.0])), a, rtol=1e-5)
    np.testing.assert_allclose(hessian_covariance(f, np.array([1.0, -2.0])), np.linalg.inv(a), rtol=1e-5)
    assert hessian_covariance(lambda x: -f(x), np.array([1.0, 1.0])) is None


def test_minimize_box_respects_bounds():
    f = lambda x: (x[0] - 5.0) ** 2 + (x[1] + 1) ** 2  # noqa: E731
    x, fx, conv, nev, runs = minimize_box(f, [np.zeros(2)], [(-1, 2), (-3, 3)])
    assert conv and x[0] == pytest.approx(2.0, abs=1e-6) and x[1] == pytest.approx(-1.0, abs=1e-5)


def test_pls_and_plm_normal(rng):
    m = get_model("normal")
    y = rng.normal(3.0, 1.0, 20000)
    obj = iid_objective(m, y, 0.01)
    mle = m.mle(y)
    pls = pls_estimate(obj, [m.start(y)])
    plm = plm_estimate(obj, [m.start(y)])
    assert pls.converged and plm.converged
    assert abs(pls.theta[0] - mle[0]) < 0.02
    assert np.all(np.abs(plm.theta - mle) < 0.05)
    assert plm.covariance_available


def test_pls_flat_prior_sits_on_the_shell(rng):
    m = get_model("exponential")
    obj = iid_objective(m, rng.exponential(1 / 3.0, 5000), 0.01, use_prior=False)
    res = pls_estimate(obj, [np.array([3.0])])
    t, d = obj.pivotal_terms(res.theta)[0]
    assert res.value == pytest.approx(0.0, abs=1e-8)
    assert t == pytest.approx(d * (1 - 2 / (9 * d)) ** 3, rel=1e-3)


def test_no_convergence_when_everything_is_infinite():
    obj = ObjectiveSpec(lambda th: -np.inf, 1, [(0.0, 1.0)], pivotal_terms=lambda th: [(np.inf, 3)])
    with pytest.raises(NoConvergence) as info:
        pls_estimate(obj, [np.array([0.5])])
    assert "runs" in info.value.diagnostics


def test_grouped_objective_sums(rng):
    m = get_model("normal")
    grids = [select_d(rng.normal(3, 1, 300), 0.05) for _ in range(3)]
    obj = grouped_objective(m, grids, use_prior=False)
    th = np.array([3.0, 1.0])
    assert obj.log_lik(th) == pytest.approx(sum(iid_objective(m, g).log_lik(th) for g in grids))
    assert len(obj.pivotal_terms(th)) == 3


# ----------------------------------------------------------- samplers

def test_running_covariance(rng):
    x = rng.normal(size=(500, 3))
    acc = RunningCovariance(3)
    for row in x:
        acc.update(row)
    np.testing.assert_allclose(acc.covariance(), np.cov(x.T), rtol=1e-10)


def test_adaptive_metropolis_gaussian():
    cov = np.array([[1.0, 0.6], [0.6, 2.0]])
    obj = gaussian_objective([1.0, -2.0], cov)
    d = adaptive_metropolis(obj, np.zeros(2), 40000, seed=5, burn_in=0.25)
    np.testing.assert_allclose(d.mean(), [1.0, -2.0], atol=0.12)
    np.testing.assert_allclose(d.cov(), cov, atol=0.25)
    assert 0.1 < d.acceptance_rate < 0.6
    assert d.n_draws == 30000


def test_am_is_deterministic():
    obj = gaussian_objective([0.0], np.eye(1))
    a = adaptive_metropolis(obj, [0.5], 500, seed=9)
    b = adaptive_metropolis(obj, [0.5], 500, seed=9)
    np.testing.assert_array_equal(a.samples, b.samples)


def test_adaptive_metropolis_needs_finite_start():
    with pytest.raises(ValueError):
        AdaptiveMetropolis(np.zeros(1), -np.inf, np.random.default_rng(0))


def test_metropolis_gaussian():
    obj = gaussian_objective([2.0], np.eye(1) * 0.25)
    d = metropolis(obj, [0.0], 20000, 0.5, seed=1)
    assert d.mean()[0] == pytest.approx(2.0, abs=0.05)
    assert d.sd()[0] == pytest.approx(0.5, abs=0.05)


def test_normalize_log_weights():
    w = normalize_log_weights([0.0, np.log(3.0), np.nan])
    np.testing.assert_allclose(w, [0.25, 0.75, 0.0])
    with pytest.raises(DegenerateWeights):
        normalize_log_weights([-np.inf, np.nan])


def test_ess_bounds():
    assert effective_sample_size(np.ones(100)) == pytest.approx(100.0)
    assert effective_sample_size(np.r_[1.0, np.zeros(9)]) == pytest.approx(1.0)


def test_vanilla_importance_conjugate():
    # N(0, 1) prior, Gaussian likelihood centred at 1 with variance 1: posterior N(1/2, 1/2)
    obj = ObjectiveSpec(lambda th: -0.5 * (th[0] - 1.0) ** 2, 1, [(-np.inf, np.inf)])
    d = vanilla_importance(obj, lambda r, m: r.normal(size=(m, 1)), 40000, seed=2)
    assert d.mean()[0] == pytest.approx(0.5, abs=0.02)
    assert d.sd()[0] == pytest.approx(np.sqrt(0.5), abs=0.02)
    assert 0 < d.ess <= 40000


def test_abc_rejection_normal_mean():
    m = get_model("normal-mean")
    y = m.simulate(n=200, seed=3)
    d = abc_rejection(m, lambda r, s: r.uniform(0, 6, (s, 1)), y, "octiles", S=3000, keep=100, seed=4)
    assert d.n_draws == 100
    assert abs(d.mean()[0] - y.values.mean()) < 0.25
    assert abc_summaries([3, 1, 2], "all").tolist() == [1, 2, 3]
    assert abc_summaries(np.arange(9.0)).size == 7


# ----------------------------------------------------------- summaries

def test_weighted_quantile_uniform_equals_type1(rng):
    x = rng.normal(size=101)
    p = [0.025, 0.25, 0.5, 0.75, 0.975]
    np.testing.assert_allclose(weighted_quantile(x, p, np.ones(101)), np.quantile(x, p, method="inverted_cdf"))
    np.testing.assert_allclose(weighted_quantile(x, p), np.quantile(x, p, method="inverted_cdf"))


def test_summarize_keys():
    d = PosteriorDraws(np.arange(10.0), param_names=["a"], algorithm="am", acceptance_rate=0.3)
    s = summarize(d, {"twice": lambda x: 2 * x[:, 0]})
    assert s["parameters"][0]["mean"] == pytest.approx(4.5)
    assert s["parameters"][1]["name"] == "twice" and s["parameters"][1]["q50"] == pytest.approx(8.0)


def test_rmse_two_replication_micro_case():
    # hand computation: errors (0.1, -0.2) and (0.3, 0.0) -> sqrt((.01+.04+.09+0)/4)
    est = np.array([[1.1, 1.8], [1.3, 2.0]])
    assert rmse(est, [1.0, 2.0]) == pytest.approx(np.sqrt(0.14 / 4))


def test_thin_trace():
    x = np.arange(5000).reshape(-1, 1)
    assert thin_trace(x, 1000).shape[0] == 1000
    assert thin_trace(x[:10]).shape[0] == 10
