import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from qil.errors import DegenerateQuantiles
from qil.models import (
    BASIC_MODEL_NAMES,
    basic_models,
    get_model,
    gq_density_at_quantile,
    gq_plugin_start,
    gq_quantile,
)

CATALOG = basic_models()
CONTINUOUS = [n for n, m in CATALOG.items() if not m.discrete]
DISCRETE = [n for n, m in CATALOG.items() if m.discrete]
LAM = np.array([0.02, 0.1, 0.25, 0.5, 0.75, 0.9, 0.98])


def test_catalog_has_19_models():
    assert len(BASIC_MODEL_NAMES) == 19
    with pytest.raises(KeyError):
        get_model("no-such-model")


@pytest.mark.parametrize("name", CONTINUOUS)
def test_quantile_matches_simulation(name):
    m = CATALOG[name]
    y = m.simulate(n=200_000, seed=1).values
    q = m.quantile(m.truth, LAM)
    emp = np.quantile(y, LAM)
    # binomial SE of the empirical cdf at the model quantile
    fhat = np.searchsorted(y, q) / y.size
    se = np.sqrt(LAM * (1 - LAM) / y.size)
    assert np.all(np.abs(fhat - LAM) < 5 * se), (name, q, emp)


@pytest.mark.parametrize("name", CONTINUOUS)
def test_cdf_inverts_quantile(name):
    m = CATALOG[name]
    np.testing.assert_allclose(m.cdf(m.truth, m.quantile(m.truth, LAM)), LAM, atol=1e-8)


@pytest.mark.parametrize("name", CONTINUOUS)
def test_density_at_quantile_is_reciprocal_slope(name):
    m = CATALOG[name]
    h = 1e-6
    slope = (m.quantile(m.truth, LAM + h) - m.quantile(m.truth, LAM - h)) / (2 * h)
    np.testing.assert_allclose(m.density_at_quantile(m.truth, LAM), 1 / slope, rtol=1e-4)
    np.testing.assert_allclose(np.exp(m.logpdf(m.truth, m.quantile(m.truth, LAM))),
                               m.density_at_quantile(m.truth, LAM), rtol=1e-6)


@pytest.mark.parametrize("name", BASIC_MODEL_NAMES)
def test_mle_recovers_truth(name):
    m = CATALOG[name]
    y = m.simulate(n=20_000, seed=2)
    np.testing.assert_allclose(m.mle(y), m.truth, rtol=0.1, atol=0.05)


@pytest.mark.parametrize("name", DISCRETE)
def test_discrete_moments_match_simulation(name):
    m = CATALOG[name]
    y = m.simulate(n=100_000, seed=3).values
    mu, var = m.moments(m.truth)
    assert y.mean() == pytest.approx(mu, abs=5 * np.sqrt(var / y.size))
    assert y.var() == pytest.approx(var, rel=0.05)


@pytest.mark.parametrize("name", BASIC_MODEL_NAMES)
def test_prior_outside_box(name):
    m = CATALOG[name]
    bad = np.array(m.truth, dtype=float)
    bad[0] = m.lower[0] - 1.0 if np.isfinite(m.lower[0]) else m.upper[0] + 1.0
    if np.isfinite(bad[0]):
        assert m.log_prior(bad) == -np.inf
    assert np.isfinite(m.log_prior(m.truth))


def test_normal_quantile_against_scipy():
    m = get_model("normal")
    np.testing.assert_allclose(m.quantile([1.0, 2.0], LAM), stats.norm.ppf(LAM, 1.0, 2.0), rtol=1e-12)


@pytest.mark.parametrize("family", ["h", "k"])
def test_gq_reduces_to_normal(family):
    # g = 0 and h = k = 0 give N(A, B^2)
    np.testing.assert_allclose(gq_quantile([1.0, 2.0, 0.0, 0.0], LAM, family), stats.norm.ppf(LAM, 1.0, 2.0),
                               rtol=1e-12)


@given(st.floats(-2, 2), st.floats(0.1, 5), st.floats(-3, 3), st.floats(0, 2), st.sampled_from(["h", "k"]))
def test_gq_monotone_and_density(a, b, g, h, family):
    lam = np.linspace(0.01, 0.99, 51)
    q = gq_quantile([a, b, g, h], lam, family)
    assert np.all(np.diff(q) > 0)
    ana = gq_density_at_quantile([a, b, g, h], lam, family)
    num = gq_density_at_quantile([a, b, g, h], lam, family, analytic=False)
    np.testing.assert_allclose(ana, num, rtol=1e-4)


def test_gk_nonmonotone_raises():
    # negative k with a large |g| bends the quantile function back
    with pytest.raises(DegenerateQuantiles):
        gq_density_at_quantile([0.0, 1.0, 5.0, -0.9], np.linspace(0.001, 0.999, 99), "k")


@pytest.mark.parametrize("name,family", [("g-and-h", "h"), ("g-and-k", "k")])
def test_gq_plugin_start_near_truth(name, family):
    m = get_model(name)
    y = m.simulate(n=20000, seed=4).values
    np.testing.assert_allclose(gq_plugin_start(y, family), m.truth, atol=0.15)
