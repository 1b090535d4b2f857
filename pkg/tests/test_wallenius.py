from functools import lru_cache
from importlib import resources

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qil.designs import WALLENIUS_M, WALLENIUS_THETA
from qil.errors import InvalidDraws
from qil.wallenius import (
    ChoiceWeights,
    WalleniusDesign,
    activities,
    hierarchical_inverse,
    hierarchical_sampler,
    hierarchical_transform,
    mean_equation,
    read_choice_csv,
    read_digit_table,
    urn_simulate,
    wallenius_log_qil,
    wallenius_moments,
    wallenius_objective,
    wallenius_pivotals,
    wallenius_simulate,
    write_choice_csv,
    write_digit_table,
)


def enumerate_moments(theta, m, k):
    """Exact moments by recursion over every draw sequence (tiny urns only)."""
    theta = tuple(theta)
    m = tuple(m)

    @lru_cache(maxsize=None)
    def dist(left, taken):
        if left == 0:
            return {taken: 1.0}
        w = [theta[j] * (m[j] - taken[j]) for j in range(len(m))]
        tot = sum(w)
        out = {}
        for j, wj in enumerate(w):
            if wj <= 0:
                continue
            nxt = list(taken)
            nxt[j] += 1
            for state, p in dist(left - 1, tuple(nxt)).items():
                out[state] = out.get(state, 0.0) + p * wj / tot
        return out

    d = dist(k, (0,) * len(m))
    states = np.array(list(d.keys()), dtype=float)
    p = np.array(list(d.values()))
    mu = p @ states
    return mu, p @ (states - mu) ** 2


@pytest.mark.parametrize("theta,m,k", [
    ((0.2, 0.5, 0.3), (2, 3, 1), 3),
    ((0.7, 0.1, 0.2), (1, 2, 3), 4),
    ((0.25, 0.25, 0.5), (3, 3, 2), 5),
    ((0.05, 0.95), (4, 2), 3),
])
def test_exact_moments_against_enumeration(theta, m, k):
    mu, var = wallenius_moments(theta, m, k, method="exact")
    emu, evar = enumerate_moments(theta, m, k)
    np.testing.assert_allclose(mu, emu, atol=1e-12)
    np.testing.assert_allclose(var, evar, atol=1e-12)


def test_equal_weights_is_hypergeometric():
    m = np.array([2, 4, 8, 2, 4, 2])
    mu, var = wallenius_moments(np.full(6, 1 / 6), m, 11)
    N, k = m.sum(), 11
    np.testing.assert_allclose(mu, k * m / N, atol=1e-12)
    np.testing.assert_allclose(var, k * (m / N) * (1 - m / N) * (N - k) / (N - 1), atol=1e-12)


def test_exhaustive_draw():
    mu, var = wallenius_moments(WALLENIUS_THETA, WALLENIUS_M, int(WALLENIUS_M.sum()))
    np.testing.assert_allclose(mu, WALLENIUS_M, atol=1e-12)
    np.testing.assert_allclose(var, 0.0, atol=1e-12)


def test_means_match_urn_simulation():
    mu, var = wallenius_moments(WALLENIUS_THETA, WALLENIUS_M, 11)
    y = urn_simulate(WALLENIUS_THETA, WALLENIUS_M, 11, seed=5, size=100_000)
    se = y.std(axis=0, ddof=1) / np.sqrt(y.shape[0])
    assert np.all(np.abs(y.mean(axis=0) - mu) < 3 * se)
    assert mu.sum() == pytest.approx(11.0, abs=1e-10)


@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=5), st.integers(0, 100), st.data())
def test_means_sum_to_draws(w, seed, data):
    r = np.random.default_rng(seed)
    m = r.integers(1, 5, len(w))
    k = data.draw(st.integers(0, int(m.sum())))
    th = np.asarray(w) / np.sum(w)
    mu, var = wallenius_moments(th, m, k)
    assert mu.sum() == pytest.approx(k, abs=1e-10)
    assert np.all(mu >= -1e-12) and np.all(mu <= m + 1e-12)
    if 0 < k < m.sum():
        assert np.all(var > 0)


def test_mean_equation_solution():
    mu, r = mean_equation(WALLENIUS_THETA, WALLENIUS_M, 11)
    assert 0 < r < 1
    assert mu.sum() == pytest.approx(11.0, abs=1e-8)
    approx, _ = wallenius_moments(WALLENIUS_THETA, WALLENIUS_M, 11, method="approx")
    exact, _ = wallenius_moments(WALLENIUS_THETA, WALLENIUS_M, 11, method="exact")
    np.testing.assert_allclose(approx, exact, atol=0.15)


def test_invalid_draws():
    with pytest.raises(InvalidDraws):
        wallenius_moments(WALLENIUS_THETA, WALLENIUS_M, 23)
    with pytest.raises(InvalidDraws):
        urn_simulate(WALLENIUS_THETA, WALLENIUS_M, -1)


def test_urn_trivial_cases():
    assert urn_simulate(WALLENIUS_THETA, WALLENIUS_M, 0, seed=1).tolist() == [0] * 6
    assert urn_simulate([1.0], [5], 3, seed=1).tolist() == [3]
    a = urn_simulate(WALLENIUS_THETA, WALLENIUS_M, 7, seed=2, size=5)
    np.testing.assert_array_equal(a, urn_simulate(WALLENIUS_THETA, WALLENIUS_M, 7, seed=2, size=5))
    assert np.all(a.sum(axis=1) == 7)


def test_pivotal_range(rng):
    y = wallenius_simulate(WALLENIUS_THETA, WALLENIUS_M, rng.integers(1, 21, 200), seed=3)
    draws = y.sum(axis=1)
    for k in (1, 10, 20):
        mu, var = wallenius_moments(WALLENIUS_THETA, WALLENIUS_M, k)
        t = wallenius_pivotals(y[draws == k], mu, var)
        assert np.all((t >= 0) & (t <= 0.5))


def test_hierarchical_transform_round_trip(rng):
    np.testing.assert_allclose(hierarchical_transform(np.zeros(5)), np.full(6, 1 / 6))
    assert hierarchical_transform([800.0, 0, 0, 0, 0])[0] == pytest.approx(1.0)
    th = rng.dirichlet(np.ones(6), 50)
    np.testing.assert_allclose(hierarchical_transform(hierarchical_inverse(th)), th, atol=1e-12)


def test_choice_weights_renormalize():
    assert ChoiceWeights([1.0, 3.0]).theta.tolist() == [0.25, 0.75]
    with pytest.raises(ValueError):
        ChoiceWeights([-1.0, 2.0])


def test_activities_fixture_and_qil():
    act = activities()
    assert act.y.shape == (56, 6) and act.N == 22
    np.testing.assert_array_equal(act.m, WALLENIUS_M)
    lq, skipped = wallenius_log_qil(act, np.full(6, 1 / 6), return_skipped=True)
    assert np.isfinite(lq) and skipped == int(np.sum((act.draws == 0) | (act.draws == 22)))


def test_digit_table_round_trip(tmp_path):
    ref = resources.files("qil") / "data" / "activities_digits.csv"
    out = tmp_path / "act.csv"
    write_digit_table(out, activities())
    assert out.read_bytes() == ref.read_bytes()
    back = read_digit_table(out)
    np.testing.assert_array_equal(back.y, activities().y)
    write_choice_csv(tmp_path / "c.csv", back)
    np.testing.assert_array_equal(read_choice_csv(tmp_path / "c.csv", WALLENIUS_M).y, back.y)


def test_objective_simplex_constraint():
    obj = wallenius_objective(activities())
    assert obj.log_target(np.full(5, 0.3)) == -np.inf
    assert np.isfinite(obj.log_target(np.full(5, 1 / 6)))
    assert obj.to_simplex(np.full(5, 0.1))[-1] == pytest.approx(0.5)


def test_hierarchical_sampler_shapes():
    design = WalleniusDesign(WALLENIUS_M, activities().y[:5])
    d = hierarchical_sampler(design, 60, seed=1)
    assert d.samples.shape == (30, 30)
    rows = d.samples.reshape(30, 5, 6)
    np.testing.assert_allclose(rows.sum(axis=2), 1.0, atol=1e-12)
