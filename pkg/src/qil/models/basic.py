"""The 19 basic univariate models with their priors and data-generating values.

Parameterizations follow the common statistical-software conventions:

* Exponential(theta) is parameterized by its rate.
* Gamma(alpha, beta) uses shape ``alpha`` and scale ``beta``.
* Weibull(A, B) uses scale ``A`` and shape ``B``.
* Burr(alpha, c, k) is the type XII law with scale ``alpha``:
  ``F(y) = 1 - (1 + (y/alpha)^c)^(-k)``.
* GEV(kappa, sigma, mu) has ``kappa > 0`` for the heavy (Frechet) tail.
* BirnbSau(beta, gamma) uses scale ``beta`` and shape ``gamma``.
* Geometric and NegBinom count failures before the first (r-th) success.
* HalfNorm(0, sigma) and NegBinom(theta, r = 3) hold their first/second
  argument fixed; only the remaining parameter is estimated.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import betainc, betaincinv, betaln, gammainc, gammaincinv, gammaln, log_ndtr, ndtr, stdtr, stdtrit

from ..special import normal_quantile
from .base import ModelSpec, nelder_mead_mle

__all__ = ["basic_models", "get_basic_model", "BASIC_MODEL_NAMES"]

_LOG_SQRT2PI = 0.5 * math.log(2.0 * math.pi)
_EULER = 0.5772156649015329
_INF = float("inf")


def _flat(theta):
    return 0.0


# --- continuous models -------------------------------------------------------

def _beta_model():
    def q(th, lam):
        return betaincinv(th[0], th[1], lam)

    def logpdf(th, y):
        a, b = th
        return (a - 1) * np.log(y) + (b - 1) * np.log1p(-y) - betaln(a, b)

    def dens(th, lam):
        return np.exp(logpdf(th, q(th, lam)))

    def mom(y):
        m, v = y.mean(), y.var()
        c = m * (1 - m) / v - 1
        return np.array([m * c, (1 - m) * c])

    box = ((0.0, 100.0), (0.0, 100.0))
    return ModelSpec(
        "beta", ("alpha", "beta"), box, (3.0, 1.0), q, _flat,
        lambda th, n, rng: rng.beta(th[0], th[1], n),
        density_fn=dens, logpdf_fn=logpdf,
        cdf_fn=lambda th, y: betainc(th[0], th[1], y),
        mle_fn=lambda y: nelder_mead_mle(lambda th: -np.sum(logpdf(th, y)) if np.all(th > 0) else np.inf, mom(y), box),
        start_fn=mom, prior_text="1(0 <= alpha, beta <= 100)")


def _bs_model():
    def q(th, lam):
        b, g = th
        w = 0.5 * g * normal_quantile(lam)
        return b * (w + np.sqrt(w * w + 1.0)) ** 2

    def _xi(th, y):
        b, g = th
        r = np.sqrt(y / b)
        return (r - 1.0 / r) / g, (r + 1.0 / r) / (2.0 * g * y)

    def logpdf(th, y):
        xi, dxi = _xi(th, y)
        return -0.5 * xi * xi - _LOG_SQRT2PI + np.log(dxi)

    def dens(th, lam):
        return np.exp(logpdf(th, q(th, lam)))

    def mom(y):
        s, r = y.mean(), 1.0 / np.mean(1.0 / y)
        return np.array([math.sqrt(s * r), math.sqrt(max(2.0 * (math.sqrt(s / r) - 1.0), 1e-6))])

    def sim(th, n, rng):
        w = 0.5 * th[1] * rng.standard_normal(n)
        return th[0] * (w + np.sqrt(w * w + 1.0)) ** 2

    box = ((0.0, 100.0), (0.0, 100.0))
    return ModelSpec(
        "birnbaum-saunders", ("beta", "gamma"), box, (3.0, 1.0), q, _flat, sim,
        density_fn=dens, logpdf_fn=logpdf,
        cdf_fn=lambda th, y: ndtr(_xi(th, y)[0]),
        mle_fn=lambda y: nelder_mead_mle(lambda th: -np.sum(logpdf(th, y)) if np.all(th > 0) else np.inf, mom(y), box),
        start_fn=mom, prior_text="1(0 <= beta, gamma <= 100)")


def _burr_model():
    def q(th, lam):
        a, c, k = th
        return a * np.expm1(-np.log1p(-lam) / k) ** (1.0 / c)

    def logpdf(th, y):
        a, c, k = th
        lz = np.log(y / a)
        return np.log(c * k / a) + (c - 1) * lz - (k + 1) * np.log1p(np.exp(c * lz))

    def dens(th, lam):
        a, c, k = th
        qq = q(th, lam)
        # (1 + (q/a)^c) = (1 - lam)^(-1/k)
        return (c * k / a) * (qq / a) ** (c - 1) * (1.0 - lam) ** ((k + 1) / k)

    def start(y):
        # log-logistic (k = 1) moment start: log(y) is logistic with scale 1/c
        lz = np.log(y)
        return np.array([math.exp(np.median(lz)), math.pi / (math.sqrt(3.0) * lz.std()), 1.0])

    def mle(y):
        nll = lambda th: -np.sum(logpdf(th, y)) if np.all(th > 0) else np.inf
        cands = [start(y), np.array([float(np.median(y)), 1.0, 1.0])]
        fits = [nelder_mead_mle(nll, s, box) for s in cands]
        return min(fits, key=nll)

    box = ((0.0, 100.0), (0.0, 100.0), (0.0, 100.0))
    return ModelSpec(
        "burr", ("alpha", "c", "k"), box, (0.5, 2.0, 5.0), q, _flat,
        lambda th, n, rng: q(th, rng.random(n)),
        density_fn=dens, logpdf_fn=logpdf,
        cdf_fn=lambda th, y: -np.expm1(-th[2] * np.log1p((y / th[0]) ** th[1])),
        mle_fn=mle, start_fn=start, prior_text="1(0 <= alpha, c, k <= 100)")


def _exponential_model():
    return ModelSpec(
        "exponential", ("theta",), ((0.0, _INF),), (3.0,),
        lambda th, lam: -np.log1p(-lam) / th[0],
        lambda th: -th[0],
        lambda th, n, rng: rng.exponential(1.0 / th[0], n),
        density_fn=lambda th, lam: th[0] * (1.0 - lam),
        logpdf_fn=lambda th, y: np.log(th[0]) - th[0] * y,
        cdf_fn=lambda th, y: -np.expm1(-th[0] * y),
        mle_fn=lambda y: np.array([1.0 / y.mean()]),
        prior_text="exp(-theta)")


def _gamma_model():
    def q(th, lam):
        return th[1] * gammaincinv(th[0], lam)

    def logpdf(th, y):
        a, b = th
        return (a - 1) * np.log(y) - y / b - gammaln(a) - a * np.log(b)

    def mom(y):
        m, v = y.mean(), y.var()
        return np.array([m * m / v, v / m])

    box = ((0.0, 100.0), (0.0, 100.0))
    return ModelSpec(
        "gamma", ("alpha", "beta"), box, (3.0, 1.0), q, _flat,
        lambda th, n, rng: rng.gamma(th[0], th[1], n),
        density_fn=lambda th, lam: np.exp(logpdf(th, q(th, lam))),
        logpdf_fn=logpdf, cdf_fn=lambda th, y: gammainc(th[0], y / th[1]),
        mle_fn=lambda y: nelder_mead_mle(lambda th: -np.sum(logpdf(th, y)) if np.all(th > 0) else np.inf, mom(y), box),
        start_fn=mom, prior_text="1(0 <= alpha, beta <= 100)")


def _gev_model():
    def q(th, lam):
        k, s, m = th
        w = -np.log(lam)
        if abs(k) < 1e-8:
            return m - s * np.log(w)
        return m + s * np.expm1(-k * np.log(w)) / k

    def dens(th, lam):
        k, s, _ = th
        w = -np.log(lam)
        return w ** (k + 1.0) * lam / s

    def _tz(th, y):
        k, s, m = th
        z = (y - m) / s
        if abs(k) < 1e-8:
            return np.exp(-z), np.ones_like(z, dtype=bool)
        a = 1.0 + k * z
        ok = a > 0
        with np.errstate(all="ignore"):
            t = np.where(ok, a, 1.0) ** (-1.0 / k)
        return t, ok

    def logpdf(th, y):
        k, s, _ = th
        t, ok = _tz(th, y)
        return np.where(ok, -np.log(s) + (k + 1.0) * np.log(t) - t, -np.inf)

    def cdf(th, y):
        t, ok = _tz(th, y)
        k = th[0]
        inside = np.exp(-t)
        return np.where(ok, inside, 0.0 if k > 0 else 1.0)

    def mom(y):
        s = y.std() * math.sqrt(6.0) / math.pi
        return np.array([0.0, s, y.mean() - _EULER * s])

    box = ((-10.0, 10.0), (0.0, _INF), (-10.0, 10.0))
    return ModelSpec(
        "gev", ("kappa", "sigma", "mu"), box, (0.0, 3.0, 0.0), q, _flat,
        lambda th, n, rng: q(th, rng.random(n)),
        density_fn=dens, logpdf_fn=logpdf, cdf_fn=cdf,
        mle_fn=lambda y: nelder_mead_mle(lambda th: -np.sum(logpdf(th, y)) if th[1] > 0 else np.inf, mom(y), box),
        start_fn=mom, prior_text="1(-10 <= kappa, mu <= 10) 1(sigma > 0)")


def _halfnormal_model():
    def q(th, lam):
        return th[0] * normal_quantile(0.5 * (1.0 + lam))

    def logpdf(th, y):
        s = th[0]
        return math.log(2.0) - _LOG_SQRT2PI - np.log(s) - 0.5 * (y / s) ** 2

    return ModelSpec(
        "halfnormal", ("sigma",), ((0.0, 100.0),), (3.0,), q, _flat,
        lambda th, n, rng: np.abs(rng.standard_normal(n)) * th[0],
        density_fn=lambda th, lam: np.exp(logpdf(th, q(th, lam))),
        logpdf_fn=logpdf, cdf_fn=lambda th, y: 2.0 * ndtr(y / th[0]) - 1.0,
        mle_fn=lambda y: np.array([math.sqrt(np.mean(y * y))]),
        fixed={"mu": 0.0}, prior_text="1(0 < sigma < 100)")


def _ig_cdf(mu, lm, x):
    r = np.sqrt(lm / x)
    a = ndtr(r * (x / mu - 1.0))
    b = np.exp(2.0 * lm / mu + log_ndtr(-r * (x / mu + 1.0)))
    return np.clip(a + b, 0.0, 1.0)


def _ig_logpdf(mu, lm, x):
    return 0.5 * (np.log(lm) - np.log(2.0 * math.pi) - 3.0 * np.log(x)) - lm * (x - mu) ** 2 / (2.0 * mu * mu * x)


def _ig_quantile(mu, lm, lam, tol=1e-10, maxit=200):
    """Inverse-Gaussian quantile by safeguarded Newton iteration in log x.

    Starts from the lognormal law with matching mean and coefficient of
    variation; brackets are expanded first so the iteration can fall back to
    bisection.
    """
    lam = np.asarray(lam, dtype=float)
    s2 = math.log1p(mu / lm)
    u = math.log(mu) - 0.5 * s2 + math.sqrt(s2) * normal_quantile(lam)
    lo, hi = u - 1.0, u + 1.0
    for _ in range(100):
        bad = _ig_cdf(mu, lm, np.exp(lo)) > lam
        if not bad.any():
            break
        lo = np.where(bad, lo - 2.0, lo)
    for _ in range(100):
        bad = _ig_cdf(mu, lm, np.exp(hi)) < lam
        if not bad.any():
            break
        hi = np.where(bad, hi + 2.0, hi)
    for _ in range(maxit):
        x = np.exp(u)
        g = _ig_cdf(mu, lm, x) - lam
        lo = np.where(g < 0, u, lo)
        hi = np.where(g > 0, u, hi)
        slope = np.exp(_ig_logpdf(mu, lm, x)) * x
        with np.errstate(all="ignore"):
            un = u - g / slope
        bad = ~np.isfinite(un) | (un <= lo) | (un >= hi)
        un = np.where(bad, 0.5 * (lo + hi), un)
        done = np.abs(un - u) <= tol
        u = un
        if done.all():
            break
    return np.exp(u)


def _ig_model():
    def q(th, lam):
        return _ig_quantile(th[0], th[1], lam)

    def mle(y):
        m = y.mean()
        return np.array([m, 1.0 / np.mean(1.0 / y - 1.0 / m)])

    return ModelSpec(
        "inverse-gaussian", ("mu", "lambda"), ((0.0, 100.0), (0.0, 100.0)), (3.0, 1.0), q, _flat,
        lambda th, n, rng: rng.wald(th[0], th[1], n),
        density_fn=lambda th, lam: np.exp(_ig_logpdf(th[0], th[1], q(th, lam))),
        logpdf_fn=lambda th, y: _ig_logpdf(th[0], th[1], y),
        cdf_fn=lambda th, y: _ig_cdf(th[0], th[1], y),
        moments_fn=lambda th: (th[0], th[0] ** 3 / th[1]),
        mle_fn=mle, prior_text="1(0 <= mu, lambda <= 100)")


def _lognormal_model():
    def q(th, lam):
        return np.exp(th[0] + th[1] * normal_quantile(lam))

    def logpdf(th, y):
        m, s = th
        ly = np.log(y)
        return -0.5 * ((ly - m) / s) ** 2 - _LOG_SQRT2PI - np.log(s) - ly

    return ModelSpec(
        "lognormal", ("mu", "sigma"), ((-10.0, 10.0), (0.0, 100.0)), (3.0, 1.0), q, _flat,
        lambda th, n, rng: np.exp(th[0] + th[1] * rng.standard_normal(n)),
        density_fn=lambda th, lam: np.exp(logpdf(th, q(th, lam))),
        logpdf_fn=logpdf, cdf_fn=lambda th, y: ndtr((np.log(y) - th[0]) / th[1]),
        mle_fn=lambda y: np.array([np.log(y).mean(), np.log(y).std()]),
        prior_text="1(-10 <= mu <= 10) 1(0 <= sigma <= 100)")


def _normal_logpdf(m, s, y):
    return -0.5 * ((y - m) / s) ** 2 - _LOG_SQRT2PI - np.log(s)


def _normal_mean_model():
    return ModelSpec(
        "normal-mean", ("mu",), ((-_INF, _INF),), (3.0,),
        lambda th, lam: th[0] + normal_quantile(lam),
        lambda th: -th[0] ** 2 / 200.0,
        lambda th, n, rng: th[0] + rng.standard_normal(n),
        density_fn=lambda th, lam: np.exp(-0.5 * normal_quantile(lam) ** 2 - _LOG_SQRT2PI),
        logpdf_fn=lambda th, y: _normal_logpdf(th[0], 1.0, y),
        cdf_fn=lambda th, y: ndtr(y - th[0]),
        moments_fn=lambda th: (th[0], 1.0),
        mle_fn=lambda y: np.array([y.mean()]),
        fixed={"sigma": 1.0}, prior_text="exp(-mu^2 / 200)")


def _normal_scale_model():
    return ModelSpec(
        "normal-scale", ("sigma",), ((0.0, _INF),), (1.0,),
        lambda th, lam: 3.0 + th[0] * normal_quantile(lam),
        # printed as e^{-1/sigma^2} exp(-sigma^{-2}); kept literally
        lambda th: -2.0 / th[0] ** 2,
        lambda th, n, rng: 3.0 + th[0] * rng.standard_normal(n),
        density_fn=lambda th, lam: np.exp(-0.5 * normal_quantile(lam) ** 2 - _LOG_SQRT2PI) / th[0],
        logpdf_fn=lambda th, y: _normal_logpdf(3.0, th[0], y),
        cdf_fn=lambda th, y: ndtr((y - 3.0) / th[0]),
        moments_fn=lambda th: (3.0, th[0] ** 2),
        mle_fn=lambda y: np.array([math.sqrt(np.mean((y - 3.0) ** 2))]),
        fixed={"mu": 3.0}, prior_text="exp(-1/sigma^2) exp(-sigma^-2)")


def _normal_model():
    return ModelSpec(
        "normal", ("mu", "sigma"), ((-_INF, _INF), (0.0, _INF)), (3.0, 1.0),
        lambda th, lam: th[0] + th[1] * normal_quantile(lam),
        lambda th: -th[0] ** 2 / (200.0 * th[1] ** 2) - 1.0 / th[1] ** 2,
        lambda th, n, rng: th[0] + th[1] * rng.standard_normal(n),
        density_fn=lambda th, lam: np.exp(-0.5 * normal_quantile(lam) ** 2 - _LOG_SQRT2PI) / th[1],
        logpdf_fn=lambda th, y: _normal_logpdf(th[0], th[1], y),
        cdf_fn=lambda th, y: ndtr((y - th[0]) / th[1]),
        moments_fn=lambda th: (th[0], th[1] ** 2),
        mle_fn=lambda y: np.array([y.mean(), y.std()]),
        prior_text="exp(-mu^2 / (2 sigma^2 100) - sigma^-2)")


def _t_model():
    def q(th, lam):
        return th[0] + th[1] * stdtrit(th[2], lam)

    def logpdf(th, y):
        m, s, v = th
        z = (y - m) / s
        return (gammaln(0.5 * (v + 1)) - gammaln(0.5 * v) - 0.5 * np.log(v * math.pi) - np.log(s)
                - 0.5 * (v + 1) * np.log1p(z * z / v))

    def start(y):
        med = float(np.median(y))
        return np.array([med, 1.4826 * float(np.median(np.abs(y - med))), 10.0])

    box = ((-_INF, _INF), (0.0, _INF), (3.0, 40.0))
    return ModelSpec(
        "student-t", ("mu", "sigma", "nu"), box, (3.0, 1.0, 4.0), q,
        lambda th: -th[0] ** 2 / 200.0 - th[1],
        lambda th, n, rng: th[0] + th[1] * rng.standard_t(th[2], n),
        density_fn=lambda th, lam: np.exp(logpdf(th, q(th, lam))),
        logpdf_fn=logpdf, cdf_fn=lambda th, y: stdtr(th[2], (y - th[0]) / th[1]),
        mle_fn=lambda y: nelder_mead_mle(lambda th: -np.sum(logpdf(th, y)) if th[1] > 0 else np.inf, start(y), box),
        start_fn=start, prior_text="exp(-mu^2/200 - sigma) 1(3 <= nu <= 40)")


def _uniform_model():
    return ModelSpec(
        "uniform", ("theta",), ((0.0, _INF),), (3.0,),
        lambda th, lam: lam * th[0],
        lambda th: -np.log(th[0]),
        lambda th, n, rng: rng.random(n) * th[0],
        density_fn=lambda th, lam: np.full(np.shape(lam), 1.0 / th[0]),
        logpdf_fn=lambda th, y: np.where((y >= 0) & (y <= th[0]), -np.log(th[0]), -np.inf),
        cdf_fn=lambda th, y: np.clip(y / th[0], 0.0, 1.0),
        mle_fn=lambda y: np.array([y.max()]),
        fixed={"lower": 0.0}, prior_text="theta^-1")


def _weibull_model():
    def q(th, lam):
        return th[0] * (-np.log1p(-lam)) ** (1.0 / th[1])

    def logpdf(th, y):
        a, b = th
        z = y / a
        return np.log(b / a) + (b - 1) * np.log(z) - z ** b

    def start(y):
        ly = np.log(y)
        b = math.pi / (ly.std() * math.sqrt(6.0))
        return np.array([math.exp(ly.mean() + _EULER / b), b])

    box = ((0.0, 100.0), (0.0, 100.0))
    return ModelSpec(
        "weibull", ("A", "B"), box, (3.0, 1.0), q, _flat,
        lambda th, n, rng: th[0] * rng.weibull(th[1], n),
        density_fn=lambda th, lam: (th[1] / th[0]) * (-np.log1p(-lam)) ** ((th[1] - 1) / th[1]) * (1.0 - lam),
        logpdf_fn=logpdf, cdf_fn=lambda th, y: -np.expm1(-(y / th[0]) ** th[1]),
        mle_fn=lambda y: nelder_mead_mle(lambda th: -np.sum(logpdf(th, y)) if np.all(th > 0) else np.inf, start(y), box),
        start_fn=start, prior_text="1(0 <= A, B <= 100)")


# --- discrete models (normal surrogate) -------------------------------------

def _bernoulli_model():
    return ModelSpec(
        "bernoulli", ("theta",), ((0.0, 1.0),), (1.0 / 3.0,), None, _flat,
        lambda th, n, rng: (rng.random(n) < th[0]).astype(float),
        moments_fn=lambda th: (th[0], th[0] * (1.0 - th[0])),
        mle_fn=lambda y: np.array([y.mean()]),
        discrete=True, prior_text="1(0 < theta < 1)")


def _geometric_model():
    return ModelSpec(
        "geometric", ("theta",), ((0.0, 1.0),), (1.0 / 3.0,), None, _flat,
        lambda th, n, rng: (rng.geometric(th[0], n) - 1).astype(float),
        moments_fn=lambda th: ((1.0 - th[0]) / th[0], (1.0 - th[0]) / th[0] ** 2),
        mle_fn=lambda y: np.array([1.0 / (1.0 + y.mean())]),
        discrete=True, prior_text="1(0 < theta < 1)")


def _negbin_model(r: float = 3.0):
    return ModelSpec(
        "negative-binomial", ("theta",), ((0.0, 1.0),), (1.0 / 3.0,), None, _flat,
        lambda th, n, rng: rng.negative_binomial(r, th[0], n).astype(float),
        moments_fn=lambda th: (r * (1.0 - th[0]) / th[0], r * (1.0 - th[0]) / th[0] ** 2),
        mle_fn=lambda y: np.array([r / (r + y.mean())]),
        discrete=True, fixed={"r": r}, prior_text="1(0 < theta < 1)")


def _poisson_model():
    return ModelSpec(
        "poisson", ("theta",), ((0.0, _INF),), (3.0,), None, lambda th: -th[0],
        lambda th, n, rng: rng.poisson(th[0], n).astype(float),
        moments_fn=lambda th: (th[0], th[0]),
        mle_fn=lambda y: np.array([y.mean()]),
        discrete=True, prior_text="exp(-theta)")


_BUILDERS = {
    "bernoulli": _bernoulli_model,
    "beta": _beta_model,
    "birnbaum-saunders": _bs_model,
    "burr": _burr_model,
    "exponential": _exponential_model,
    "gamma": _gamma_model,
    "geometric": _geometric_model,
    "gev": _gev_model,
    "halfnormal": _halfnormal_model,
    "inverse-gaussian": _ig_model,
    "lognormal": _lognormal_model,
    "negative-binomial": _negbin_model,
    "normal-mean": _normal_mean_model,
    "normal-scale": _normal_scale_model,
    "normal": _normal_model,
    "poisson": _poisson_model,
    "student-t": _t_model,
    "uniform": _uniform_model,
    "weibull": _weibull_model,
}

BASIC_MODEL_NAMES = tuple(_BUILDERS)


def basic_models() -> dict:
    """Catalog of the 19 basic models keyed by name (insertion order as listed)."""
    return {name: build() for name, build in _BUILDERS.items()}


def get_basic_model(name: str) -> ModelSpec:
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise KeyError(f"unknown model {name!r}; choose from {', '.join(BASIC_MODEL_NAMES)}") from None
