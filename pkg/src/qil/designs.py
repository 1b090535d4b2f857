"""Simulation designs used by the benchmarks and the CLI."""

from __future__ import annotations

import numpy as np

from .glm import RegressionData
from .models.base import as_rng

__all__ = [
    "LOGIT_BETA",
    "LOGIT_BETA_100",
    "WALLENIUS_M",
    "WALLENIUS_THETA",
    "ar1_covariance",
    "logit_design",
    "sparse_precision_design",
    "skewnormal_design_data",
]

LOGIT_BETA = np.array([0.0, 3.0, 1.5, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0])
# 100 slopes: the 8-slope pattern repeated, plus the intercept
LOGIT_BETA_100 = np.concatenate(([0.0], np.resize(LOGIT_BETA[1:], 100)))
WALLENIUS_M = np.array([2, 4, 8, 2, 4, 2])
WALLENIUS_THETA = np.array([0.10, 0.17, 0.12, 0.29, 0.14, 0.18])


def ar1_covariance(p: int, rho: float = 0.5) -> np.ndarray:
    """``Sigma_jl = rho^|j - l|``."""
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def logit_design(n: int, beta=LOGIT_BETA, rho: float = 0.5, seed=None) -> RegressionData:
    """Logit data with an intercept column and AR(``rho``) normal covariates."""
    rng = as_rng(seed)
    beta = np.asarray(beta, dtype=float)
    p = beta.size - 1
    chol = np.linalg.cholesky(ar1_covariance(p, rho))
    x = rng.standard_normal((int(n), p)) @ chol.T
    X = np.column_stack((np.ones(int(n)), x))
    prob = 1.0 / (1.0 + np.exp(-(X @ beta)))
    y = (rng.random(int(n)) < prob).astype(float)
    names = tuple(f"beta{j}" for j in range(p + 1))
    return RegressionData(X, y, names)


def sparse_precision_design(p: int = 10, n_nonzero: int = 10, seed=None, max_tries: int = 10000):
    """Sparse precision matrix with unit diagonal and ``n_nonzero`` partial correlations.

    ``n_nonzero`` off-diagonal pairs are chosen at random and given partial
    correlation ``rho ~ U(-1, 1)`` (so ``omega_jk = -rho``); the draw is
    repeated until the matrix is positive definite.

    Returns
    -------
    (omega, sigma, pairs) : (ndarray, ndarray, list of (j, k))
    """
    rng = as_rng(seed)
    iu = np.triu_indices(p, 1)
    for _ in range(max_tries):
        om = np.eye(p)
        pick = rng.choice(iu[0].size, n_nonzero, replace=False)
        rho = rng.uniform(-1.0, 1.0, n_nonzero)
        for k, r in zip(pick, rho):
            i, j = iu[0][k], iu[1][k]
            om[i, j] = om[j, i] = -r
        if np.linalg.eigvalsh(om).min() > 1e-8:
            pairs = sorted((int(iu[0][k]), int(iu[1][k])) for k in pick)
            return om, np.linalg.inv(om), pairs
    raise RuntimeError("could not draw a positive definite sparse precision matrix")


def skewnormal_design_data(n: int, sigma, alpha=None, seed=None, standardize: bool = True) -> np.ndarray:
    """Draws from SN_p(0, sigma, alpha) (normal when ``alpha`` is None), column-standardized."""
    from .depth import skewnormal_simulate
    from .quantiles import standardize as _std

    p = np.asarray(sigma).shape[0]
    a = np.zeros(p) if alpha is None else np.asarray(alpha, dtype=float)
    y = skewnormal_simulate(np.zeros(p), sigma, a, n, seed)
    return _std(y) if standardize else y
