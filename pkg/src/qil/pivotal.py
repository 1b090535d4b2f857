"""Pivotal statistic of sample quantiles and the chi-square QIL built on it.

For probabilities ``lambda_1 < ... < lambda_d`` the asymptotic covariance of
the scaled sample quantiles is ``V = D^{-1} K D^{-1}`` with
``K_jk = min(lambda_j, lambda_k) - lambda_j lambda_k`` (the Brownian bridge
kernel) and ``D = diag(f(q(lambda_j)))``.  The statistic

    t = n (qhat - q)' V^{-1} (qhat - q)

is asymptotically chi-square with ``d`` degrees of freedom.  ``K`` has a
tridiagonal inverse, so ``t`` reduces to a sum over consecutive differences of
``z_j = f_j (qhat_j - q_j)``, which is what :func:`pivotal_statistic` computes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import DegenerateModel, DegenerateQuantiles, NumericalError
from .quantiles import QuantileGrid, as_dataset, equispaced_lambdas, sample_quantiles, select_d
from .special import chi2_log_norm, normal_pdf, normal_quantile

__all__ = [
    "T_FLOOR",
    "LAMBDA0",
    "PivotalResult",
    "DensityAtQuantiles",
    "log_qil_from_t",
    "equiprobability_density",
    "bridge_quadratic_form",
    "dense_quadratic_form",
    "pivotal_statistic",
    "model_densities",
    "log_qil_iid",
    "log_qil_composite",
    "discrete_normal_surrogate",
    "pivotal_terms_iid",
]

T_FLOOR = 1e-12
LAMBDA0 = 1e-4


@dataclass(frozen=True)
class PivotalResult:
    t: float
    d: int
    log_qil: float


@dataclass(frozen=True)
class DensityAtQuantiles:
    f_vals: np.ndarray
    source: str  # "analytic" or "equiprobability"


def log_qil_from_t(t, d):
    """chi-square log-density of ``t`` with the floor ``t >= T_FLOOR`` applied."""
    tt = np.maximum(np.asarray(t, dtype=float), T_FLOOR)
    d = np.asarray(d, dtype=float)
    out = (0.5 * d - 1.0) * np.log(tt) - 0.5 * tt - chi2_log_norm(d)
    return out if np.ndim(out) else float(out)


def equiprobability_density(q_ext) -> DensityAtQuantiles:
    """Piecewise-constant density over quantile bins.

    Parameters
    ----------
    q_ext : array_like
        Model quantiles at ``lambda_0, lambda_1, ..., lambda_d`` (length d + 1).

    Returns
    -------
    DensityAtQuantiles
        ``f_j = 1 / ((d + 1) (q_j - q_{j-1}))`` for ``j = 1..d``.
    """
    q = np.asarray(q_ext, dtype=float)
    gaps = np.diff(q)
    if q.size < 2 or np.any(~(gaps > 0)):
        raise DegenerateQuantiles("model quantiles must be strictly increasing")
    d = q.size - 1
    return DensityAtQuantiles(1.0 / ((d + 1) * gaps), "equiprobability")


def _bridge_sum(lambdas: np.ndarray, z: np.ndarray) -> float:
    zz = np.concatenate(([0.0], z, [0.0]))
    ll = np.concatenate(([0.0], lambdas, [1.0]))
    return float(np.sum(np.diff(zz) ** 2 / np.diff(ll)))


def bridge_quadratic_form(lambdas, z) -> float:
    """``z' K^{-1} z`` for the Brownian bridge kernel in O(d)."""
    return _bridge_sum(np.asarray(lambdas, dtype=float), np.asarray(z, dtype=float))


def dense_quadratic_form(lambdas, z) -> float:
    """Same quadratic form through an explicit Cholesky solve (test oracle)."""
    lam = np.asarray(lambdas, dtype=float)
    z = np.asarray(z, dtype=float)
    k = np.minimum.outer(lam, lam) - np.outer(lam, lam)
    c = cho_factor(k, lower=True)
    return float(z @ cho_solve(c, z))


def pivotal_statistic(qhat, q_model, f_vals, n=None, lambdas=None, dense=False) -> PivotalResult:
    """Pivotal statistic ``t`` and its chi-square log-density.

    Parameters
    ----------
    qhat : QuantileGrid or array_like
        Sample quantiles.  When an array is passed, ``n`` and ``lambdas`` are
        required.
    q_model : array_like
        Model quantiles at the same probabilities.
    f_vals : DensityAtQuantiles or array_like
        Model density at the model quantiles.
    dense : bool
        Use the Cholesky path (only for d <= 512; meant as an oracle).
    """
    if isinstance(qhat, QuantileGrid):
        lam, qh, n = qhat.lambdas, qhat.qhat, qhat.n
    else:
        if n is None or lambdas is None:
            raise ValueError("n and lambdas are required with a raw qhat vector")
        lam, qh = np.asarray(lambdas, dtype=float), np.asarray(qhat, dtype=float)
    f = f_vals.f_vals if isinstance(f_vals, DensityAtQuantiles) else np.asarray(f_vals, dtype=float)
    qm = np.asarray(q_model, dtype=float)
    if not (qh.shape == qm.shape == f.shape == lam.shape):
        raise ValueError("qhat, q_model, f_vals and lambdas must have equal length")
    z = f * (qh - qm)
    if not np.all(np.isfinite(z)):
        raise NumericalError("nonfinite residual in pivotal statistic")
    if dense:
        if lam.size > 512:
            raise ValueError("dense path limited to d <= 512")
        quad = dense_quadratic_form(lam, z)
    else:
        quad = _bridge_sum(lam, z)
    t = n * quad
    d = lam.size
    return PivotalResult(float(t), d, log_qil_from_t(t, d))


def model_densities(model, theta, lambdas, q_model=None, lambda0=LAMBDA0) -> DensityAtQuantiles:
    """Analytic density at the model quantiles, else the equiprobability fallback."""
    if model.has_density:
        return DensityAtQuantiles(np.asarray(model.density_at_quantile(theta, lambdas), dtype=float), "analytic")
    ext = np.concatenate(([lambda0], lambdas))
    return equiprobability_density(model.quantile(theta, ext))


def discrete_normal_surrogate(model, theta, grid: QuantileGrid):
    """Normal-quantile surrogate used for discrete models.

    Both model and sample quantiles are replaced by normal quantiles, using the
    model mean/variance at ``theta`` and the sample mean/variance.

    Returns
    -------
    (q_model, qhat, f_vals) : tuple of ndarray
    """
    mu, var = model.moments(theta)
    if not (var > 0) or not np.isfinite(mu):
        raise DegenerateModel(f"{model.name}: model variance is zero at theta={theta}")
    z = normal_quantile(grid.lambdas)
    sd = np.sqrt(var)
    q_model = mu + sd * z
    s_sd = np.sqrt(max(grid.sample_var, 0.0))
    qhat = grid.sample_mean + s_sd * z
    f_vals = normal_pdf(z) / sd
    return q_model, qhat, f_vals


def _grid_for(data_or_grid, epsilon) -> QuantileGrid:
    if isinstance(data_or_grid, QuantileGrid):
        return data_or_grid
    return select_d(as_dataset(data_or_grid), epsilon)


def log_qil_iid(data_or_grid, model, theta, epsilon: float = 0.01, lambda0: float = LAMBDA0) -> PivotalResult:
    """QIL of iid data at ``theta``.

    Parameters
    ----------
    data_or_grid : QuantileGrid, Dataset or array_like
        Precomputed grid, or raw data from which ``select_d(data, epsilon)``
        builds one.  Pass a grid inside optimization loops.
    model : ModelSpec
    theta : array_like
    epsilon : float
        Kolmogorov tolerance used when raw data are given.

    Returns
    -------
    PivotalResult
        ``log_qil`` is ``-inf`` when ``theta`` lies outside the model box or
        the model quantiles are not usable there.
    """
    grid = _grid_for(data_or_grid, epsilon)
    theta = np.asarray(theta, dtype=float)
    d = grid.d
    if not model.in_box(theta):
        return PivotalResult(float("inf"), d, float("-inf"))
    try:
        with np.errstate(all="ignore"):
            if model.discrete:
                q_model, qhat, f = discrete_normal_surrogate(model, theta, grid)
                grid = QuantileGrid(grid.lambdas, qhat, grid.n)
            else:
                q_model = np.asarray(model.quantile(theta, grid.lambdas), dtype=float)
                f = model_densities(model, theta, grid.lambdas, q_model, lambda0).f_vals
        if not (np.all(np.isfinite(q_model)) and np.all(np.isfinite(f)) and np.all(f > 0)):
            return PivotalResult(float("inf"), d, float("-inf"))
        return pivotal_statistic(grid, q_model, f)
    except (DegenerateQuantiles, DegenerateModel, NumericalError, ArithmeticError):
        return PivotalResult(float("inf"), d, float("-inf"))


def _group_grid(item) -> QuantileGrid:
    if isinstance(item, QuantileGrid):
        return item
    data, d = item
    if isinstance(d, QuantileGrid):
        return d
    ds = as_dataset(data)
    d = int(d)
    if d >= ds.n:
        return select_d(ds, 0.0)
    return sample_quantiles(ds, equispaced_lambdas(d))


def log_qil_composite(groups: Iterable, model, theta, lambda0: float = LAMBDA0) -> float:
    """Composite QIL: sum of per-group log-QIL values.

    Parameters
    ----------
    groups : iterable
        Each item is a :class:`QuantileGrid` or a pair ``(data_k, d_k)`` where
        ``d_k`` is an integer number of quantiles (or a QuantileGrid).
    """
    total = 0.0
    for item in groups:
        total += log_qil_iid(_group_grid(item), model, theta, lambda0=lambda0).log_qil
    return total


def pivotal_terms_iid(grids: Sequence[QuantileGrid], model, theta, lambda0: float = LAMBDA0):
    """List of ``(t_k, d_k)`` pairs for least-squares mode."""
    return [(r.t, r.d) for r in (log_qil_iid(g, model, theta, lambda0=lambda0) for g in grids)]
