"""Mahalanobis depth, the D_R transform and the multivariate QIL.

For ``y`` with location ``mu`` and precision ``Omega`` the Mahalanobis
distance ``M = (y - mu)' Omega (y - mu)`` is chi-square with ``p`` degrees of
freedom under multivariate normal and skew-normal laws, so
``D_R = 1 - F_chi2_p(M)`` is uniform on (0, 1).  The multivariate QIL compares
sample quantiles of the ``D_R`` values with the uniform quantiles ``lambda``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateScatter, InvalidPrecision, NumericalError
from .models.base import as_rng
from .pivotal import PivotalResult, log_qil_from_t, pivotal_statistic
from .quantiles import equispaced_lambdas, kolmogorov_gap, select_d
from .special import chi2_sf

__all__ = [
    "PrecisionMatrix",
    "mahalanobis_depth",
    "mahalanobis_distances",
    "dr_transform",
    "log_qil_multivariate",
    "log_qil_multivariate_batch",
    "sample_wishart",
    "partial_correlations",
    "partial_variances",
    "robust_location_scatter",
    "CoresetResult",
    "depth_coreset",
    "skewnormal_simulate",
]


@dataclass(frozen=True)
class PrecisionMatrix:
    """Symmetric PSD precision matrix (the inverse covariance).

    Raises
    ------
    InvalidPrecision
        If the matrix is not square and symmetric, has a nonpositive diagonal
        entry, or an eigenvalue below ``-1e-10`` (relative to its scale).
    """

    omega: np.ndarray

    def __post_init__(self):
        om = np.array(self.omega, dtype=float)
        if om.ndim != 2 or om.shape[0] != om.shape[1]:
            raise InvalidPrecision("precision matrix must be square")
        if not np.all(np.isfinite(om)):
            raise InvalidPrecision("precision matrix has nonfinite entries")
        scale = max(1.0, float(np.max(np.abs(om))))
        if np.max(np.abs(om - om.T)) > 1e-12 * scale:
            raise InvalidPrecision("precision matrix must be symmetric")
        if np.any(~(np.diag(om) > 0)):
            raise InvalidPrecision("precision matrix needs a positive diagonal")
        om = 0.5 * (om + om.T)
        if np.linalg.eigvalsh(om).min() < -1e-10 * scale:
            raise InvalidPrecision("precision matrix must be positive semidefinite")
        om.setflags(write=False)
        object.__setattr__(self, "omega", om)

    @property
    def p(self) -> int:
        return int(self.omega.shape[0])

    def partial_correlations(self) -> np.ndarray:
        return partial_correlations(self.omega)

    def partial_variances(self) -> np.ndarray:
        return partial_variances(self.omega)


def _omega(x) -> np.ndarray:
    return x.omega if isinstance(x, PrecisionMatrix) else np.asarray(x, dtype=float)


def mahalanobis_distances(y, mu, sigma_inv) -> np.ndarray:
    """``M_i = (y_i - mu)' Omega (y_i - mu)`` for each row of ``y``."""
    om = _omega(sigma_inv)
    r = np.atleast_2d(np.asarray(y, dtype=float)) - np.asarray(mu, dtype=float)
    if r.shape[-1] != om.shape[0]:
        raise ValueError("dimension mismatch between y and the precision matrix")
    m = np.einsum("ij,jk,ik->i", r, om, r)
    if not np.all(np.isfinite(m)):
        raise NumericalError("nonfinite Mahalanobis distance")
    return np.maximum(m, 0.0)


def mahalanobis_depth(y, mu, sigma_inv):
    """Mahalanobis distance ``M`` and depth ``D_M = 1/(1 + M)``.

    Scalars for a single p-vector, arrays for an n x p matrix.
    """
    single = np.ndim(y) == 1
    m = mahalanobis_distances(y, mu, sigma_inv)
    dm = 1.0 / (1.0 + m)
    if single:
        return float(m[0]), float(dm[0])
    return m, dm


def dr_transform(M, p: int):
    """``D_R = 1 - F_chi2_p(M)``: uniform on (0, 1) under the model."""
    return chi2_sf(M, p)


def _check_precision(om: np.ndarray) -> None:
    if om.ndim == 2:
        diag = np.diag(om)
    else:
        diag = np.diagonal(om, axis1=-2, axis2=-1)
    if np.any(~(diag > 0)):
        raise InvalidPrecision("precision matrix needs a positive diagonal")


def log_qil_multivariate(data, omega, epsilon: float = 0.0, mu=None) -> PivotalResult:
    """Multivariate QIL for (standardized) data given a precision matrix.

    The model quantiles are the uniform quantiles ``lambda_j`` and the model
    density is identically 1.  ``epsilon = 0`` uses all n depth values.
    """
    x = np.asarray(data, dtype=float)
    om = _omega(omega)
    _check_precision(om)
    p = x.shape[1]
    m = mahalanobis_distances(x, np.zeros(p) if mu is None else mu, om)
    dr = dr_transform(m, p)
    grid = select_d(dr, epsilon)
    return pivotal_statistic(grid, grid.lambdas, np.ones(grid.d))


def log_qil_multivariate_batch(data, omegas, d: Optional[int] = None, return_t: bool = False):
    """Vectorized multivariate QIL over a stack of precision matrices.

    Parameters
    ----------
    data : (n, p) array
    omegas : (S, p, p) array
    d : int, optional
        Number of equispaced quantiles; ``None`` (or ``d >= n``) uses all n
        order statistics with ``lambda_j = j/(n+1)``.

    Returns
    -------
    ndarray
        (S,) log-QIL values, or ``(log_qil, t)`` when ``return_t``.
    """
    x = np.asarray(data, dtype=float)
    oms = np.asarray(omegas, dtype=float)
    _check_precision(oms)
    n, p = x.shape
    m = np.einsum("np,spq,nq->sn", x, oms, x)
    dr = np.sort(chi2_sf(np.maximum(m, 0.0), p), axis=1)
    if d is None or d >= n:
        lam = np.arange(1, n + 1) / (n + 1.0)
        qhat = dr
    else:
        lam = equispaced_lambdas(d)
        h = (n - 1) * lam
        lo = np.floor(h).astype(int)
        hi = np.minimum(lo + 1, n - 1)
        qhat = dr[:, lo] + (h - lo) * (dr[:, hi] - dr[:, lo])
    S = qhat.shape[0]
    z = np.concatenate((np.zeros((S, 1)), qhat - lam, np.zeros((S, 1))), axis=1)
    ll = np.concatenate(([0.0], lam, [1.0]))
    t = n * np.sum(np.diff(z, axis=1) ** 2 / np.diff(ll), axis=1)
    lq = log_qil_from_t(t, lam.size)
    return (lq, t) if return_t else lq


def sample_wishart(scale, df: int, seed=None, size: Optional[int] = None):
    """Outer-product Wishart draws ``Omega = sum_i x_i x_i'`` with ``x_i ~ N(0, scale)``.

    ``df < p`` gives a singular draw of rank ``df``.  Returns a
    :class:`PrecisionMatrix` when ``size`` is None, else an (size, p, p) array.
    """
    if int(df) != df or df < 1:
        raise ValueError("df must be a positive integer")
    rng = as_rng(seed)
    sc = np.asarray(scale, dtype=float)
    p = sc.shape[0]
    chol = np.linalg.cholesky(sc)
    k = 1 if size is None else int(size)
    xs = rng.standard_normal((k, int(df), p)) @ chol.T
    oms = np.einsum("sip,siq->spq", xs, xs)
    if size is None:
        return PrecisionMatrix(oms[0])
    return oms


def partial_correlations(omega) -> np.ndarray:
    """``-omega_jk / sqrt(omega_jj omega_kk)`` (unit diagonal); works on stacks."""
    om = _omega(omega)
    dg = np.sqrt(np.diagonal(om, axis1=-2, axis2=-1))
    pc = -om / (dg[..., :, None] * dg[..., None, :])
    idx = np.arange(om.shape[-1])
    pc[..., idx, idx] = 1.0
    return pc


def partial_variances(omega) -> np.ndarray:
    """``1 / omega_jj``; works on stacks."""
    return 1.0 / np.diagonal(_omega(omega), axis1=-2, axis2=-1)


def robust_location_scatter(x, trim: float = 0.05):
    """One-step reweighted moments: drop the ``trim`` share of largest-M rows once.

    Raises
    ------
    DegenerateScatter
        If either scatter estimate is singular.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]

    def moments(rows):
        mu = rows.mean(axis=0)
        sig = np.atleast_2d(np.cov(rows, rowvar=False))
        try:
            prec = np.linalg.inv(np.linalg.cholesky(sig))
        except np.linalg.LinAlgError:
            raise DegenerateScatter("scatter matrix is singular") from None
        return mu, sig, prec.T @ prec

    mu, sig, prec = moments(x)
    m = mahalanobis_distances(x, mu, prec)
    n_keep = n - int(np.floor(trim * n))
    keep = np.argsort(m, kind="stable")[:n_keep]
    mu, sig, prec = moments(x[keep])
    return mu, sig, prec


@dataclass(frozen=True)
class CoresetResult:
    indices: np.ndarray
    depths: np.ndarray
    lambdas: np.ndarray
    gap: float

    @property
    def d(self) -> int:
        return int(self.indices.size)


def depth_coreset(x, epsilon: float) -> CoresetResult:
    """Rows whose Mahalanobis depths sit at the d(epsilon) depth quantiles.

    Depths use the robust moments of :func:`robust_location_scatter`.  Each
    quantile ``lambda_j`` maps to the order statistic of rank
    ``ceil(lambda_j n)``; starting at d(epsilon) the number of quantiles grows
    until the selected depth values themselves satisfy the Kolmogorov bound.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    mu, _, prec = robust_location_scatter(x)
    _, depth = mahalanobis_depth(x, mu, prec)
    depth = np.atleast_1d(depth)
    order = np.argsort(depth, kind="stable")
    ys = depth[order]
    d0 = select_d(ys, epsilon).d
    for d in range(d0, n + 1):
        lam = np.arange(1, d + 1) / (d + 1.0)
        ranks = np.clip(np.ceil(lam * n).astype(int), 1, n)
        gap = kolmogorov_gap(ys, ys[ranks - 1])
        if gap <= epsilon:
            break
    rows = np.sort(order[ranks - 1])
    return CoresetResult(rows, ys[ranks - 1], lam, float(gap))


def skewnormal_simulate(xi, Sigma, alpha, n: int, seed=None) -> np.ndarray:
    """Multivariate skew-normal draws by the conditioning construction.

    With ``omega = diag(Sigma)^{1/2}``, correlation ``R`` and
    ``delta = R alpha / sqrt(1 + alpha' R alpha)``, draw ``(z0, z)`` jointly
    normal with unit variances and ``cov(z0, z) = delta``, flip ``z`` when
    ``z0 < 0`` and return ``xi + omega z``.
    """
    rng = as_rng(seed)
    sig = np.asarray(Sigma, dtype=float)
    p = sig.shape[0]
    a = np.asarray(alpha, dtype=float).reshape(p)
    w = np.sqrt(np.diag(sig))
    r = sig / np.outer(w, w)
    delta = r @ a / np.sqrt(1.0 + a @ r @ a)
    big = np.block([[np.ones((1, 1)), delta[None, :]], [delta[:, None], r]])
    chol = np.linalg.cholesky(big + 1e-14 * np.eye(p + 1))
    u = rng.standard_normal((int(n), p + 1)) @ chol.T
    z = np.where(u[:, :1] >= 0, u[:, 1:], -u[:, 1:])
    return np.asarray(xi, dtype=float) + z * w
