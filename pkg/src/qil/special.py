"""Chi-square and normal special functions.

The regularized incomplete gamma function is evaluated with the power series
below ``a + 1`` and a Lentz continued fraction above it, both vectorized over
numpy arrays.  Log-gamma and ``erfc`` come from :mod:`scipy.special`.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erfc, gammaln, xlogy

from .errors import InvalidProbability, InvalidStatistic

__all__ = [
    "gammainc_lower",
    "gammainc_upper",
    "chi2_logpdf",
    "chi2_log_norm",
    "chi2_cdf",
    "chi2_sf",
    "chi2_quantile",
    "normal_cdf",
    "normal_pdf",
    "normal_logpdf",
    "normal_quantile",
]

_EPS = 1e-16
_TINY = 1e-300
_MAXIT = 2000
_LN2 = math.log(2.0)
_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


def _series_p(a, x):
    """Lower regularized gamma P(a, x) by the power series (x < a + 1)."""
    ap = a.copy()
    term = 1.0 / a
    total = term.copy()
    idx = np.arange(a.size)
    act_ap, act_term, act_x = ap, term.copy(), x
    for it in range(_MAXIT):
        act_ap = act_ap + 1.0
        act_term = act_term * act_x / act_ap
        total[idx] += act_term
        if it % 8 == 7:
            live = np.abs(act_term) > np.abs(total[idx]) * _EPS
            if not live.any():
                break
            idx, act_ap, act_term, act_x = idx[live], act_ap[live], act_term[live], act_x[live]
    return np.exp(a * np.log(x) - x - gammaln(a)) * total


def _contfrac_q(a, x):
    """Upper regularized gamma Q(a, x) by modified Lentz (x >= a + 1)."""
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    idx = np.arange(a.size)
    aa = a
    for i in range(1, _MAXIT + 1):
        an = -i * (i - aa)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = b + an / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h[idx] *= delta
        if i % 8 == 0:
            live = np.abs(delta - 1.0) > _EPS
            if not live.any():
                break
            idx, aa, b, c, d = idx[live], aa[live], b[live], c[live], d[live]
    return np.exp(a * np.log(x) - x - gammaln(a)) * h


def _gammainc_pair(a, x):
    a, x = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(x, dtype=float))
    a = a.astype(float, copy=True)
    x = x.astype(float, copy=True)
    p = np.zeros(a.shape)
    q = np.ones(a.shape)
    pos = (x > 0) & np.isfinite(x)
    p[np.isposinf(x)] = 1.0
    q[np.isposinf(x)] = 0.0
    ser = pos & (x < a + 1.0)
    cf = pos & ~ser
    if ser.any():
        ps = np.clip(_series_p(a[ser], x[ser]), 0.0, 1.0)
        p[ser] = ps
        q[ser] = 1.0 - ps
    if cf.any():
        qs = np.clip(_contfrac_q(a[cf], x[cf]), 0.0, 1.0)
        q[cf] = qs
        p[cf] = 1.0 - qs
    return p, q


def gammainc_lower(a, x):
    """Regularized lower incomplete gamma P(a, x) for a > 0, x >= 0."""
    p, _ = _gammainc_pair(a, x)
    return p if p.ndim else float(p)


def gammainc_upper(a, x):
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    _, q = _gammainc_pair(a, x)
    return q if q.ndim else float(q)


def chi2_log_norm(d):
    """ln K(d) with K(d) = 2^{d/2} Gamma(d/2)."""
    d = np.asarray(d, dtype=float)
    out = 0.5 * d * _LN2 + gammaln(0.5 * d)
    return out if out.ndim else float(out)


def chi2_logpdf(t, d):
    """Natural log of the chi-square density with ``d`` degrees of freedom.

    At ``t = 0`` the value is ``-ln 2`` for ``d = 2``, ``+inf`` for ``d < 2``
    and ``-inf`` for ``d > 2``.

    Raises
    ------
    InvalidStatistic
        If any ``t`` is negative.
    """
    t = np.asarray(t, dtype=float)
    d = np.asarray(d, dtype=float)
    if np.any(t < 0):
        raise InvalidStatistic("chi-square statistic must be nonnegative")
    out = xlogy(0.5 * d - 1.0, t) - 0.5 * t - chi2_log_norm(d)
    return out if np.ndim(out) else float(out)


def chi2_cdf(t, d):
    """Chi-square cdf, P(d/2, t/2)."""
    t = np.maximum(np.asarray(t, dtype=float), 0.0)
    return gammainc_lower(0.5 * np.asarray(d, dtype=float), 0.5 * t)


def chi2_sf(t, d):
    """Chi-square survival function, Q(d/2, t/2); keeps precision in the far tail."""
    t = np.maximum(np.asarray(t, dtype=float), 0.0)
    return gammainc_upper(0.5 * np.asarray(d, dtype=float), 0.5 * t)


def _gammainc_p_scalar(a, x):
    """Scalar P(a, x) in pure Python; used inside the quantile iteration."""
    if x <= 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    pref = math.exp(a * math.log(x) - x - math.lgamma(a))
    if x < a + 1.0:
        ap, term = a, 1.0 / a
        total = term
        for _ in range(_MAXIT):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) <= abs(total) * _EPS:
                break
        return min(pref * total, 1.0)
    b = x + 1.0 - a
    c = 1.0 / _TINY
    dd = 1.0 / b
    h = dd
    for i in range(1, _MAXIT + 1):
        an = -i * (i - a)
        b += 2.0
        dd = an * dd + b
        if abs(dd) < _TINY:
            dd = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        dd = 1.0 / dd
        delta = dd * c
        h *= delta
        if abs(delta - 1.0) <= _EPS:
            break
    return max(1.0 - pref * h, 0.0)


def _chi2_logpdf_scalar(x, d):
    return (0.5 * d - 1.0) * math.log(x) - 0.5 * x - 0.5 * d * _LN2 - math.lgamma(0.5 * d)


def _chi2_quantile_scalar(u, d):
    if u == 0.0:
        return 0.0
    if u == 1.0:
        return math.inf
    h = 2.0 / (9.0 * d)
    z = float(_lower_half_quantile(np.array([min(u, 1.0 - u)]))[0])
    z = -z if u > 0.5 else z
    x = d * (1.0 - h + z * math.sqrt(h)) ** 3
    if not x > 0:
        # small-t expansion P ~ (t/2)^{d/2} / Gamma(d/2 + 1)
        x = 2.0 * math.exp((math.log(u) + math.lgamma(0.5 * d + 1.0)) / (0.5 * d))
    lo, hi = 0.0, max(2.0 * x, 1.0)
    while _gammainc_p_scalar(0.5 * d, 0.5 * hi) < u:
        lo, hi = hi, 2.0 * hi
    for _ in range(200):
        f = _gammainc_p_scalar(0.5 * d, 0.5 * x) - u
        if f > 0:
            hi = min(hi, x)
        else:
            lo = max(lo, x)
        dens = math.exp(_chi2_logpdf_scalar(x, d)) if x > 0 else 0.0
        x_new = x - f / dens if dens > 0 else 0.5 * (lo + hi)
        if not (lo < x_new < hi) or not math.isfinite(x_new):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 1e-13 * max(x_new, 1e-300):
            return x_new
        x = x_new
    return x


def chi2_quantile(u, d):
    """Inverse chi-square cdf by safeguarded Newton iteration.

    Parameters
    ----------
    u : float or array_like
        Probabilities in [0, 1].
    d : float or array_like
        Degrees of freedom (> 0).

    Raises
    ------
    InvalidProbability
        If any ``u`` lies outside [0, 1].
    """
    u_arr = np.asarray(u, dtype=float)
    if np.any(~((u_arr >= 0) & (u_arr <= 1))):
        raise InvalidProbability("chi2_quantile requires u in [0, 1]")
    u_b, d_b = np.broadcast_arrays(u_arr, np.asarray(d, dtype=float))
    out = np.array([_chi2_quantile_scalar(float(a), float(b)) for a, b in zip(u_b.ravel(), d_b.ravel())])
    out = out.reshape(u_b.shape)
    return out if out.ndim else float(out)


def normal_cdf(x):
    x = np.asarray(x, dtype=float)
    out = 0.5 * erfc(-x / _SQRT2)
    return out if out.ndim else float(out)


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x) / _SQRT2PI
    return out if out.ndim else float(out)


def normal_logpdf(x):
    x = np.asarray(x, dtype=float)
    out = -0.5 * x * x - math.log(_SQRT2PI)
    return out if out.ndim else float(out)


# Acklam's rational approximation, relative error about 1.15e-9 before polishing.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _lower_half_quantile(p):
    """Normal quantile for p in (0, 0.5], returned with one Halley polish."""
    x = np.empty_like(p)
    tail = p < _P_LOW
    if tail.any():
        q = np.sqrt(-2.0 * np.log(p[tail]))
        x[tail] = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    mid = ~tail
    if mid.any():
        q = p[mid] - 0.5
        r = q * q
        x[mid] = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
            ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    e = 0.5 * erfc(-x / _SQRT2) - p
    u = e * _SQRT2PI * np.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def normal_quantile(u):
    """Inverse standard-normal cdf.

    Raises
    ------
    InvalidProbability
        If any ``u`` is outside the open interval (0, 1).
    """
    u = np.asarray(u, dtype=float)
    if np.any(~((u > 0) & (u < 1))):
        raise InvalidProbability("normal_quantile requires u in (0, 1)")
    flat = u.ravel()
    out = np.empty_like(flat)
    upper = flat > 0.5
    if upper.any():
        out[upper] = -_lower_half_quantile(1.0 - flat[upper])
    if (~upper).any():
        out[~upper] = _lower_half_quantile(flat[~upper])
    out = out.reshape(u.shape)
    return out if out.ndim else float(out)
