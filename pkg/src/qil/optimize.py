"""Point estimation of the QIL posterior: penalized least squares and penalized QIL.

Both estimators run box-constrained Nelder-Mead from several starts, restart
once from the incumbent with a shrunk simplex, and attach a finite-difference
Hessian covariance when it is positive definite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import NoConvergence

__all__ = [
    "ObjectiveSpec",
    "EstimateResult",
    "wilson_hilferty_loss",
    "fd_hessian",
    "hessian_covariance",
    "minimize_box",
    "pls_estimate",
    "plm_estimate",
]


@dataclass
class ObjectiveSpec:
    """Log-posterior target built from a QIL and a prior.

    Attributes
    ----------
    log_lik : callable
        ``theta -> log-QIL``.  ``-inf`` marks an unusable parameter.
    param_dim : int
    box : sequence of (lower, upper)
    log_prior : callable, optional
        ``theta -> log prior density``; flat when omitted.
    pivotal_terms : callable, optional
        ``theta -> [(t_k, d_k), ...]`` for the least-squares estimator.
    batch_log_lik : callable, optional
        Vectorized ``(S, q) -> (S,)`` version of ``log_lik``.
    """

    log_lik: Callable
    param_dim: int
    box: Sequence
    log_prior: Optional[Callable] = None
    pivotal_terms: Optional[Callable] = None
    batch_log_lik: Optional[Callable] = None
    param_names: Optional[Sequence[str]] = None
    name: str = ""

    @property
    def lower(self) -> np.ndarray:
        return np.array([b[0] for b in self.box], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.array([b[1] for b in self.box], dtype=float)

    def in_box(self, theta) -> bool:
        th = np.asarray(theta, dtype=float)
        return bool(np.all(np.isfinite(th)) and np.all(th >= self.lower) and np.all(th <= self.upper))

    def prior(self, theta) -> float:
        if not self.in_box(theta):
            return float("-inf")
        if self.log_prior is None:
            return 0.0
        v = float(self.log_prior(np.asarray(theta, dtype=float)))
        return v if not np.isnan(v) else float("-inf")

    def log_target(self, theta) -> float:
        lp = self.prior(theta)
        if lp == float("-inf"):
            return lp
        ll = float(self.log_lik(np.asarray(theta, dtype=float)))
        if np.isnan(ll):
            return float("-inf")
        return ll + lp

    def names(self) -> list[str]:
        if self.param_names is not None:
            return list(self.param_names)
        return [f"theta{j + 1}" for j in range(self.param_dim)]


@dataclass
class EstimateResult:
    theta: np.ndarray
    covariance: Optional[np.ndarray]
    value: float
    converged: bool
    n_evals: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def covariance_available(self) -> bool:
        return self.covariance is not None


def wilson_hilferty_loss(terms) -> float:
    """Sum over ``(t_k, d_k)`` of ``((t_k/d_k)^(1/3) - (1 - 2/(9 d_k)))^2``."""
    total = 0.0
    for t, d in terms:
        if not np.isfinite(t) or t < 0:
            return float("inf")
        total += (np.cbrt(t / d) - (1.0 - 2.0 / (9.0 * d))) ** 2
    return float(total)


def fd_hessian(f: Callable, x, rel_step: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian of ``f`` at ``x``, symmetrized.

    The step for coordinate ``i`` is ``rel_step * max(1, |x_i|)``.
    """
    x = np.asarray(x, dtype=float)
    q = x.size
    h = rel_step * np.maximum(1.0, np.abs(x))
    f0 = f(x)
    hess = np.empty((q, q))
    e = np.eye(q)
    for i in range(q):
        xp, xm = x + h[i] * e[i], x - h[i] * e[i]
        hess[i, i] = (f(xp) - 2.0 * f0 + f(xm)) / h[i] ** 2
        for j in range(i):
            hj = h[j] * e[j]
            v = (f(xp + hj) - f(xp - hj) - f(xm + hj) + f(xm - hj)) / (4.0 * h[i] * h[j])
            hess[i, j] = hess[j, i] = v
    return 0.5 * (hess + hess.T)


def hessian_covariance(f: Callable, x, rel_step: float = 1e-4) -> Optional[np.ndarray]:
    """Inverse of the Hessian of ``f`` (a negative log-target) if it is PD, else None."""
    with np.errstate(all="ignore"):
        hess = fd_hessian(f, x, rel_step)
    if not np.all(np.isfinite(hess)):
        return None
    try:
        c = np.linalg.cholesky(hess)
    except np.linalg.LinAlgError:
        return None
    cinv = np.linalg.inv(c)
    return cinv.T @ cinv


def _safe(f: Callable) -> Callable:
    def g(x):
        with np.errstate(all="ignore"):
            v = f(x)
        return float(v) if np.isfinite(v) else 1e300
    return g


def _initial_simplex(x, lo, hi, frac):
    q = x.size
    step = np.where(x != 0, frac * np.abs(x), 0.00025 * frac / 0.05)
    sim = np.tile(x, (q + 1, 1))
    for i in range(q):
        y = x[i] + step[i]
        if y > hi[i]:
            y = x[i] - step[i]
        sim[i + 1, i] = y
    return np.clip(sim, lo, hi)


def minimize_box(f: Callable, starts, box, budget_per_dim: int = 400, xatol: float = 1e-8,
                 fatol: float = 1e-10):
    """Box-constrained Nelder-Mead from each start plus a shrunk-simplex restart.

    Returns
    -------
    (x_best, f_best, converged, n_evals, runs)
    """
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    bounds = list(zip(np.where(np.isfinite(lo), lo, None), np.where(np.isfinite(hi), hi, None)))
    g = _safe(f)
    best_x, best_f, n_evals, converged = None, np.inf, 0, False
    runs = []
    starts = [np.clip(np.asarray(s, dtype=float), lo, hi) for s in starts]
    dim = starts[0].size
    opts = {"maxfev": budget_per_dim * dim, "xatol": xatol, "fatol": fatol}
    for s in starts:
        if g(s) >= 1e300:
            runs.append({"start": s.tolist(), "value": None, "success": False})
            n_evals += 1
            continue
        res = minimize(g, s, method="Nelder-Mead", bounds=bounds, options=opts)
        n_evals += int(res.nfev)
        runs.append({"start": s.tolist(), "value": float(res.fun), "success": bool(res.success)})
        if res.fun < best_f:
            best_x, best_f = np.asarray(res.x, dtype=float), float(res.fun)
        converged = converged or (bool(res.success) and res.fun < 1e300)
    if best_x is None:
        return None, np.inf, False, n_evals, runs
    sim = _initial_simplex(best_x, lo, hi, 0.005)
    res = minimize(g, best_x, method="Nelder-Mead", bounds=bounds,
                   options=dict(opts, initial_simplex=sim))
    n_evals += int(res.nfev)
    if res.fun <= best_f:
        best_x, best_f = np.asarray(res.x, dtype=float), float(res.fun)
    converged = converged or bool(res.success)
    return best_x, best_f, converged, n_evals, runs


def _finish(objective_value, x, fx, converged, n_evals, runs, cov_fn, kind):
    if x is None or fx >= 1e300:
        raise NoConvergence(f"{kind}: no start produced a finite objective", best=x,
                            best_value=fx, diagnostics={"runs": runs})
    if not converged:
        raise NoConvergence(f"{kind}: Nelder-Mead did not converge within the budget", best=x,
                            best_value=fx, diagnostics={"runs": runs, "n_evals": n_evals})
    cov = cov_fn(x)
    return EstimateResult(x, cov, objective_value(fx), True, n_evals,
                          {"runs": runs, "covariance_available": cov is not None})


def pls_estimate(objective: ObjectiveSpec, starts, budget_per_dim: int = 400) -> EstimateResult:
    """Penalized least squares on the Wilson-Hilferty cube-root scale.

    Minimizes ``wilson_hilferty_loss(objective.pivotal_terms(theta)) - log prior``.
    ``EstimateResult.value`` holds that minimum.  The covariance is the inverse
    finite-difference Hessian of the same loss, when positive definite.
    """
    if objective.pivotal_terms is None:
        raise ValueError("pls_estimate needs objective.pivotal_terms")

    def loss(theta):
        lp = objective.prior(theta)
        if lp == float("-inf"):
            return float("inf")
        return wilson_hilferty_loss(objective.pivotal_terms(theta)) - lp

    x, fx, conv, nev, runs = minimize_box(loss, starts, objective.box, budget_per_dim)
    return _finish(lambda v: v, x, fx, conv, nev, runs, lambda th: hessian_covariance(loss, th), "pls")


def plm_estimate(objective: ObjectiveSpec, starts, budget_per_dim: int = 400) -> EstimateResult:
    """Posterior mode of ``log-QIL + log prior``.

    ``EstimateResult.value`` is the maximized log-target; the covariance is the
    inverse Hessian of its negative.
    """
    def neg(theta):
        return -objective.log_target(theta)

    x, fx, conv, nev, runs = minimize_box(neg, starts, objective.box, budget_per_dim)
    return _finish(lambda v: -v, x, fx, conv, nev, runs, lambda th: hessian_covariance(neg, th), "plm")
