"""Model specification container shared by all univariate models."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from ..quantiles import Dataset, as_dataset

__all__ = ["ModelSpec", "as_rng", "nelder_mead_mle"]


def as_rng(seed) -> np.random.Generator:
    """Accept an int seed, a SeedSequence or a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class ModelSpec:
    """A parametric model for univariate data.

    Parameters are passed around as float vectors ordered as ``param_names``.
    ``quantile_fn(theta, lam)`` must be vectorized over ``lam``.
    ``density_fn(theta, lam)`` returns ``f(q(lam))``; models without it fall back
    to the equiprobability density inside the QIL.  Discrete models set
    ``discrete=True`` and provide ``moments_fn`` for the normal surrogate.
    """

    name: str
    param_names: tuple
    param_box: tuple
    truth: tuple
    quantile_fn: Optional[Callable]
    log_prior_fn: Callable
    simulate_fn: Callable
    density_fn: Optional[Callable] = None
    logpdf_fn: Optional[Callable] = None
    cdf_fn: Optional[Callable] = None
    moments_fn: Optional[Callable] = None
    mle_fn: Optional[Callable] = None
    start_fn: Optional[Callable] = None
    discrete: bool = False
    fixed: dict = field(default_factory=dict)
    prior_text: str = ""

    @property
    def param_dim(self) -> int:
        return len(self.param_names)

    @property
    def has_density(self) -> bool:
        return self.density_fn is not None

    @property
    def lower(self) -> np.ndarray:
        return np.array([b[0] for b in self.param_box], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.array([b[1] for b in self.param_box], dtype=float)

    def in_box(self, theta) -> bool:
        th = np.asarray(theta, dtype=float)
        return bool(th.shape == (self.param_dim,) and np.all(np.isfinite(th))
                    and np.all(th >= self.lower) and np.all(th <= self.upper))

    def quantile(self, theta, lam):
        return self.quantile_fn(np.asarray(theta, dtype=float), np.asarray(lam, dtype=float))

    def density_at_quantile(self, theta, lam):
        return self.density_fn(np.asarray(theta, dtype=float), np.asarray(lam, dtype=float))

    def logpdf(self, theta, y):
        if self.logpdf_fn is None:
            raise NotImplementedError(f"{self.name} has no tractable density")
        return self.logpdf_fn(np.asarray(theta, dtype=float), np.asarray(y, dtype=float))

    def cdf(self, theta, y):
        if self.cdf_fn is None:
            raise NotImplementedError(f"{self.name} has no cdf")
        return self.cdf_fn(np.asarray(theta, dtype=float), np.asarray(y, dtype=float))

    def moments(self, theta):
        return self.moments_fn(np.asarray(theta, dtype=float))

    def log_prior(self, theta) -> float:
        th = np.asarray(theta, dtype=float)
        if not self.in_box(th):
            return float("-inf")
        with np.errstate(all="ignore"):
            v = float(self.log_prior_fn(th))
        return v if not np.isnan(v) else float("-inf")

    def simulate(self, theta=None, n: int = 1, seed=None) -> Dataset:
        th = np.asarray(self.truth if theta is None else theta, dtype=float)
        return Dataset.from_values(self.simulate_fn(th, int(n), as_rng(seed)))

    def mle(self, data) -> np.ndarray:
        if self.mle_fn is None:
            raise NotImplementedError(f"{self.name} has no MLE oracle")
        return np.asarray(self.mle_fn(as_dataset(data).values), dtype=float)

    def start(self, data) -> np.ndarray:
        """Data-driven starting value (method of moments or a plug-in rule)."""
        y = as_dataset(data).values
        if self.start_fn is not None:
            th = np.asarray(self.start_fn(y), dtype=float)
        elif self.mle_fn is not None:
            th = np.asarray(self.mle_fn(y), dtype=float)
        else:
            th = np.asarray(self.truth, dtype=float)
        return np.clip(th, self.lower, self.upper)


def nelder_mead_mle(nll: Callable, x0: Sequence[float], box: Sequence, restarts: int = 3,
                    maxfev: Optional[int] = None) -> np.ndarray:
    """Minimize an exact negative log-likelihood with box-clipped Nelder-Mead.

    Runs once from ``x0`` and restarts ``restarts`` times from the incumbent.
    """
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)

    def f(x):
        with np.errstate(all="ignore"):
            v = nll(x)
        return v if np.isfinite(v) else 1e300

    x = np.clip(np.asarray(x0, dtype=float), lo, hi)
    dim = x.size
    bounds = list(zip(np.where(np.isfinite(lo), lo, None), np.where(np.isfinite(hi), hi, None)))
    best = f(x)
    for _ in range(restarts + 1):
        res = minimize(f, x, method="Nelder-Mead", bounds=bounds,
                       options={"maxfev": maxfev or 400 * dim, "xatol": 1e-9, "fatol": 1e-10})
        if res.fun <= best:
            x, best = np.asarray(res.x, dtype=float), float(res.fun)
    return x
