"""Monte Carlo posterior samplers for QIL targets.

* :func:`adaptive_metropolis`: random-walk Metropolis whose main proposal
  covariance is the running covariance of accepted states, mixed with a small
  fixed isotropic component.
* :func:`metropolis`: plain random-walk Metropolis with a fixed proposal.
* :func:`vanilla_importance`: prior draws weighted by the QIL.
* :func:`abc_rejection`: ABC rejection baseline on quantile summaries.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DegenerateWeights

__all__ = [
    "PosteriorDraws",
    "RunningCovariance",
    "AdaptiveMetropolis",
    "adaptive_metropolis",
    "metropolis",
    "effective_sample_size",
    "normalize_log_weights",
    "vanilla_importance",
    "abc_summaries",
    "abc_rejection",
]


@dataclass
class PosteriorDraws:
    """Posterior sample, weighted (importance sampling) or not.

    ``samples`` is S x q.  ``weights``, when present, are normalized to sum to
    one.  ``chain`` keeps the full chain including burn-in for MCMC runs.
    """

    samples: np.ndarray
    weights: Optional[np.ndarray] = None
    acceptance_rate: Optional[float] = None
    ess: Optional[float] = None
    seed: Optional[int] = None
    elapsed: float = 0.0
    param_names: Optional[Sequence[str]] = None
    burn_in: int = 0
    algorithm: str = ""
    chain: Optional[np.ndarray] = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        self.samples = x.reshape(-1, 1) if x.ndim == 1 else x
        if self.samples.ndim != 2 or self.samples.shape[0] == 0:
            raise ValueError("samples must be a nonempty S x q array")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (self.samples.shape[0],) or np.any(w < 0) or not (w.sum() > 0):
                raise ValueError("weights must be nonnegative, one per draw, with positive sum")
            self.weights = w / w.sum()

    @property
    def n_draws(self) -> int:
        return int(self.samples.shape[0])

    @property
    def dim(self) -> int:
        return int(self.samples.shape[1])

    def names(self) -> list[str]:
        if self.param_names is not None:
            return list(self.param_names)
        return [f"theta{j + 1}" for j in range(self.dim)]

    def _w(self) -> np.ndarray:
        if self.weights is None:
            return np.full(self.n_draws, 1.0 / self.n_draws)
        return self.weights

    def mean(self) -> np.ndarray:
        return self._w() @ self.samples

    def sd(self) -> np.ndarray:
        w = self._w()
        dev = self.samples - self.mean()
        return np.sqrt(np.maximum(w @ dev ** 2, 0.0))

    def cov(self) -> np.ndarray:
        w = self._w()
        dev = self.samples - self.mean()
        return (dev * w[:, None]).T @ dev


class RunningCovariance:
    """Welford accumulator for the mean and covariance of a stream of vectors."""

    def __init__(self, dim: int):
        self.count = 0
        self.mean = np.zeros(dim)
        self._m2 = np.zeros((dim, dim))

    def update(self, x) -> None:
        x = np.asarray(x, dtype=float)
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self._m2 += np.outer(delta, x - self.mean)

    def covariance(self) -> Optional[np.ndarray]:
        if self.count < 2:
            return None
        c = self._m2 / (self.count - 1)
        return 0.5 * (c + c.T)


class AdaptiveMetropolis:
    """One adaptive-Metropolis chain with explicit state.

    At iteration ``s`` the proposal is drawn from
    ``N(theta, 2.38^2/q * Sigma_s)`` with probability ``w_s`` and from
    ``N(theta, 0.01^2/q * I)`` otherwise, where ``w_s = 0.95 * 1(s > 2q)`` and
    ``Sigma_s`` is the covariance of previously accepted states.

    Parameters
    ----------
    theta0 : array_like
    logp0 : float
        Log-target at ``theta0``; must be finite.
    rng : numpy.random.Generator
    """

    def __init__(self, theta0, logp0: float, rng: np.random.Generator, main_weight: float = 0.95,
                 small_sd: float = 0.01, ridge: float = 1e-10, adapt: bool = True):
        if not np.isfinite(logp0):
            raise ValueError("log-target must be finite at the initial state")
        self.theta = np.array(theta0, dtype=float)
        self.logp = float(logp0)
        self.dim = self.theta.size
        self.rng = rng
        self.main_weight = main_weight
        self.small_scale = small_sd / np.sqrt(self.dim)
        self.main_scale = 2.38 / np.sqrt(self.dim)
        self.ridge = ridge
        self.adapt = adapt
        self.iteration = 0
        self.n_accepted = 0
        self.n_main = 0
        self.n_fallback = 0
        self.acc = RunningCovariance(self.dim)
        self.acc.update(self.theta)
        self._chol = None
        self._chol_stale = True

    def set_state(self, theta, logp: float) -> None:
        """Replace the current state (for Gibbs-type outer updates)."""
        self.theta = np.array(theta, dtype=float)
        self.logp = float(logp)

    def _main_chol(self):
        if self._chol_stale:
            self._chol_stale = False
            c = self.acc.covariance()
            self._chol = None
            if c is not None:
                try:
                    self._chol = np.linalg.cholesky(c + self.ridge * np.eye(self.dim))
                except np.linalg.LinAlgError:
                    self._chol = None
        return self._chol

    def propose(self) -> np.ndarray:
        self.iteration += 1
        z = self.rng.standard_normal(self.dim)
        use_main = self.adapt and self.iteration > 2 * self.dim and self.rng.random() < self.main_weight
        if use_main:
            chol = self._main_chol()
            if chol is not None:
                self.n_main += 1
                return self.theta + self.main_scale * (chol @ z)
            self.n_fallback += 1
        return self.theta + self.small_scale * z

    def step(self, log_target: Callable) -> bool:
        prop = self.propose()
        lp = float(log_target(prop))
        accepted = bool(np.isfinite(lp) and np.log(self.rng.random()) < lp - self.logp)
        if accepted:
            self.theta, self.logp = prop, lp
            self.n_accepted += 1
            if self.adapt:
                self.acc.update(prop)
                self._chol_stale = True
        return accepted

    @property
    def acceptance_rate(self) -> float:
        return self.n_accepted / self.iteration if self.iteration else float("nan")


def _burn(S: int, burn_in) -> int:
    if isinstance(burn_in, float) and 0 <= burn_in < 1:
        return int(np.floor(burn_in * S))
    b = int(burn_in)
    if not 0 <= b < S:
        raise ValueError("burn-in must leave at least one draw")
    return b


def _seed_value(seed):
    return seed if isinstance(seed, (int, np.integer)) or seed is None else None


def adaptive_metropolis(objective, theta0, S: int, seed=None, burn_in=0.5, keep_chain: bool = False,
                        **kwargs) -> PosteriorDraws:
    """Run ``S`` adaptive-Metropolis iterations on ``objective.log_target``.

    Returns the post-burn-in draws (default: last half).  ``kwargs`` are
    passed to :class:`AdaptiveMetropolis`.
    """
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    theta0 = np.asarray(theta0, dtype=float)
    lp0 = objective.log_target(theta0)
    am = AdaptiveMetropolis(theta0, lp0, rng, **kwargs)
    chain = np.empty((S, am.dim))
    logps = np.empty(S)
    for s in range(S):
        am.step(objective.log_target)
        chain[s] = am.theta
        logps[s] = am.logp
    b = _burn(S, burn_in)
    return PosteriorDraws(chain[b:], acceptance_rate=am.acceptance_rate, seed=_seed_value(seed),
                          elapsed=time.perf_counter() - t0, param_names=_names(objective),
                          burn_in=b, algorithm="am", chain=chain if keep_chain else None,
                          diagnostics={"n_main": am.n_main, "n_fallback": am.n_fallback,
                                       "final_log_target": float(logps[-1])})


def _names(objective):
    return objective.names() if hasattr(objective, "names") else None


def metropolis(objective, theta0, S: int, proposal_cov, seed=None, burn_in=0.5,
               keep_chain: bool = False) -> PosteriorDraws:
    """Random-walk Metropolis with a fixed normal proposal covariance."""
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    theta = np.asarray(theta0, dtype=float).copy()
    q = theta.size
    cov = np.atleast_2d(np.asarray(proposal_cov, dtype=float))
    if cov.shape == (1, 1) and q > 1:
        cov = cov[0, 0] * np.eye(q)
    chol = np.linalg.cholesky(cov)
    logp = objective.log_target(theta)
    if not np.isfinite(logp):
        raise ValueError("log-target must be finite at the initial state")
    chain = np.empty((S, q))
    n_acc = 0
    for s in range(S):
        prop = theta + chol @ rng.standard_normal(q)
        lp = objective.log_target(prop)
        if np.isfinite(lp) and np.log(rng.random()) < lp - logp:
            theta, logp = prop, lp
            n_acc += 1
        chain[s] = theta
    b = _burn(S, burn_in)
    return PosteriorDraws(chain[b:], acceptance_rate=n_acc / S, seed=_seed_value(seed),
                          elapsed=time.perf_counter() - t0, param_names=_names(objective),
                          burn_in=b, algorithm="metropolis", chain=chain if keep_chain else None)


def normalize_log_weights(log_w) -> np.ndarray:
    """Normalized weights from log weights by max-log subtraction.

    Raises
    ------
    DegenerateWeights
        If every log weight is ``-inf`` or nan.
    """
    lw = np.asarray(log_w, dtype=float)
    lw = np.where(np.isnan(lw), -np.inf, lw)
    top = np.max(lw) if lw.size else -np.inf
    if not np.isfinite(top):
        raise DegenerateWeights("all importance weights are zero")
    w = np.exp(lw - top)
    return w / w.sum()


def effective_sample_size(weights) -> float:
    """``1 / sum(w_bar^2)`` for normalized weights ``w_bar``."""
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()
    return float(1.0 / np.sum(w * w))


def vanilla_importance(objective, prior_sampler: Callable, S: int, seed=None,
                       batch_size: int = 10000) -> PosteriorDraws:
    """Importance sampling from the prior, weighted by the QIL.

    Parameters
    ----------
    prior_sampler : callable
        ``(rng, size) -> (size, q)`` array of prior draws.
    """
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    draws, logw = [], []
    left = S
    while left > 0:
        m = min(batch_size, left)
        th = np.asarray(prior_sampler(rng, m), dtype=float).reshape(m, -1)
        if getattr(objective, "batch_log_lik", None) is not None:
            lw = np.asarray(objective.batch_log_lik(th), dtype=float)
        else:
            lw = np.array([objective.log_lik(t) for t in th])
        draws.append(th)
        logw.append(lw)
        left -= m
    samples = np.concatenate(draws)
    w = normalize_log_weights(np.concatenate(logw))
    return PosteriorDraws(samples, weights=w, ess=effective_sample_size(w), seed=_seed_value(seed),
                          elapsed=time.perf_counter() - t0, param_names=_names(objective),
                          algorithm="vis")


_OCTILES = np.arange(1, 8) / 8.0


def abc_summaries(y, kind: str = "octiles") -> np.ndarray:
    """Octile quantiles (``'octiles'``) or the full sorted sample (``'all'``)."""
    y = np.sort(np.asarray(y, dtype=float).ravel())
    if kind == "octiles":
        return np.quantile(y, _OCTILES)
    if kind == "all":
        return y
    raise ValueError(f"unknown summary kind {kind!r}")


def abc_rejection(model, prior_sampler: Callable, data, summaries: str = "octiles", S: int = 10000,
                  keep: int = 1000, seed=None) -> PosteriorDraws:
    """ABC rejection: keep the ``keep`` prior draws whose simulated summaries are
    closest (Euclidean) to the observed ones."""
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    y = np.asarray(getattr(data, "values", data), dtype=float)
    n = y.size
    obs = abc_summaries(y, summaries)
    theta = np.asarray(prior_sampler(rng, S), dtype=float).reshape(S, -1)
    dist = np.empty(S)
    for s in range(S):
        with np.errstate(all="ignore"):
            sim = abc_summaries(model.simulate_fn(theta[s], n, rng), summaries)
        v = float(np.sqrt(np.sum((sim - obs) ** 2)))
        dist[s] = v if np.isfinite(v) else np.inf
    keep = min(int(keep), S)
    idx = np.sort(np.argsort(dist, kind="stable")[:keep])
    return PosteriorDraws(theta[idx], seed=_seed_value(seed), elapsed=time.perf_counter() - t0,
                          param_names=getattr(model, "param_names", None), algorithm=f"abc-{summaries}",
                          diagnostics={"max_kept_distance": float(dist[idx].max()) if keep else None})
