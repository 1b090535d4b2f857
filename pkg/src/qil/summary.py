"""Posterior summaries, RMSE and trace thinning."""

from __future__ import annotations

from typing import Callable, Mapping, Optional

import numpy as np

from .sampling import PosteriorDraws

__all__ = ["SUMMARY_PROBS", "weighted_quantile", "summarize", "rmse", "thin_trace"]

SUMMARY_PROBS = (0.025, 0.25, 0.5, 0.75, 0.975)
_KEYS = ("q2.5", "q25", "q50", "q75", "q97.5")


def weighted_quantile(x, probs, weights=None) -> np.ndarray:
    """Inverse of the (weighted) empirical cdf: the smallest ``x`` with ``F(x) >= p``.

    Equal weights give the order-statistic (type 1) quantile, so weighted and
    unweighted summaries coincide when the weights are uniform.
    """
    x = np.asarray(x, dtype=float).ravel()
    order = np.argsort(x, kind="stable")
    xs = x[order]
    if weights is None:
        cw = np.arange(1, x.size + 1) / x.size
    else:
        w = np.asarray(weights, dtype=float).ravel()[order]
        cw = np.cumsum(w) / w.sum()
    p = np.asarray(probs, dtype=float)
    # tolerate rounding in the cumulative sum
    idx = np.searchsorted(cw, p - 1e-12, side="left")
    return xs[np.minimum(idx, x.size - 1)]


def summarize(draws: PosteriorDraws, functionals: Optional[Mapping[str, Callable]] = None) -> dict:
    """Mean, SD and quantiles per parameter (and per extra functional).

    Parameters
    ----------
    draws : PosteriorDraws
    functionals : mapping, optional
        ``name -> h`` where ``h`` maps the S x q sample to an S-vector.

    Returns
    -------
    dict
        ``{"S", "algorithm", "seed", "burn_in", "acceptance", "ess", "parameters": [...]}``
        where each parameter entry has ``name, mean, sd, q2.5, q25, q50, q75, q97.5``.
    """
    w = draws.weights
    cols = [(name, draws.samples[:, j]) for j, name in enumerate(draws.names())]
    if functionals:
        cols += [(name, np.asarray(h(draws.samples), dtype=float).ravel()) for name, h in functionals.items()]
    ww = np.full(draws.n_draws, 1.0 / draws.n_draws) if w is None else w
    params = []
    for name, v in cols:
        mean = float(ww @ v)
        sd = float(np.sqrt(max(ww @ (v - mean) ** 2, 0.0)))
        qs = weighted_quantile(v, SUMMARY_PROBS, w)
        entry = {"name": name, "mean": mean, "sd": sd}
        entry.update({k: float(q) for k, q in zip(_KEYS, qs)})
        params.append(entry)
    return {
        "S": draws.n_draws + draws.burn_in,
        "algorithm": draws.algorithm,
        "seed": draws.seed,
        "burn_in": draws.burn_in,
        "acceptance": None if draws.acceptance_rate is None else float(draws.acceptance_rate),
        "ess": None if draws.ess is None else float(draws.ess),
        "parameters": params,
    }


def rmse(estimates, truth) -> float:
    """Root of the mean squared difference between estimates and the truth.

    ``estimates`` may be a point estimate (q,), a stack of point estimates
    (R x q) or MC draws (S x q); the mean runs over every entry.
    """
    e = np.asarray(estimates, dtype=float)
    t = np.asarray(truth, dtype=float)
    return float(np.sqrt(np.mean((e - t) ** 2)))


def thin_trace(samples, max_points: int = 1000) -> np.ndarray:
    """Every k-th row so that at most ``max_points`` rows remain."""
    x = np.asarray(samples)
    if x.shape[0] <= max_points:
        return x.copy()
    k = int(np.ceil(x.shape[0] / max_points))
    return x[::k].copy()
