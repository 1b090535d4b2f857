"""Multivariate Wallenius noncentral hypergeometric model.

Items are drawn one at a time without replacement; an item of category ``j``
is drawn with probability proportional to ``theta_j`` times the number of
category-``j`` items left.  The QIL needs only the mean and variance of each
category count given the number of draws.  These are computed exactly by
propagating the count distribution over the lattice ``prod_j {0..m_j}``
(6075 states for the Activities design), batched over parameter vectors.
The closed-form mean approximation and a seeded urn Monte Carlo are kept as
alternatives.
"""

from __future__ import annotations

import csv
import time
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidDraws
from .models.base import as_rng
from .pivotal import log_qil_from_t
from .sampling import PosteriorDraws
from .special import chi2_sf

__all__ = [
    "WalleniusDesign",
    "ChoiceWeights",
    "EXACT_STATE_LIMIT",
    "wallenius_moment_table",
    "wallenius_moments",
    "mean_equation",
    "urn_simulate",
    "wallenius_simulate",
    "wallenius_pivotals",
    "wallenius_log_qil",
    "wallenius_objective",
    "hierarchical_transform",
    "hierarchical_inverse",
    "hierarchical_sampler",
    "activities",
    "read_choice_csv",
    "write_choice_csv",
    "read_digit_table",
    "write_digit_table",
]

EXACT_STATE_LIMIT = 200_000
MC_RUNS = 10_000
MC_SEED = 20240


@dataclass(frozen=True)
class WalleniusDesign:
    """Category sizes ``m`` and per-person counts ``y`` (n x c)."""

    m: np.ndarray
    y: Optional[np.ndarray] = None
    categories: Optional[tuple] = None

    def __post_init__(self):
        m = np.asarray(self.m, dtype=int).ravel()
        if m.size < 1 or np.any(m < 1):
            raise ValueError("category sizes must be positive integers")
        object.__setattr__(self, "m", m)
        if self.y is not None:
            y = np.atleast_2d(np.asarray(self.y, dtype=int))
            if y.shape[1] != m.size or np.any(y < 0) or np.any(y > m):
                raise ValueError("counts must satisfy 0 <= y_ij <= m_j")
            object.__setattr__(self, "y", y)

    @property
    def c(self) -> int:
        return int(self.m.size)

    @property
    def N(self) -> int:
        return int(self.m.sum())

    @property
    def draws(self) -> np.ndarray:
        return self.y.sum(axis=1)


@dataclass(frozen=True)
class ChoiceWeights:
    """Choice weights on the simplex; renormalized on construction."""

    theta: np.ndarray

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float).ravel()
        if np.any(th < 0) or not np.all(np.isfinite(th)) or not th.sum() > 0:
            raise ValueError("choice weights must be nonnegative with a positive sum")
        th = th / th.sum()
        th.setflags(write=False)
        object.__setattr__(self, "theta", th)


def _theta_array(theta) -> np.ndarray:
    return theta.theta if isinstance(theta, ChoiceWeights) else np.asarray(theta, dtype=float)


def wallenius_moment_table(theta, m, max_draws: Optional[int] = None, at=None):
    """Exact means and variances of the counts after ``k = 0..max_draws`` draws.

    Parameters
    ----------
    theta : (c,) or (B, c) array
        Choice weights (need not be normalized).
    m : (c,) int array
    max_draws : int, optional
        Defaults to ``N = sum(m)``.
    at : (B,) int array, optional
        Only the moments of row ``b`` after ``at[b]`` draws are needed;
        returns (B, c) arrays and skips the other steps.

    Returns
    -------
    (mu, var) : ndarrays of shape (max_draws + 1, c) or (B, max_draws + 1, c),
        or (B, c) when ``at`` is given.
    """
    th = np.asarray(theta, dtype=float)
    single = th.ndim == 1
    th = np.atleast_2d(th)
    m = np.asarray(m, dtype=int)
    c, B = m.size, th.shape[0]
    N = int(m.sum())
    if at is not None:
        at = np.broadcast_to(np.asarray(at, dtype=int), (th.shape[0],))
        K = int(at.max())
    else:
        K = N if max_draws is None else int(max_draws)
    grid, levels, preds = _lattice(tuple(int(v) for v in m))
    n_states = grid.shape[0]
    # pj[b, s, j]: probability that the next draw from state s is category j
    w = th[:, None, :] * (m - grid)[None, :, :]
    tot = w.sum(axis=2, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        pj = np.where(tot > 0, w / tot, 0.0)
    pj = np.concatenate((pj, np.zeros((B, 1, c))), axis=1)
    P = np.zeros((B, n_states + 1))
    P[:, 0] = 1.0
    mu = np.zeros((B, K + 1, c))
    var = np.zeros((B, K + 1, c))
    cols = np.arange(c)
    for k in range(K + 1):
        idx = levels[k]
        if k > 0:
            pr = preds[k]
            P[:, idx] = np.einsum("blj,blj->bl", P[:, pr], pj[:, pr, cols])
        rows = slice(None) if at is None else np.nonzero(at == k)[0]
        if at is not None and rows.size == 0:
            continue
        Pk = P[rows][:, idx]
        ylev = grid[idx].astype(float)
        e1 = Pk @ ylev
        e2 = Pk @ (ylev * ylev)
        mu[rows, k] = e1
        var[rows, k] = np.maximum(e2 - e1 * e1, 0.0)
    if at is not None:
        b = np.arange(B)
        return mu[b, at], var[b, at]
    if single:
        return mu[0], var[0]
    return mu, var


_LATTICES: dict = {}


def _lattice(m: tuple):
    """States of ``prod_j {0..m_j}`` grouped by total count, with predecessors.

    ``preds[k][l, j]`` is the flat index of the state one category-``j`` draw
    before state ``levels[k][l]``, or the padding index when ``y_j = 0``.
    """
    if m in _LATTICES:
        return _LATTICES[m]
    shape = tuple(v + 1 for v in m)
    grid = np.indices(shape).reshape(len(m), -1).T
    n_states = grid.shape[0]
    strides = np.array([int(np.prod(shape[j + 1:])) for j in range(len(m))])
    flat = np.arange(n_states)
    pred_all = np.where(grid > 0, flat[:, None] - strides[None, :], n_states)
    total = grid.sum(axis=1)
    levels = [np.nonzero(total == k)[0] for k in range(int(sum(m)) + 1)]
    preds = [pred_all[idx] for idx in levels]
    _LATTICES[m] = (grid, levels, preds)
    return _LATTICES[m]


def mean_equation(theta, m, n_draws: int):
    """Closed-form mean approximation: ``mu_j = m_j (1 - r^theta_j)`` with
    ``sum_j mu_j = n_draws``, ``r`` found by bisection to 1e-12."""
    th = _theta_array(theta)
    m = np.asarray(m, dtype=float)
    N = m.sum()
    if n_draws <= 0:
        return np.zeros_like(m), 0.0
    if n_draws >= N:
        return m.copy(), 0.0
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.sum(m * (1.0 - mid ** th)) > n_draws:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    r = 0.5 * (lo + hi)
    return m * (1.0 - r ** th), r


def _approx_moments(th, m, n_draws):
    mu, _ = mean_equation(th, m, n_draws)
    m = np.asarray(m, dtype=float)
    N = m.sum()
    if n_draws <= 0 or n_draws >= N:
        return mu, np.zeros_like(m)
    # Fisher-type variance; exact for the central hypergeometric at equal weights
    with np.errstate(divide="ignore"):
        inv = 1.0 / mu + 1.0 / (m - mu) + 1.0 / (n_draws - mu) + 1.0 / (N - m - n_draws + mu)
    var = np.where(np.isfinite(inv) & (inv > 0), 1.0 / inv, 0.0) * N / (N - 1.0)
    return mu, var


def urn_simulate(theta, m, n_draws: int, seed=None, size: Optional[int] = None) -> np.ndarray:
    """Sequential urn draws.  Returns a (c,) count vector, or (size, c) for ``size`` runs."""
    th = _theta_array(theta)
    m = np.asarray(m, dtype=int)
    N = int(m.sum())
    if not 0 <= n_draws <= N:
        raise InvalidDraws(f"n_draws must lie in [0, {N}]")
    rng = as_rng(seed)
    R = 1 if size is None else int(size)
    taken = np.zeros((R, m.size), dtype=int)
    rows = np.arange(R)
    for _ in range(int(n_draws)):
        w = th * (m - taken)
        cw = np.cumsum(w, axis=1)
        u = rng.random(R) * cw[:, -1]
        j = np.minimum((u[:, None] >= cw).sum(axis=1), m.size - 1)
        # guard against rounding onto an exhausted category
        bad = (m - taken)[rows, j] <= 0
        if bad.any():
            j[bad] = np.argmax(w[bad], axis=1)
        taken[rows, j] += 1
    return taken[0] if size is None else taken


def wallenius_moments(theta, m, n_draws: int, method: str = "auto", seed: int = MC_SEED):
    """Mean and variance of each category count after ``n_draws`` draws.

    ``method`` is ``'exact'`` (lattice propagation), ``'approx'`` (mean
    equation plus a Fisher-type variance), ``'mc'`` (10^4 seeded urn runs) or
    ``'auto'`` (exact unless the lattice exceeds :data:`EXACT_STATE_LIMIT`).

    Raises
    ------
    InvalidDraws
        If ``n_draws`` lies outside ``[0, N]``.
    """
    th = _theta_array(theta)
    m = np.asarray(m, dtype=int)
    N = int(m.sum())
    if not (0 <= n_draws <= N) or int(n_draws) != n_draws:
        raise InvalidDraws(f"n_draws must be an integer in [0, {N}]")
    n_draws = int(n_draws)
    if method == "auto":
        method = "exact" if np.prod(m + 1.0) <= EXACT_STATE_LIMIT else "mc"
    if method == "exact":
        mu, var = wallenius_moment_table(th, m, n_draws)
        return mu[n_draws], var[n_draws]
    if method == "approx":
        return _approx_moments(th, m, n_draws)
    if method == "mc":
        y = urn_simulate(th, m, n_draws, seed=seed, size=MC_RUNS)
        return y.mean(axis=0), y.var(axis=0, ddof=1)
    raise ValueError(f"unknown method {method!r}")


def wallenius_simulate(theta, m, draws: Sequence[int], seed=None) -> np.ndarray:
    """One count vector per person, person ``i`` drawing ``draws[i]`` items."""
    rng = as_rng(seed)
    return np.array([urn_simulate(theta, m, int(k), seed=rng) for k in draws], dtype=int)


def wallenius_pivotals(y, mu, var):
    """Per-person ``t_i = 2 (D_R - 1/2)^2`` with ``D_R = 1 - F_chi2_c(M_i)``.

    Categories with zero variance add nothing when the count equals its mean
    and make ``M`` infinite otherwise.
    """
    y = np.asarray(y, dtype=float)
    dev2 = (y - mu) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(var > 0, dev2 / np.where(var > 0, var, 1.0), np.where(dev2 > 1e-18, np.inf, 0.0))
    M = ratio.sum(axis=-1)
    c = y.shape[-1]
    dr = chi2_sf(M, c)
    return 2.0 * (dr - 0.5) ** 2


def _usable(design: WalleniusDesign):
    n_i = design.draws
    keep = (n_i > 0) & (n_i < design.N)
    return keep, n_i


def wallenius_log_qil(design: WalleniusDesign, theta, return_skipped: bool = False):
    """Sum over persons of the chi-square(1) log-density of ``t_i``.

    Persons with ``n_i = 0`` or ``n_i = N`` have deterministic counts and are
    skipped; their number is available with ``return_skipped=True``.
    """
    th = _theta_array(theta)
    keep, n_i = _usable(design)
    mu_tab, var_tab = wallenius_moment_table(th, design.m, int(n_i[keep].max()) if keep.any() else 0)
    idx = n_i[keep]
    t = wallenius_pivotals(design.y[keep], mu_tab[idx], var_tab[idx])
    lq = float(np.sum(log_qil_from_t(t, 1)))
    skipped = int((~keep).sum())
    return (lq, skipped) if return_skipped else lq


def wallenius_objective(design: WalleniusDesign):
    """Objective on the first ``c - 1`` weights; the last is ``1 - sum``.

    The prior is Dirichlet(1, ..., 1), flat on the simplex.
    """
    from .optimize import ObjectiveSpec

    c = design.c
    keep, n_i = _usable(design)
    if not keep.any():
        warnings.warn("no person has 0 < n_i < N; the QIL is constant")
    kmax = int(n_i[keep].max()) if keep.any() else 0
    y_keep, idx = design.y[keep], n_i[keep]

    def full(free):
        return np.append(free, 1.0 - np.sum(free))

    def log_prior(free):
        return 0.0 if 1.0 - np.sum(free) >= 0 else float("-inf")

    def log_lik(free):
        th = full(free)
        if np.any(th < 0):
            return float("-inf")
        mu, var = wallenius_moment_table(th, design.m, kmax)
        return float(np.sum(log_qil_from_t(wallenius_pivotals(y_keep, mu[idx], var[idx]), 1)))

    names = [f"theta{j + 1}" for j in range(c - 1)]
    obj = ObjectiveSpec(log_lik, c - 1, [(0.0, 1.0)] * (c - 1), log_prior=log_prior,
                        param_names=names, name="wallenius")
    obj.to_simplex = full
    return obj


def hierarchical_transform(eta) -> np.ndarray:
    """``theta_j = e^eta_j / (1 + sum e^eta)``, ``theta_c = 1 / (1 + sum e^eta)``.

    Works on (c-1,) vectors or (n, c-1) stacks.
    """
    e = np.asarray(eta, dtype=float)
    z = np.concatenate((e, np.zeros(e.shape[:-1] + (1,))), axis=-1)
    z = z - z.max(axis=-1, keepdims=True)
    ez = np.exp(z)
    return ez / ez.sum(axis=-1, keepdims=True)


def hierarchical_inverse(theta) -> np.ndarray:
    """``eta_j = log(theta_j / theta_c)``."""
    th = _theta_array(theta)
    return np.log(th[..., :-1]) - np.log(th[..., -1:])


def hierarchical_sampler(design: WalleniusDesign, S: int, seed=None, proposal_var: float = 0.176,
                         burn_in: float = 0.5, eta0=None) -> PosteriorDraws:
    """Per-person Metropolis on ``eta_i = log(theta_i[:-1] / theta_i[-1])``.

    Each person has prior ``N(0, I)`` on ``eta_i`` and a one-person QIL term.
    All persons are updated at every iteration with independent accept
    steps.  Draws are returned as the flattened n x c matrix of person-level
    weights ``theta_i`` (person-major).  Persons with ``n_i`` in ``{0, N}``
    only see the prior.
    """
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    n, c = design.y.shape
    keep, n_i = _usable(design)
    sd = np.sqrt(proposal_var)

    def person_terms(eta):
        th = hierarchical_transform(eta)
        mu, var = wallenius_moment_table(th, design.m, at=n_i)
        t = wallenius_pivotals(design.y, mu, var)
        ll = np.where(keep, log_qil_from_t(t, 1), 0.0)
        return ll - 0.5 * np.sum(eta * eta, axis=1)

    eta = np.zeros((n, c - 1)) if eta0 is None else np.array(eta0, dtype=float)
    cur = person_terms(eta)
    chain = np.empty((S, n * c))
    n_acc = 0
    for s in range(S):
        prop = eta + sd * rng.standard_normal(eta.shape)
        new = person_terms(prop)
        ok = np.log(rng.random(n)) < new - cur
        eta[ok] = prop[ok]
        cur[ok] = new[ok]
        n_acc += int(ok.sum())
        chain[s] = hierarchical_transform(eta).ravel()
    b = int(np.floor(burn_in * S))
    names = [f"theta{j + 1}[{i + 1}]" for i in range(n) for j in range(c)]
    return PosteriorDraws(chain[b:], acceptance_rate=n_acc / (S * n), seed=seed if isinstance(seed, int) else None,
                          elapsed=time.perf_counter() - t0, param_names=names, burn_in=b,
                          algorithm="metropolis-hierarchical")


def read_digit_table(path) -> WalleniusDesign:
    """Read a ``category,m,counts`` table whose ``counts`` hold one digit per person."""
    with open(Path(path), newline="") as fh:
        rows = list(csv.DictReader(fh))
    cats = tuple(r["category"] for r in rows)
    m = [int(r["m"]) for r in rows]
    lengths = {len(r["counts"]) for r in rows}
    if len(lengths) != 1:
        raise ValueError("every category needs one digit per person")
    y = np.array([[int(ch) for ch in r["counts"]] for r in rows]).T
    return WalleniusDesign(np.array(m), y, cats)


def write_digit_table(path, design: WalleniusDesign) -> None:
    if np.any(design.y > 9):
        raise ValueError("digit tables need counts below 10")
    cats = design.categories or tuple(f"cat{j + 1}" for j in range(design.c))
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["category", "m", "counts"])
        for j in range(design.c):
            w.writerow([cats[j], int(design.m[j]), "".join(str(int(v)) for v in design.y[:, j])])


def read_choice_csv(path, m) -> WalleniusDesign:
    """One row per person with c integer count columns (header required)."""
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        y = [[int(v) for v in row] for row in reader if row]
    return WalleniusDesign(np.asarray(m), np.array(y), tuple(h.strip() for h in header))


def write_choice_csv(path, design: WalleniusDesign) -> None:
    cats = design.categories or tuple(f"cat{j + 1}" for j in range(design.c))
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cats)
        for row in design.y:
            w.writerow([int(v) for v in row])


def activities() -> WalleniusDesign:
    """Activities choice counts: 56 students, 6 categories with m = (2,4,8,2,4,2)."""
    ref = resources.files("qil") / "data" / "activities_digits.csv"
    with resources.as_file(ref) as p:
        return read_digit_table(p)
