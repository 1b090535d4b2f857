"""Sample quantiles, empirical cdfs and selection of the number of quantiles."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateColumn, EmptyData, InvalidProbability

__all__ = [
    "Dataset",
    "QuantileGrid",
    "as_dataset",
    "empirical_cdf",
    "sample_quantiles",
    "equispaced_lambdas",
    "kolmogorov_gap",
    "select_d",
    "standardize",
    "read_dataset_csv",
    "write_dataset_csv",
]


@dataclass(frozen=True)
class Dataset:
    """Univariate observations, optionally split into K groups.

    Values are stored sorted ascending within each group.  Construct with
    :meth:`from_values` rather than directly.
    """

    values: np.ndarray
    group_ids: Optional[np.ndarray] = None

    @classmethod
    def from_values(cls, values, group_ids=None) -> "Dataset":
        v = np.asarray(values, dtype=float).ravel()
        if v.size == 0:
            raise EmptyData("dataset has no observations")
        if group_ids is None:
            out = np.sort(v)
            out.setflags(write=False)
            return cls(out)
        g = np.asarray(group_ids).ravel().astype(int)
        if g.shape != v.shape:
            raise ValueError("group_ids must match values in length")
        order = np.lexsort((v, g))
        vs, gs = v[order], g[order]
        vs.setflags(write=False)
        gs.setflags(write=False)
        return cls(vs, gs)

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def n_groups(self) -> int:
        return 1 if self.group_ids is None else int(np.unique(self.group_ids).size)

    def groups(self) -> list["Dataset"]:
        """Split into one ungrouped :class:`Dataset` per group label (sorted by label)."""
        if self.group_ids is None:
            return [self]
        return [Dataset.from_values(self.values[self.group_ids == k]) for k in np.unique(self.group_ids)]


def as_dataset(data) -> Dataset:
    return data if isinstance(data, Dataset) else Dataset.from_values(data)


@dataclass(frozen=True)
class QuantileGrid:
    """Quantile probabilities with the matching sample quantiles.

    Attributes
    ----------
    lambdas : ndarray
        Strictly increasing probabilities in (0, 1).
    qhat : ndarray
        Sample quantiles at ``lambdas`` (nondecreasing).
    n : int
        Size of the sample the quantiles came from.
    gap : float
        Kolmogorov distance between the full-sample ecdf and the ecdf of ``qhat``.
    sample_mean, sample_var : float
        Moments of the source sample (used by the discrete normal surrogate).
    """

    lambdas: np.ndarray
    qhat: np.ndarray
    n: int
    gap: float = float("nan")
    sample_mean: float = float("nan")
    sample_var: float = float("nan")
    extras: dict = field(default_factory=dict, compare=False)

    @property
    def d(self) -> int:
        return int(self.lambdas.size)


def empirical_cdf(data, x):
    """Fraction of observations less than or equal to ``x``.

    Examples
    --------
    >>> empirical_cdf([1, 2, 3], 2)
    0.6666666666666666
    """
    ds = as_dataset(data)
    out = np.searchsorted(ds.values, np.asarray(x, dtype=float), side="right") / ds.n
    return out if np.ndim(out) else float(out)


def _check_lambdas(lambdas) -> np.ndarray:
    lam = np.atleast_1d(np.asarray(lambdas, dtype=float))
    if lam.size == 0 or np.any(~((lam > 0) & (lam < 1))):
        raise InvalidProbability("quantile probabilities must lie in (0, 1)")
    if lam.size > 1 and np.any(np.diff(lam) <= 0):
        raise InvalidProbability("quantile probabilities must be strictly increasing")
    return lam


def _type7(sorted_y: np.ndarray, lam: np.ndarray) -> np.ndarray:
    n = sorted_y.size
    h = (n - 1) * lam
    lo = np.floor(h).astype(int)
    hi = np.minimum(lo + 1, n - 1)
    frac = h - lo
    return sorted_y[lo] + frac * (sorted_y[hi] - sorted_y[lo])


def _moments(y: np.ndarray) -> tuple[float, float]:
    return float(y.mean()), float(y.var(ddof=1)) if y.size > 1 else 0.0


def sample_quantiles(data, lambdas) -> QuantileGrid:
    """Linear-interpolation (type 7) sample quantiles.

    ``h = (n - 1) * lambda + 1`` indexes the order statistics (1-based) and the
    quantile interpolates between ``y_(floor h)`` and ``y_(ceil h)``.
    """
    ds = as_dataset(data)
    lam = _check_lambdas(lambdas)
    y = ds.values if ds.group_ids is None else np.sort(ds.values)
    q = _type7(y, lam)
    m, v = _moments(y)
    return QuantileGrid(lam, q, ds.n, gap=kolmogorov_gap(y, q), sample_mean=m, sample_var=v)


def equispaced_lambdas(d: int) -> np.ndarray:
    """``lambda_j = j / (d + 1)`` for ``j = 1..d``."""
    return np.arange(1, d + 1, dtype=float) / (d + 1)


def _right_ranks(y: np.ndarray) -> np.ndarray:
    return np.searchsorted(y, y, side="right")


def _gap_sorted(y: np.ndarray, ranks: np.ndarray, q: np.ndarray) -> float:
    """sup_i |F_n(y_i) - F_d(y_i)| using only interval endpoints.

    F_d is constant on [q_(j), q_(j+1)); F_n is nondecreasing there, so the
    extreme deviations sit at the first and last observation of each interval.
    """
    n, d = y.size, q.size
    qs = np.sort(q)
    starts = np.concatenate(([0], np.searchsorted(y, qs, side="left")))
    ends = np.concatenate((np.searchsorted(y, qs, side="left"), [n])) - 1
    level = np.arange(d + 1) / d
    ok = starts <= ends
    if not ok.any():
        return 0.0
    lo = ranks[starts[ok]] / n
    hi = ranks[ends[ok]] / n
    lv = level[ok]
    return float(max(np.max(np.abs(lo - lv)), np.max(np.abs(hi - lv))))


def kolmogorov_gap(sorted_y, qvals) -> float:
    """Kolmogorov distance between the ecdf of ``sorted_y`` and that of ``qvals``,
    evaluated at the observations."""
    y = np.asarray(sorted_y, dtype=float)
    return _gap_sorted(y, _right_ranks(y), np.asarray(qvals, dtype=float))


def select_d(data, epsilon: float, max_d: Optional[int] = None) -> QuantileGrid:
    """Smallest number of equispaced quantiles within Kolmogorov distance ``epsilon``.

    Scans ``d = 1, 2, ...`` and returns the first grid ``lambda_j = j/(d+1)``
    whose type-7 quantiles satisfy the bound.  If no ``d < n`` does, the full
    set of order statistics is returned with ``lambda_j = j/(n+1)``, for which
    the gap is exactly zero.

    Parameters
    ----------
    data : Dataset or array_like
    epsilon : float
        Tolerance in [0, 1).
    max_d : int, optional
        Stop scanning at this d (falls back to the order statistics).
    """
    if not (0.0 <= epsilon < 1.0):
        raise ValueError("epsilon must lie in [0, 1)")
    ds = as_dataset(data)
    y = ds.values if ds.group_ids is None else np.sort(ds.values)
    n = y.size
    ranks = _right_ranks(y)
    m, v = _moments(y)
    limit = n - 1 if max_d is None else min(max_d, n - 1)
    if epsilon > 0:
        for d in range(1, limit + 1):
            lam = equispaced_lambdas(d)
            q = _type7(y, lam)
            gap = _gap_sorted(y, ranks, q)
            if gap <= epsilon:
                return QuantileGrid(lam, q, n, gap=gap, sample_mean=m, sample_var=v)
    lam = np.arange(1, n + 1, dtype=float) / (n + 1)
    return QuantileGrid(lam, y.copy(), n, gap=0.0, sample_mean=m, sample_var=v)


def standardize(data) -> np.ndarray:
    """Center each column and scale it to unit sample variance (ddof = 1).

    Raises
    ------
    DegenerateColumn
        If a column has zero variance.
    """
    x = np.asarray(data, dtype=float)
    one_d = x.ndim == 1
    x = x.reshape(-1, 1) if one_d else x
    if x.shape[0] < 2:
        raise DegenerateColumn("need at least two rows to standardize")
    sd = x.std(axis=0, ddof=1)
    if np.any(~(sd > 0)):
        raise DegenerateColumn("column with zero sample variance")
    z = (x - x.mean(axis=0)) / sd
    return z.ravel() if one_d else z


def read_dataset_csv(path, column: Optional[str] = None) -> Dataset:
    """Read one observation per row; an optional ``group`` column gives labels.

    The value column is ``column`` if given, else ``value`` if present, else
    the first non-group column.
    """
    with open(Path(path), newline="") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames:
            raise EmptyData(f"{path}: missing header row")
        names = [c.strip() for c in reader.fieldnames]
        reader.fieldnames = names
        if column is None:
            column = "value" if "value" in names else next(c for c in names if c != "group")
        vals, groups = [], []
        for row in reader:
            vals.append(float(row[column]))
            if "group" in names:
                groups.append(int(row["group"]))
    return Dataset.from_values(vals, groups if groups else None)


def write_dataset_csv(path, values: Sequence[float], group_ids=None) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        if group_ids is None:
            w.writerow(["value"])
            for v in values:
                w.writerow([repr(float(v))])
        else:
            w.writerow(["value", "group"])
            for v, g in zip(values, group_ids):
                w.writerow([repr(float(v)), int(g)])
