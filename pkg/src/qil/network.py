"""Undirected networks, ERG sufficient statistics and change statistics.

The ERG model implies a logit model for each tie given the rest of the
network, with covariates equal to the change in the sufficient statistics
when the tie is toggled on.  One pseudo-observation is produced per ordered
pair of distinct actors.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from math import comb
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidGraph
from .glm import RegressionData

__all__ = [
    "NetworkGraph",
    "BASE_STATS",
    "read_edge_list",
    "write_edge_list",
    "network_statistics",
    "erg_change_statistics",
    "florentine",
]

BASE_STATS = ("edges", "two-stars")


@dataclass(frozen=True)
class NetworkGraph:
    """Symmetric 0/1 adjacency matrix with empty diagonal."""

    adjacency: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.adjacency)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidGraph("adjacency must be square")
        if not np.all(np.isin(a, (0, 1))):
            raise InvalidGraph("adjacency entries must be 0 or 1")
        if not np.array_equal(a, a.T):
            raise InvalidGraph("adjacency must be symmetric")
        if np.any(np.diag(a) != 0):
            raise InvalidGraph("self-loops are not allowed")
        a = a.astype(np.int8)
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    def __eq__(self, other) -> bool:
        if not isinstance(other, NetworkGraph):
            return NotImplemented
        return bool(np.array_equal(self.adjacency, other.adjacency))

    __hash__ = None

    @property
    def N(self) -> int:
        return int(self.adjacency.shape[0])

    @classmethod
    def from_edges(cls, N: int, edges: Sequence[tuple]) -> "NetworkGraph":
        """Build from 1-based ``(i, j)`` edge pairs."""
        a = np.zeros((N, N), dtype=np.int8)
        for i, j in edges:
            if not (1 <= i <= N and 1 <= j <= N) or i == j:
                raise InvalidGraph(f"bad edge ({i}, {j}) for N = {N}")
            a[i - 1, j - 1] = a[j - 1, i - 1] = 1
        return cls(a)

    def edges(self) -> list[tuple]:
        """1-based edge list with ``i < j``, row-major."""
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return [(int(a) + 1, int(b) + 1) for a, b in zip(i, j)]


def read_edge_list(path, N: int | None = None) -> NetworkGraph:
    """Edge-list CSV with header ``i,j`` (1-based actors).

    ``N`` defaults to the largest actor id.  A leading comment line
    ``# N=<count>`` also sets it, so isolated high-numbered actors survive a
    round trip.
    """
    edges = []
    declared = None
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    body = []
    for row in rows:
        if row and row[0].startswith("#"):
            text = ",".join(row).lstrip("#").strip()
            if text.startswith("N="):
                declared = int(text[2:])
            continue
        body.append(row)
    if not body or [c.strip() for c in body[0]] != ["i", "j"]:
        raise InvalidGraph(f"{path}: expected header 'i,j'")
    for row in body[1:]:
        if row:
            edges.append((int(row[0]), int(row[1])))
    n_act = N or declared or max(max(e) for e in edges)
    return NetworkGraph.from_edges(n_act, edges)


def write_edge_list(path, graph: NetworkGraph) -> None:
    with open(Path(path), "w", newline="") as fh:
        fh.write(f"# N={graph.N}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j"])
        for e in graph.edges():
            w.writerow(e)


def _base_stats(a: np.ndarray) -> np.ndarray:
    deg = a.sum(axis=1)
    edges = int(deg.sum()) // 2
    two_stars = int(sum(comb(int(k), 2) for k in deg))
    return np.array([edges, two_stars], dtype=float)


def _expand(base: np.ndarray, stats: Sequence[str]) -> np.ndarray:
    x1, x2 = base
    table = {"edges": x1, "two-stars": x2, "edges^2": x1 * x1, "two-stars^2": x2 * x2,
             "edges*two-stars": x1 * x2}
    try:
        return np.array([table[s] for s in stats], dtype=float)
    except KeyError as err:
        raise ValueError(f"unknown network statistic {err.args[0]!r}") from None


QUADRATIC_STATS = ("edges", "two-stars", "edges^2", "two-stars^2", "edges*two-stars")


def network_statistics(graph, stats: Sequence[str] = BASE_STATS) -> np.ndarray:
    """Sufficient statistics by direct counting.

    ``edges`` counts ties; ``two-stars`` counts pairs of ties sharing an actor,
    ``sum_k C(deg_k, 2)``.  Squares and the product of the two are available
    for the quadratic model.
    """
    a = graph.adjacency if isinstance(graph, NetworkGraph) else np.asarray(graph)
    return _expand(_base_stats(a), stats)


def erg_change_statistics(graph: NetworkGraph, stats: Sequence[str] = BASE_STATS,
                          quadratic: bool = False) -> RegressionData:
    """ERG-implied logit data: one row per ordered pair ``(j, k)``, ``j != k``.

    Covariates are ``x(Y+_jk) - x(Y-_jk)``, where ``Y+`` (``Y-``) sets the tie
    to 1 (0).  Rows run over ``j`` then ``k`` (0-based actor order); no
    intercept column.
    """
    if not isinstance(graph, NetworkGraph):
        graph = NetworkGraph(np.asarray(graph))
    if quadratic:
        stats = QUADRATIC_STATS
    a = graph.adjacency.astype(np.int64)
    N = graph.N
    deg = a.sum(axis=1)
    base = _base_stats(a)
    rows, ys = [], []
    for j in range(N):
        for k in range(N):
            if j == k:
                continue
            yjk = a[j, k]
            # degrees with the (j, k) tie removed
            dj, dk = deg[j] - yjk, deg[k] - yjk
            minus = base - np.array([yjk, yjk * (dj + dk)], dtype=float)
            plus = minus + np.array([1.0, float(dj + dk)])
            rows.append(_expand(plus, stats) - _expand(minus, stats))
            ys.append(yjk)
    return RegressionData(np.array(rows), np.array(ys, dtype=float), tuple(stats))


def florentine() -> NetworkGraph:
    """Florentine business network (16 families, 15 ties), bundled fixture."""
    ref = resources.files("qil") / "data" / "florentine_edges.csv"
    with resources.as_file(ref) as p:
        return read_edge_list(p)
