"""Builders that turn a model and a dataset into an :class:`ObjectiveSpec`."""

from __future__ import annotations

import numpy as np

from .models.base import ModelSpec
from .optimize import ObjectiveSpec
from .pivotal import LAMBDA0, log_qil_iid
from .quantiles import QuantileGrid, as_dataset, select_d

__all__ = ["iid_objective", "grouped_objective"]


def iid_objective(model: ModelSpec, data, epsilon: float = 0.01, use_prior: bool = True,
                  lambda0: float = LAMBDA0) -> ObjectiveSpec:
    """Objective for iid univariate data.

    The grid ``select_d(data, epsilon)`` is built once and reused at every
    ``theta``.  With ``use_prior=False`` the prior is flat over the box.
    The grid is exposed as ``objective.grid``.
    """
    grid = data if isinstance(data, QuantileGrid) else select_d(as_dataset(data), epsilon)

    def log_lik(theta):
        return log_qil_iid(grid, model, theta, lambda0=lambda0).log_qil

    def terms(theta):
        r = log_qil_iid(grid, model, theta, lambda0=lambda0)
        return [(r.t, r.d)]

    obj = ObjectiveSpec(log_lik, model.param_dim, model.param_box,
                        log_prior=model.log_prior if use_prior else None,
                        pivotal_terms=terms, param_names=model.param_names, name=model.name)
    obj.grid = grid
    return obj


def grouped_objective(model: ModelSpec, grids, use_prior: bool = True, lambda0: float = LAMBDA0) -> ObjectiveSpec:
    """Composite objective over independent groups, each with its own grid."""
    grids = list(grids)

    def results(theta):
        return [log_qil_iid(g, model, theta, lambda0=lambda0) for g in grids]

    def log_lik(theta):
        return float(np.sum([r.log_qil for r in results(theta)]))

    def terms(theta):
        return [(r.t, r.d) for r in results(theta)]

    return ObjectiveSpec(log_lik, model.param_dim, model.param_box,
                         log_prior=model.log_prior if use_prior else None,
                         pivotal_terms=terms, param_names=model.param_names, name=model.name)
