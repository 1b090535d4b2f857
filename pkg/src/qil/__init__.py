"""Quantile implied likelihood (QIL) inference.

The QIL replaces an intractable likelihood by the chi-square density of a
pivotal statistic built from sample quantiles.  Submodules:

``quantiles``   sample quantiles and d(epsilon) grid selection
``pivotal``     the pivotal statistic and log-QIL
``models``      basic univariate models and the g-and-h / g-and-k families
``depth``       Mahalanobis depth, multivariate QIL and depth coresets
``glm``         binary regression with a LASSO prior
``network``     ERG change statistics
``wallenius``   Wallenius moments and the per-person QIL
``optimize``    PLS / PLM point estimation
``sampling``    adaptive Metropolis, importance sampling and ABC
"""

from .errors import *  # noqa: F401,F403
from .models import ModelSpec, get_model
from .objectives import grouped_objective, iid_objective
from .optimize import EstimateResult, ObjectiveSpec, plm_estimate, pls_estimate
from .pivotal import log_qil_iid, pivotal_statistic
from .quantiles import Dataset, QuantileGrid, sample_quantiles, select_d
from .sampling import PosteriorDraws, adaptive_metropolis, metropolis, vanilla_importance

__version__ = "0.1.0"
