"""Model catalog: the basic univariate models and the g-and-h / g-and-k families."""

from .base import ModelSpec, as_rng, nelder_mead_mle
from .basic import BASIC_MODEL_NAMES, basic_models, get_basic_model
from .quantile_families import (
    C_SKEW,
    GHParams,
    GKParams,
    g_and_h_model,
    g_and_k_model,
    gq_density_at_quantile,
    gq_plugin_start,
    gq_quantile,
    gq_start_grid,
)

__all__ = [
    "ModelSpec", "as_rng", "nelder_mead_mle", "BASIC_MODEL_NAMES", "basic_models", "get_basic_model",
    "C_SKEW", "GHParams", "GKParams", "g_and_h_model", "g_and_k_model", "gq_density_at_quantile",
    "gq_plugin_start", "gq_quantile", "gq_start_grid", "get_model",
]


def get_model(name: str) -> ModelSpec:
    """Look up any univariate model by name."""
    if name == "g-and-h":
        return g_and_h_model()
    if name == "g-and-k":
        return g_and_k_model()
    return get_basic_model(name)
