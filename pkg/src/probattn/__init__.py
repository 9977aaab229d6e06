"""Mixture-model attention with online adaptation and value propagation."""

from .adaptation import (
    ANCHOR_INITIAL,
    ANCHOR_PREVIOUS,
    AdaptationConfig,
    FixedValues,
    adapt_alphas,
    adapt_keys,
    adaptation_pass,
    propagate_values,
    update_betas,
    update_priors,
)
from .core import (
    attention_output,
    em_value_inference,
    magnitude_prior,
    query_log_likelihood,
    query_marginal_log_likelihood,
    responsibilities,
    standard_attention,
    value_inference_objective,
    value_log_likelihood,
)
from .model import (
    DistancePrior,
    ExplicitPrior,
    MagnitudePrior,
    MixtureModel,
    PositionPrior,
    RelativePE,
    UniformPrior,
)
from .position import (
    AxialConfig,
    axial_attention,
    csa_pass,
    pe_attention,
    pe_prior_logits,
    pe_query_log_likelihood,
)
from .serialize import load_model, save_model

__all__ = [
    "ANCHOR_INITIAL",
    "ANCHOR_PREVIOUS",
    "AdaptationConfig",
    "AxialConfig",
    "DistancePrior",
    "ExplicitPrior",
    "FixedValues",
    "MagnitudePrior",
    "MixtureModel",
    "PositionPrior",
    "RelativePE",
    "UniformPrior",
    "adapt_alphas",
    "adapt_keys",
    "adaptation_pass",
    "attention_output",
    "axial_attention",
    "csa_pass",
    "em_value_inference",
    "load_model",
    "magnitude_prior",
    "pe_attention",
    "pe_prior_logits",
    "pe_query_log_likelihood",
    "propagate_values",
    "query_log_likelihood",
    "query_marginal_log_likelihood",
    "responsibilities",
    "save_model",
    "standard_attention",
    "update_betas",
    "update_priors",
    "value_inference_objective",
    "value_log_likelihood",
]

__version__ = "0.1.0"
