"""Material parameter inversion for a guided-wave surrogate model."""

from ._waveinv import (
    ConfigError,
    ForwardConfig,
    ModelError,
    NumericalError,
    envelope,
    forward_jacobian,
    forward_response,
    gamma_fit,
    gamma_inv_cdf,
    gamma_pdf,
    invert,
    lambda_k,
    lhs_sample,
    modified_lm_step,
    prior,
    relative_1,
    relative_2,
    transform,
)

__all__ = [
    "ConfigError",
    "ForwardConfig",
    "ModelError",
    "NumericalError",
    "envelope",
    "forward_jacobian",
    "forward_response",
    "gamma_fit",
    "gamma_inv_cdf",
    "gamma_pdf",
    "invert",
    "lambda_k",
    "lhs_sample",
    "modified_lm_step",
    "prior",
    "relative_1",
    "relative_2",
    "transform",
]
