"""Hybrid ensemble transform particle filter.

Bridges an ensemble square root filter and an optimal-transport particle
filter through a likelihood split ``alpha``, with R-localization for gridded
models and a twin-experiment harness.
"""
from .core import anomalies, apply_transform, as_ensemble, ensemble_mean, time_avg_rmse
from .esrf import esrf_coefficients, obs_space_stats
from .etpf import effective_sample_size, etpf_coefficients, importance_weights
from .hybrid import AdaptiveTheta, FixedAlpha, HybridConfig, adaptive_alpha, hybrid_update, rejuvenate
from .localization import (GridGeometry, LocalizationSpec, localized_hybrid_update, localized_r_inverse,
                           taper)
from .transport import BACKEND, TransportPlan, solve_transport, solve_transport_1d, validate_plan

__version__ = "0.1.0"

__all__ = [
    "AdaptiveTheta", "BACKEND", "FixedAlpha", "GridGeometry", "HybridConfig", "LocalizationSpec",
    "TransportPlan", "adaptive_alpha", "anomalies", "apply_transform", "as_ensemble",
    "effective_sample_size", "ensemble_mean", "esrf_coefficients", "etpf_coefficients",
    "hybrid_update", "importance_weights", "localized_hybrid_update", "localized_r_inverse",
    "obs_space_stats", "rejuvenate", "solve_transport", "solve_transport_1d", "taper",
    "time_avg_rmse", "validate_plan",
]
