"""Hybrid ETPF/ESRF analysis with a split likelihood.

The likelihood is factored as ``L^alpha * L^(1 - alpha)``: the particle
filter assimilates the first factor, the square root filter the second.
Ordering ``"A"`` runs the particle filter first, ``"B"`` the Kalman filter
first; the second stage always recomputes its coefficients from the
intermediate ensemble.
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import anomalies, apply_transform, as_ensemble
from .esrf import esrf_coefficients, obs_space_stats
from .etpf import effective_sample_size, etpf_coefficients, importance_weights, misfit, normalize_log_weights

BISECTION_STEPS = 40


@dataclass(frozen=True)
class FixedAlpha:
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")


@dataclass(frozen=True)
class AdaptiveTheta:
    """Pick alpha so that ``M_eff(alpha) / M`` equals ``theta``."""

    theta: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")


@dataclass(frozen=True)
class HybridConfig:
    mode: FixedAlpha | AdaptiveTheta = FixedAlpha(0.0)
    ordering: str = "A"
    beta: float = 0.0

    def __post_init__(self):
        if self.ordering not in ("A", "B"):
            raise ValueError(f"ordering must be 'A' or 'B', got {self.ordering!r}")
        if not self.beta >= 0.0:
            raise ValueError(f"rejuvenation beta must be >= 0, got {self.beta}")


class StepInfo(NamedTuple):
    alpha: float
    ess: float


def alpha_for_target_ess(misfits, theta, steps=BISECTION_STEPS):
    """Bisection for ``M_eff(alpha) / M = theta`` given per-member misfits.

    ``M_eff`` decreases monotonically in ``alpha``. ``theta = 1`` gives 0 and
    an unreachable target (``M_eff(1) / M > theta``) gives 1.
    """
    q = np.asarray(misfits, dtype=np.float64)
    m = q.shape[-1]

    def ratio(a):
        return effective_sample_size(normalize_log_weights(-0.5 * a * q)) / m

    if theta >= 1.0:
        return 0.0
    if ratio(1.0) > theta:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if ratio(mid) > theta:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def adaptive_alpha(obs_values, y_obs, r_inv, theta):
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    return alpha_for_target_ess(misfit(obs_values, y_obs, r_inv), theta)


def resolve_alpha(mode, obs_values, y_obs, r_inv):
    if isinstance(mode, FixedAlpha):
        return mode.alpha
    return adaptive_alpha(obs_values, y_obs, r_inv, mode.theta)


def rejuvenate(e_analysis, forecast_anomalies, beta, rng):
    """Add mean-preserving noise built from forecast anomalies.

    ``z_j += sum_i A_f[:, i] * beta * xi_ij / sqrt(M - 1)`` with standard
    normal ``xi`` whose rows are centred to sum to zero.
    """
    e = as_ensemble(e_analysis)
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    if beta == 0:
        return e.copy()
    m = e.shape[1]
    xi = rejuvenation_noise(m, rng)
    return e + np.asarray(forecast_anomalies) @ xi * (beta / np.sqrt(m - 1))


def rejuvenation_noise(m, rng):
    xi = rng.standard_normal((m, m))
    return xi - xi.mean(axis=1, keepdims=True)


def hybrid_step(e, y_obs, r_inv, h, cfg, rng, transport="auto"):
    """One hybrid analysis; returns ``(analysis, StepInfo)``.

    ``alpha`` is resolved once from the forecast ensemble. The reported ESS
    belongs to the weights used by the particle-filter stage.
    """
    zf = as_ensemble(e)
    y = np.asarray(y_obs, dtype=np.float64).reshape(-1)
    stats_f = obs_space_stats(zf, h)
    alpha = resolve_alpha(cfg.mode, stats_f.values, y, r_inv)

    if cfg.ordering == "A":
        w = importance_weights(stats_f.values, y, r_inv, alpha)
        zh = apply_transform(zf, etpf_coefficients(zf, w, transport))
        stats_h = obs_space_stats(zh, h)
        za = apply_transform(zh, esrf_coefficients(stats_h, y, r_inv, alpha))
    else:
        zh = apply_transform(zf, esrf_coefficients(stats_f, y, r_inv, alpha))
        stats_h = obs_space_stats(zh, h)
        w = importance_weights(stats_h.values, y, r_inv, alpha)
        za = apply_transform(zh, etpf_coefficients(zh, w, transport))

    if cfg.beta > 0:
        za = rejuvenate(za, anomalies(zf), cfg.beta, rng)
    return za, StepInfo(float(alpha), float(effective_sample_size(w)))


def hybrid_update(e, y_obs, r_inv, h, cfg, rng=None, transport="auto"):
    """Hybrid analysis ensemble (see :func:`hybrid_step`)."""
    return hybrid_step(e, y_obs, r_inv, h, cfg, rng, transport)[0]
