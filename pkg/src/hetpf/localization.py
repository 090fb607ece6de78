"""R-localization and the per-gridpoint hybrid analysis.

Fields are stored as ``(K, N, M)`` arrays: ``K`` grid points, a local state of
dimension ``N`` at each point and ``M`` members. Observations sample one
scalar ``site_operator @ z(x_q)`` at each observed grid point.
"""
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .esrf import ObsStats, esrf_coefficients
from .etpf import effective_sample_size, etpf_coefficients, normalize_log_weights
from .hybrid import AdaptiveTheta, alpha_for_target_ess, rejuvenation_noise


@dataclass(frozen=True)
class GridGeometry:
    """One-dimensional grid with unit spacing.

    Parameters
    ----------
    n_points : int
        Number of grid points ``K``.
    observed : array_like of int
        0-based indices of the observed grid points.
    periodic : bool
        Use wrap-around distances.
    """

    n_points: int
    observed: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    periodic: bool = True

    def __post_init__(self):
        obs = np.asarray(self.observed, dtype=int).reshape(-1)
        object.__setattr__(self, "observed", obs)
        if self.n_points < 1:
            raise ValueError("grid needs at least one point")
        if obs.size < 1:
            raise ValueError("at least one observed grid point is required")
        if obs.min() < 0 or obs.max() >= self.n_points:
            raise ValueError("observed indices must be grid indices")

    @classmethod
    def every_nth(cls, n_points, every, periodic=True, offset=None):
        """Observe every ``every``-th point, starting from ``every - 1`` (the
        1-based points ``every, 2*every, ...``)."""
        start = every - 1 if offset is None else offset
        return cls(n_points, np.arange(start, n_points, every), periodic)

    def distance(self, k, q):
        d = np.abs(np.asarray(k) - np.asarray(q))
        if self.periodic:
            d = np.minimum(d, self.n_points - d)
        return d

    def distances(self):
        """``(K, Q)`` distances from every grid point to every observation."""
        return self.distance(np.arange(self.n_points)[:, None], self.observed[None, :])


@dataclass(frozen=True)
class LocalizationSpec:
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"localization radius must be > 0, got {self.radius}")


def taper(t):
    """Fifth-order compactly supported taper, 1 at 0 and 0 beyond 2."""
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0):
        raise ValueError("taper argument must be nonnegative")
    out = np.zeros_like(t_arr)
    inner = t_arr <= 1.0
    outer = (t_arr > 1.0) & (t_arr < 2.0)
    ti = t_arr[inner]
    out[inner] = 1.0 - 5.0 / 3.0 * ti**2 + 5.0 / 8.0 * ti**3 + 0.5 * ti**4 - 0.25 * ti**5
    to = t_arr[outer]
    out[outer] = (-2.0 / 3.0 / to + 4.0 - 5.0 * to + 5.0 / 3.0 * to**2
                  + 5.0 / 8.0 * to**3 - 0.5 * to**4 + 1.0 / 12.0 * to**5)
    return float(out) if out.ndim == 0 else out


def localized_r_inverse(k, geom, spec, r):
    """Diagonal of the tapered precision seen from grid point ``k``."""
    d = geom.distance(k, geom.observed)
    return taper(d / spec.radius) / r


def localized_precisions(geom, spec, r):
    """``(K, Q)`` stack of :func:`localized_r_inverse` for all grid points."""
    if not r > 0:
        raise ValueError(f"observation error variance must be > 0, got {r}")
    return taper(geom.distances() / spec.radius) / r


class LocalStepInfo(NamedTuple):
    alphas: np.ndarray  # (K,)
    ess: np.ndarray  # (K,)


def observed_values(fields, geom, site_operator):
    """``(Q, M)`` predicted observations."""
    return np.einsum("n,qnm->qm", site_operator, fields[geom.observed])


def _pf_stage(fields, misfits, alphas, active, transport):
    out = fields.copy()
    k_pts, _, m = fields.shape
    ess = np.full(k_pts, float(m))
    for k in np.flatnonzero(active):
        w = normalize_log_weights(-0.5 * alphas[k] * misfits[k])
        ess[k] = effective_sample_size(w)
        out[k] = fields[k] @ etpf_coefficients(fields[k], w, transport)
    return out, ess


def _kf_stage(fields, y, r_inv, alphas, active, geom, site_operator):
    out = fields.copy()
    hv = observed_values(fields, geom, site_operator)
    mean = hv.mean(axis=1)
    stats = ObsStats(hv, hv - mean[:, None], mean)
    for k in np.flatnonzero(active):
        out[k] = fields[k] @ esrf_coefficients(stats, y, r_inv[k], alphas[k])
    return out


def _misfits(fields, y, r_inv, geom, site_operator):
    hv = observed_values(fields, geom, site_operator)
    return r_inv @ (hv - y[:, None]) ** 2


def localized_hybrid_step(fields, y_obs, geom, spec, cfg, rng, r, site_operator=None,
                          transport="auto"):
    """Localized hybrid analysis of a field ensemble.

    Parameters
    ----------
    fields : ndarray, shape (K, N, M)
    y_obs : ndarray, shape (Q,)
    geom : GridGeometry
    spec : LocalizationSpec
    cfg : HybridConfig
    rng : numpy.random.Generator
        Source of the rejuvenation noise, one draw shared by all grid points.
    r : float
        Observation error variance.
    site_operator : array_like, shape (N,), optional
        Linear map from a local state to the observed scalar; defaults to
        the first component.

    Returns
    -------
    (ndarray, LocalStepInfo)
    """
    zf = np.asarray(fields, dtype=np.float64)
    if zf.ndim != 3:
        raise ValueError(f"fields must have shape (K, N, M), got {zf.shape}")
    k_pts, n_loc, m = zf.shape
    if k_pts != geom.n_points:
        raise ValueError(f"{k_pts} grid points in fields, geometry has {geom.n_points}")
    if site_operator is None:
        site_operator = np.eye(n_loc)[0]
    site_operator = np.asarray(site_operator, dtype=np.float64)
    y = np.asarray(y_obs, dtype=np.float64).reshape(-1)
    if y.shape[0] != geom.observed.size:
        raise ValueError(f"{y.shape[0]} observations for {geom.observed.size} observed points")

    r_inv = localized_precisions(geom, spec, r)
    active = np.any(r_inv > 0, axis=1)
    misfit_f = _misfits(zf, y, r_inv, geom, site_operator)
    if isinstance(cfg.mode, AdaptiveTheta):
        alphas = np.array([alpha_for_target_ess(misfit_f[k], cfg.mode.theta) for k in range(k_pts)])
    else:
        alphas = np.full(k_pts, cfg.mode.alpha)

    if cfg.ordering == "A":
        zh, ess = _pf_stage(zf, misfit_f, alphas, active, transport)
        za = _kf_stage(zh, y, r_inv, alphas, active, geom, site_operator)
    else:
        zh = _kf_stage(zf, y, r_inv, alphas, active, geom, site_operator)
        misfit_h = _misfits(zh, y, r_inv, geom, site_operator)
        za, ess = _pf_stage(zh, misfit_h, alphas, active, transport)

    if cfg.beta > 0:
        xi = rejuvenation_noise(m, rng) * (cfg.beta / np.sqrt(m - 1))
        za = za + (zf - zf.mean(axis=2, keepdims=True)) @ xi
    return za, LocalStepInfo(alphas, ess)


def localized_hybrid_update(fields, y_obs, geom, spec, cfg, rng, r, site_operator=None):
    return localized_hybrid_step(fields, y_obs, geom, spec, cfg, rng, r, site_operator)[0]
