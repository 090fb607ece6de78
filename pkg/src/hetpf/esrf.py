"""Ensemble square root filter coefficients with a tempered likelihood.

With bridging parameter ``alpha`` the Kalman part sees the likelihood raised
to ``1 - alpha``:

    S(alpha) = (I + (1 - alpha)/(M - 1) * Y^T R^{-1} Y)^{-1/2}
    w_hat    = 1/M - (1 - alpha)/(M - 1) * S^2 Y^T R^{-1} (ybar - y_obs)
    d_ij     = w_hat_i - 1/M + S_ij

where ``Y`` are the observation-space anomalies and ``ybar`` the mean
predicted observation.
"""
from typing import NamedTuple

import numpy as np

from .core import as_ensemble

EIGEN_FLOOR = 1e-14


class ObsStats(NamedTuple):
    values: np.ndarray  # (N_y, M)
    anomalies: np.ndarray  # (N_y, M)
    mean: np.ndarray  # (N_y,)


def obs_space_stats(e, h):
    """Predicted observations of every member and their spread.

    ``h`` is either a matrix ``H`` of shape ``(N_y, N_z)`` or a callable
    mapping one state vector to an observation vector.
    """
    e = as_ensemble(e)
    if callable(h):
        values = np.column_stack([np.atleast_1d(np.asarray(h(e[:, i]), dtype=np.float64))
                                  for i in range(e.shape[1])])
    else:
        hmat = np.atleast_2d(np.asarray(h, dtype=np.float64))
        if hmat.shape[1] != e.shape[0]:
            raise ValueError(f"operator maps {hmat.shape[1]} states, ensemble has {e.shape[0]}")
        values = hmat @ e
    mean = values.mean(axis=1)
    return ObsStats(values, values - mean[:, None], mean)


def _precision_root(r_inv, n_y):
    """Return ``L`` with ``L L^T = R^{-1}`` (diagonal input gives a vector)."""
    r_inv = np.asarray(r_inv, dtype=np.float64)
    if r_inv.ndim == 0:
        r_inv = np.full(n_y, float(r_inv))
    if r_inv.ndim == 1:
        return np.sqrt(r_inv)
    lam, vec = np.linalg.eigh(0.5 * (r_inv + r_inv.T))
    return vec * np.sqrt(np.clip(lam, 0.0, None))


def _whitened(obs, r_inv):
    """``L^T Y`` so that ``Y^T R^{-1} Y = (L^T Y)^T (L^T Y)``."""
    root = _precision_root(r_inv, obs.anomalies.shape[0])
    if root.ndim == 1:
        return root[:, None] * obs.anomalies
    return root.T @ obs.anomalies


def _gram_root(a, x):
    """``(A^{-1/2}, A^{-1} x)`` for symmetric positive definite ``A``."""
    lam, vec = np.linalg.eigh(a)
    if lam[0] <= 0.0:
        raise ValueError(f"Kalman Gram matrix is not positive definite (min eigenvalue {lam[0]:.3e})")
    lam = np.maximum(lam, EIGEN_FLOOR)
    s = (vec / np.sqrt(lam)) @ vec.T
    return 0.5 * (s + s.T), vec @ ((vec.T @ x) / lam)


def _lowrank_root(u, scale, m, x):
    # I + scale * U^T U = I + V diag(scale s^2) V^T on the row space of U
    _, sv, vt = np.linalg.svd(u, full_matrices=False)
    g = scale * sv**2
    s = (vt.T * (1.0 / np.sqrt(1.0 + g) - 1.0)) @ vt
    s = 0.5 * (s + s.T)
    s[np.diag_indices(m)] += 1.0
    return s, x + vt.T @ ((1.0 / (1.0 + g) - 1.0) * (vt @ x))


def esrf_coefficients(obs, y_obs, r_inv, alpha=0.0, method="auto"):
    """ESRF transform for the ``1 - alpha`` share of the likelihood.

    Parameters
    ----------
    obs : ObsStats
        Output of :func:`obs_space_stats` for the ensemble being updated.
    y_obs : array_like, shape (N_y,)
    r_inv : array_like
        Diagonal ``(N_y,)`` or dense ``(N_y, N_y)`` precision.
    alpha : float
    method : {"auto", "eigh", "lowrank"}
        ``"eigh"`` takes the symmetric inverse square root of the full
        ``M x M`` matrix. ``"lowrank"`` works on the ``N_y``-dimensional
        row space and is exact as well; ``"auto"`` picks it when
        ``N_y < M``.

    Returns
    -------
    ndarray, shape (M, M)
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    ya = np.asarray(obs.anomalies, dtype=np.float64)
    n_y, m = ya.shape
    y = np.asarray(y_obs, dtype=np.float64).reshape(-1)
    if y.shape[0] != n_y:
        raise ValueError(f"{y.shape[0]} observations but operator gives {n_y}")
    scale = (1.0 - alpha) / (m - 1)
    r_arr = np.asarray(r_inv, dtype=np.float64)
    if scale == 0.0 or not np.any(r_arr):
        return np.eye(m)

    innov = np.asarray(obs.mean, dtype=np.float64) - y
    if r_arr.ndim == 0:
        r_innov = float(r_arr) * innov
    elif r_arr.ndim == 1:
        r_innov = r_arr * innov
    else:
        r_innov = r_arr @ innov
    proj = ya.T @ r_innov

    u = _whitened(obs, r_arr)
    if method == "auto":
        method = "lowrank" if u.shape[0] < m else "eigh"
    if method == "eigh":
        a = np.eye(m) + scale * (u.T @ u)
        if not np.allclose(a, a.T, rtol=0.0, atol=1e-10 * max(1.0, np.abs(a).max())):
            raise ValueError("Kalman Gram matrix is not symmetric")
        s, s2_proj = _gram_root(0.5 * (a + a.T), proj)
    elif method == "lowrank":
        s, s2_proj = _lowrank_root(u, scale, m, proj)
    else:
        raise ValueError(f"unknown method {method!r}")

    # w_hat - 1/M, kept without the 1/M round trip
    shift = -scale * s2_proj
    return shift[:, None] + s


def kalman_weights(obs, y_obs, r_inv, alpha=0.0):
    """Mean weights ``w_hat`` with ``zbar_a = Z_f @ w_hat``."""
    d = esrf_coefficients(obs, y_obs, r_inv, alpha)
    return d.mean(axis=1)
