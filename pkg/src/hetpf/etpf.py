"""Importance weights, effective sample size and ETPF transform coefficients."""
import numpy as np

from .core import as_ensemble
from .transport import solve_transport, solve_transport_1d, squared_distance_cost


def misfit(obs_values, y_obs, r_inv):
    """Quadratic forms ``(h_i - y)^T R^{-1} (h_i - y)`` for every member.

    Parameters
    ----------
    obs_values : ndarray, shape (N_y, M)
    y_obs : ndarray, shape (N_y,)
    r_inv : ndarray
        Observation precision, either the diagonal ``(N_y,)`` or dense
        ``(N_y, N_y)``.
    """
    hv = np.asarray(obs_values, dtype=np.float64)
    if hv.ndim == 1:
        hv = hv[None, :]
    y = np.asarray(y_obs, dtype=np.float64).reshape(-1)
    if hv.shape[0] != y.shape[0]:
        raise ValueError(f"{hv.shape[0]} observed values per member but {y.shape[0]} observations")
    innov = hv - y[:, None]
    r_inv = np.asarray(r_inv, dtype=np.float64)
    if r_inv.ndim == 0:
        r_inv = np.full(y.shape[0], float(r_inv))
    if r_inv.ndim == 1:
        return r_inv @ innov**2
    return np.einsum("qi,qp,pi->i", innov, r_inv, innov)


def normalize_log_weights(logw):
    """Normalise log-weights along the last axis with a max shift."""
    logw = np.asarray(logw, dtype=np.float64)
    shifted = logw - logw.max(axis=-1, keepdims=True)
    w = np.exp(shifted)
    return w / w.sum(axis=-1, keepdims=True)


def importance_weights(obs_values, y_obs, r_inv, alpha=1.0):
    """Tempered likelihood weights ``w_i ∝ exp(-alpha/2 * misfit_i)``."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    q = misfit(obs_values, y_obs, r_inv)
    if not np.all(np.isfinite(q)):
        raise ValueError("non-finite observation misfit")
    return normalize_log_weights(-0.5 * alpha * q)


def effective_sample_size(w):
    w = np.asarray(w, dtype=np.float64)
    return 1.0 / np.sum(w**2, axis=-1)


def etpf_coefficients(e, w, method="auto"):
    """Transform coefficients ``d_ij = t*_ij`` of the optimal coupling.

    Parameters
    ----------
    e : array_like, shape (N, M)
    w : array_like, shape (M,)
    method : {"auto", "simplex", "sort"}
        ``"auto"`` sorts when ``N == 1`` and runs the network simplex
        otherwise. Both give the same (unique) optimum for distinct scalar
        states.
    """
    e = as_ensemble(e)
    w = np.asarray(w, dtype=np.float64)
    m = e.shape[1]
    if np.all(w == w[0]):
        # uniform weights: the identity has zero cost
        return np.eye(m)
    if method == "auto":
        method = "sort" if e.shape[0] == 1 else "simplex"
    if method == "sort":
        if e.shape[0] != 1:
            raise ValueError("sorting route needs scalar states")
        return solve_transport_1d(e[0], w).plan
    if method == "simplex":
        return solve_transport(squared_distance_cost(e), w).plan
    raise ValueError(f"unknown method {method!r}")
