"""Ensemble containers, statistics, linear ensemble transforms and RMSE.

Ensembles are ``(N_z, M)`` arrays with one member per column, so every
analysis step is a right-multiplication ``Z_a = Z_f @ D`` by an ``M x M``
transform with unit column sums.
"""
import numpy as np

COLUMN_SUM_TOL = 1e-12


def as_ensemble(members):
    """Validate and return an ensemble as a float ``(N_z, M)`` array.

    A 1-D input is treated as ``M`` scalar members.
    """
    e = np.asarray(members, dtype=np.float64)
    if e.ndim == 1:
        e = e[None, :]
    if e.ndim != 2:
        raise ValueError(f"ensemble must be 2-D (N_z, M), got shape {e.shape}")
    if e.shape[1] < 2:
        raise ValueError(f"ensemble needs at least 2 members, got {e.shape[1]}")
    if e.shape[0] < 1:
        raise ValueError("ensemble state dimension must be at least 1")
    if not np.all(np.isfinite(e)):
        raise ValueError("ensemble contains non-finite values")
    return e


def ensemble_mean(e):
    return as_ensemble(e).mean(axis=1)


def anomalies(e):
    """Deviations of each member from the ensemble mean, shape ``(N_z, M)``."""
    e = as_ensemble(e)
    return e - e.mean(axis=1, keepdims=True)


def check_transform(d, m=None, tol=COLUMN_SUM_TOL):
    """Raise ``ValueError`` unless ``d`` is square with unit column sums."""
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"transform must be square, got shape {d.shape}")
    if m is not None and d.shape[0] != m:
        raise ValueError(f"transform is {d.shape[0]}x{d.shape[0]}, ensemble has {m} members")
    err = np.max(np.abs(d.sum(axis=0) - 1.0))
    if err > tol:
        raise ValueError(f"transform column sums deviate from 1 by {err:.3e}")
    return d


def apply_transform(e, d):
    """Return the transformed ensemble ``z_a[:, j] = sum_i z_f[:, i] d[i, j]``."""
    e = as_ensemble(e)
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 2 or d.shape != (e.shape[1], e.shape[1]):
        raise ValueError(f"transform shape {d.shape} does not match {e.shape[1]} members")
    return e @ d


def time_avg_rmse(estimates, references):
    """Time average of ``sqrt(mean((est - ref)**2))`` over the sequence.

    Parameters
    ----------
    estimates, references : array_like, shape (K, N_z)
    """
    est = np.asarray(estimates, dtype=np.float64)
    ref = np.asarray(references, dtype=np.float64)
    if est.ndim == 1:
        est = est[:, None]
    if ref.ndim == 1:
        ref = ref[:, None]
    if est.shape != ref.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {ref.shape}")
    if est.shape[0] == 0:
        raise ValueError("empty sequences")
    return float(np.mean(rmse_series(est, ref)))


def rmse_series(estimates, references):
    est = np.asarray(estimates, dtype=np.float64)
    ref = np.asarray(references, dtype=np.float64)
    return np.sqrt(np.mean((est - ref) ** 2, axis=-1))
