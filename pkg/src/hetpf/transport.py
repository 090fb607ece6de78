"""Exact discrete optimal transport between a weighted and a uniform ensemble.

The plan ``T`` couples source masses ``w_i * M`` (rows) with unit target
masses (columns) at minimal total squared distance. Two routes are provided:
a network simplex for states of any dimension and the sorted monotone
coupling for scalar states.

The inner loops live in a compiled kernel (``_transport_cy``) when available;
``HETPF_PURE_PYTHON=1`` forces the pure-Python kernel.
"""
import os
from dataclasses import dataclass

import numpy as np

from . import _transport_py

if os.environ.get("HETPF_PURE_PYTHON", "") not in ("", "0"):
    _kernel = _transport_py
else:
    try:
        from . import _transport_cy as _kernel
    except ImportError:  # extension not built
        _kernel = _transport_py

#: Name of the active kernel, ``"cython"`` or ``"python"``.
BACKEND = "cython" if _kernel is not _transport_py else "python"

FEASIBILITY_TOL = 1e-9
SIMPLEX_TOL = 1e-12


class TransportError(ValueError):
    """Raised for invalid marginals or an infeasible transport problem."""


@dataclass(frozen=True)
class TransportPlan:
    """Optimal coupling.

    Attributes
    ----------
    plan : ndarray, shape (M, M)
        ``plan[i, j]`` is the mass moved from source member ``i`` to target
        member ``j``. Columns sum to one, row ``i`` sums to ``w_i * M``.
    row_marginals : ndarray, shape (M,)
        Target row sums ``w * M``.
    objective : float
        ``sum(plan * cost)``.
    row_potentials, col_potentials : ndarray or None
        Dual potentials from the simplex basis; ``None`` for the sorting route.
    """

    plan: np.ndarray
    row_marginals: np.ndarray
    objective: float
    row_potentials: np.ndarray | None = None
    col_potentials: np.ndarray | None = None


@dataclass(frozen=True)
class PlanDiagnostics:
    max_marginal_violation: float
    min_entry: float
    passed: bool


def squared_distance_cost(states):
    """Cost matrix ``c_ij = ||z_i - z_j||^2`` for states stored as columns.

    ``states`` has shape ``(N, M)``; a 1-D array is read as ``N = 1``.
    """
    z = np.asarray(states, dtype=np.float64)
    if z.ndim == 1:
        z = z[None, :]
    diff = z[:, :, None] - z[:, None, :]
    return np.einsum("nij,nij->ij", diff, diff)


def _check_weights(weights, m):
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (m,):
        raise TransportError(f"weights have shape {w.shape}, expected ({m},)")
    if not np.all(np.isfinite(w)):
        raise TransportError("weights contain non-finite entries")
    if np.any(w < 0):
        raise TransportError("weights must be nonnegative")
    if abs(w.sum() - 1.0) > 1e-12:
        raise TransportError(f"weights sum to {w.sum()!r}, not 1")
    return w


def solve_transport(cost, weights, *, max_iter=None):
    """Solve the transport problem with the network simplex.

    Parameters
    ----------
    cost : array_like, shape (M, M)
    weights : array_like, shape (M,)
        Source probabilities; must lie on the simplex to within 1e-12.
    max_iter : int, optional
        Pivot budget, defaults to a generous multiple of ``M**2``.

    Returns
    -------
    TransportPlan
    """
    c = np.ascontiguousarray(cost, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise TransportError(f"cost must be square, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise TransportError("cost contains non-finite entries")
    m = c.shape[0]
    w = _check_weights(weights, m)
    supply = w * m
    demand = np.ones(m)
    scale = float(np.max(np.abs(c))) if c.size else 0.0
    tol = SIMPLEX_TOL * max(scale, 1e-300)
    if max_iter is None:
        max_iter = 50 * m * m + 1000
    flow, u, v, _ = _kernel.network_simplex(c, supply, demand, tol, max_iter)
    plan = TransportPlan(
        plan=flow,
        row_marginals=supply,
        objective=float(np.sum(flow * c)),
        row_potentials=u,
        col_potentials=v,
    )
    _raise_if_infeasible(plan, w)
    return plan


def solve_transport_1d(states, weights):
    """Monotone coupling for scalar states.

    Sorting the members turns the optimal plan for squared distance into the
    north-west corner rule on the sorted marginals. Ties between equal states
    are broken by the stable sort order.
    """
    z = np.asarray(states, dtype=np.float64).reshape(-1)
    m = z.shape[0]
    w = _check_weights(weights, m)
    if not np.all(np.isfinite(z)):
        raise TransportError("states contain non-finite entries")
    order = np.argsort(z, kind="stable")
    supply = w * m
    # the monotone plan lives on 2M - 1 cells; scatter them back
    si, sj, vals = _kernel.monotone_coupling(supply[order], np.ones(m))
    flow = np.zeros((m, m))
    flow[order[si], order[sj]] = vals
    zs = z[order]
    objective = float(np.sum(vals * (zs[si] - zs[sj]) ** 2))
    plan = TransportPlan(plan=flow, row_marginals=supply, objective=objective)
    _raise_if_infeasible(plan, w)
    return plan


def validate_plan(plan, weights, tol=FEASIBILITY_TOL):
    """Check marginals and nonnegativity of a plan.

    Accepts a :class:`TransportPlan` or a bare array.
    """
    t = plan.plan if isinstance(plan, TransportPlan) else np.asarray(plan, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    m = t.shape[1]
    col_err = np.max(np.abs(t.sum(axis=0) - 1.0))
    row_err = np.max(np.abs(t.sum(axis=1) - w * m))
    violation = float(max(col_err, row_err))
    min_entry = float(t.min())
    passed = violation <= tol and min_entry >= -tol
    return PlanDiagnostics(violation, min_entry, bool(passed))


def _raise_if_infeasible(plan, w):
    diag = validate_plan(plan, w)
    if not diag.passed:
        raise TransportError(
            f"numerically infeasible plan: marginal violation {diag.max_marginal_violation:.3e}, "
            f"min entry {diag.min_entry:.3e}"
        )
