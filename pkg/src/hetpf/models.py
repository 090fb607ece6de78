"""Test models and the implicit midpoint integrator.

All right-hand sides accept a single state of shape ``(N_z,)`` or a whole
ensemble of shape ``(N_z, M)`` and act column-wise.
"""
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla

log = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    """The implicit midpoint equations could not be solved."""


# --- integrator -------------------------------------------------------------


def _fd_jacobian(f, z, eps=1e-7):
    n = z.shape[0]
    f0 = f(z)
    jac = np.empty((n, n))
    for k in range(n):
        h = eps * max(1.0, abs(z[k]))
        zp = z.copy()
        zp[k] += h
        jac[:, k] = (f(zp) - f0) / h
    return jac


class MidpointStepper:
    """Implicit midpoint rule ``z1 = z0 + dt * f((z0 + z1) / 2)``.

    The stage equation is solved by fixed-point iteration, or by a simplified
    Newton iteration preconditioned with ``I - dt/2 * linear_part`` when the
    model supplies a constant stiff linear part. Columns that do not converge
    are retried one at a time with a full Newton iteration.

    Parameters
    ----------
    rhs : callable
    dt : float
    jacobian : callable, optional
        ``jacobian(z)`` for a single state; a finite-difference Jacobian is
        used otherwise (limited to ``max_fd_dim`` states).
    linear_part : ndarray, optional
    tol : float
        Tolerance on the update, scaled by ``1 + max|z|``.
    max_iter : int
    """

    def __init__(self, rhs, dt, jacobian=None, linear_part=None, tol=1e-12, max_iter=50,
                 max_fd_dim=120):
        if not dt > 0:
            raise ValueError(f"dt must be > 0, got {dt}")
        self.rhs = rhs
        self.dt = dt
        self.jacobian = jacobian
        self.linear_part = linear_part
        self.tol = tol
        self.max_iter = max_iter
        self.max_fd_dim = max_fd_dim

    @cached_property
    def _precond(self):
        n = self.linear_part.shape[0]
        return sla.lu_factor(np.eye(n) - 0.5 * self.dt * self.linear_part)

    def step(self, z0):
        z0 = np.asarray(z0, dtype=np.float64)
        dt = self.dt
        thresh = self.tol * (1.0 + np.abs(z0).max(axis=0))
        z1 = z0 + dt * self.rhs(z0)
        for _ in range(self.max_iter):
            resid = z1 - z0 - dt * self.rhs(0.5 * (z0 + z1))
            if self.linear_part is not None:
                delta = sla.lu_solve(self._precond, resid)
            else:
                delta = resid
            z1 = z1 - delta
            if (np.abs(delta).max(axis=0) <= thresh).all():
                return z1
        if not np.all(np.isfinite(z1)):
            z1 = z0 + dt * self.rhs(z0)
        return self._newton(z0, z1, thresh)

    def _newton(self, z0, z1, thresh):
        if z0.ndim == 1:
            return self._newton_single(z0, z1, float(thresh))
        out = np.empty_like(z1)
        for i in range(z0.shape[1]):
            out[:, i] = self._newton_single(z0[:, i], z1[:, i], float(thresh[i]))
        return out

    def _newton_single(self, z0, z1, thresh, max_newton=30):
        dt = self.dt
        n = z0.shape[0]
        if self.jacobian is None and n > self.max_fd_dim:
            raise ConvergenceError(f"fixed-point iteration failed and no Jacobian for {n} states")
        jac_fn = self.jacobian or (lambda z: _fd_jacobian(self.rhs, z))
        for _ in range(max_newton):
            mid = 0.5 * (z0 + z1)
            resid = z1 - z0 - dt * self.rhs(mid)
            delta = np.linalg.solve(np.eye(n) - 0.5 * dt * jac_fn(mid), resid)
            z1 = z1 - delta
            if not np.all(np.isfinite(z1)):
                break
            if np.max(np.abs(delta)) <= thresh:
                return z1
        raise ConvergenceError(f"implicit midpoint did not converge with dt={dt}")

    def run(self, z0, n_steps):
        z = np.asarray(z0, dtype=np.float64)
        for _ in range(n_steps):
            z = self.step(z)
        return z


def implicit_midpoint_step(rhs, z, dt, jacobian=None, linear_part=None, tol=1e-12, max_iter=50):
    """Single implicit midpoint step (see :class:`MidpointStepper`)."""
    return MidpointStepper(rhs, dt, jacobian, linear_part, tol, max_iter).step(z)


# --- models -----------------------------------------------------------------


def _shifts(n):
    # indices of sites l+1, l-1, l-2 (periodic)
    idx = np.arange(n)
    return (idx + 1) % n, (idx - 1) % n, (idx - 2) % n


@dataclass(frozen=True)
class Lorenz63:
    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0

    dim = 3

    def __post_init__(self):
        if min(self.sigma, self.rho, self.beta) <= 0:
            raise ValueError("Lorenz-63 parameters must be positive")

    def rhs(self, z):
        x, y, w = z[0], z[1], z[2]
        out = np.empty(z.shape)
        out[0] = self.sigma * (y - x)
        out[1] = x * (self.rho - w) - y
        out[2] = x * y - self.beta * w
        return out

    def jacobian(self, z):
        x, y, w = z
        return np.array([
            [-self.sigma, self.sigma, 0.0],
            [self.rho - w, -1.0, -x],
            [y, x, -self.beta],
        ])

    def stepper(self, dt):
        return MidpointStepper(self.rhs, dt, jacobian=self.jacobian)


def lorenz63_rhs(z, p=Lorenz63()):
    return p.rhs(np.asarray(z, dtype=np.float64))


@dataclass(frozen=True)
class Lorenz96:
    n_sites: int = 40
    forcing: float = 8.0

    def __post_init__(self):
        if self.n_sites < 4:
            raise ValueError("Lorenz-96 needs at least 4 sites")

    @property
    def dim(self):
        return self.n_sites

    site_dim = 1

    @cached_property
    def _nbrs(self):
        return _shifts(self.n_sites)

    def rhs(self, x):
        ip, im, imm = self._nbrs
        return (x[ip] - x[imm]) * x[im] - x + self.forcing

    def jacobian(self, x):
        n = self.n_sites
        jac = -np.eye(n)
        for l in range(n):
            lp, lm, lmm = (l + 1) % n, (l - 1) % n, (l - 2) % n
            jac[l, lp] += x[lm]
            jac[l, lmm] -= x[lm]
            jac[l, lm] += x[lp] - x[lmm]
        return jac

    def stepper(self, dt):
        return MidpointStepper(self.rhs, dt, jacobian=self.jacobian)

    def to_fields(self, e):
        return np.asarray(e)[:, None, :]

    def from_fields(self, f):
        return np.asarray(f)[:, 0, :]


def lorenz96_rhs(x, p=Lorenz96()):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != p.n_sites:
        p = Lorenz96(x.shape[0], p.forcing)
    return p.rhs(x)


def periodic_laplacian(n):
    lap = -2.0 * np.eye(n)
    idx = np.arange(n)
    lap[idx, (idx + 1) % n] += 1.0
    lap[idx, (idx - 1) % n] += 1.0
    return lap


def balance_operator(n, c):
    """Matrix of ``h -> h - c^2 (h_{l+1} - 2 h_l + h_{l-1})``."""
    return np.eye(n) - c**2 * periodic_laplacian(n)


def balance_solve(x, c):
    """Wave heights ``h`` in exact balance with ``x``."""
    x = np.asarray(x, dtype=np.float64)
    return np.linalg.solve(balance_operator(x.shape[0], c), x)


def balance_residual(x, h, c):
    x = np.asarray(x, dtype=np.float64)
    return float(np.max(np.abs(x - balance_operator(x.shape[0], c) @ h)))


@dataclass(frozen=True)
class CoupledLorenz96Wave:
    """Lorenz-96 advected by a damped discrete wave field.

    The state is ``[x, h, hdot]`` stacked into a vector of length ``3 L``.
    """

    n_sites: int = 40
    delta: float = 0.1
    epsilon: float = 0.0025
    gamma: float = 0.1
    c: float = 0.5
    forcing: float = 8.0

    site_dim = 3

    def __post_init__(self):
        if self.n_sites < 4:
            raise ValueError("coupled model needs at least 4 sites")
        if not (self.epsilon > 0 and self.gamma > 0 and self.c > 0):
            raise ValueError("epsilon, gamma and c must be positive")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")

    @property
    def dim(self):
        return 3 * self.n_sites

    def split(self, s):
        n = self.n_sites
        return s[:n], s[n:2 * n], s[2 * n:]

    def rhs(self, s):
        x, h, hd = self.split(s)
        d = self.delta
        ip, im, imm = self._nbrs
        xp, xm, xmm = x[ip], x[im], x[imm]
        hp, hm = h[ip], h[im]
        xdot = (1 - d) * (xp - xmm) * xm + d * (xm * hp - xmm * hm) - x + self.forcing
        eps2 = self.epsilon**2
        hdd = (-h + self.c**2 * (hp - 2 * h + hm) + x - 2 * eps2 * self.gamma * hd) / eps2
        return np.concatenate([xdot, hd, hdd], axis=0)

    @cached_property
    def _nbrs(self):
        return _shifts(self.n_sites)

    @cached_property
    def linear_part(self):
        n = self.n_sites
        eps2 = self.epsilon**2
        lin = np.zeros((3 * n, 3 * n))
        eye = np.eye(n)
        lin[:n, :n] = -eye
        lin[n:2 * n, 2 * n:] = eye
        lin[2 * n:, :n] = eye / eps2
        lin[2 * n:, n:2 * n] = -balance_operator(n, self.c) / eps2
        lin[2 * n:, 2 * n:] = -2 * self.gamma * eye
        return lin

    def stepper(self, dt):
        return MidpointStepper(self.rhs, dt, linear_part=self.linear_part)

    def to_fields(self, e):
        e = np.asarray(e)
        return e.reshape(3, self.n_sites, -1).transpose(1, 0, 2)

    def from_fields(self, f):
        f = np.asarray(f)
        return f.transpose(1, 0, 2).reshape(3 * self.n_sites, -1)

    def rebalance(self, e):
        """Replace ``h`` by the balanced heights of ``x``; ``hdot`` is kept."""
        e = np.array(e, dtype=np.float64)
        n = self.n_sites
        e[n:2 * n] = balance_solve(e[:n], self.c)
        return e


def coupled_rhs(s, p=CoupledLorenz96Wave()):
    return p.rhs(np.asarray(s, dtype=np.float64))
