"""Single-step convergence study of the ETPF-ESRF hybrid.

For each ensemble size and bridging parameter, one analysis step is run on
ensembles sampled from a bimodal scalar prior, and the analysis mean is
compared with the exact posterior mean.
"""
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from ..hybrid import FixedAlpha, HybridConfig, hybrid_step


@dataclass(frozen=True)
class BimodalPrior:
    """Two-component scalar Gaussian mixture."""

    means: tuple = (-1.0, 1.0)
    variance: float = 0.25
    weights: tuple = (0.5, 0.5)

    def sample(self, rng, size):
        comp = rng.choice(len(self.means), size=size, p=self.weights)
        return np.asarray(self.means)[comp] + np.sqrt(self.variance) * rng.standard_normal(size)

    def pdf(self, x):
        x = np.asarray(x, dtype=np.float64)[..., None]
        mu = np.asarray(self.means)
        w = np.asarray(self.weights)
        dens = np.exp(-0.5 * (x - mu) ** 2 / self.variance) / np.sqrt(2 * np.pi * self.variance)
        return dens @ w


@dataclass(frozen=True)
class StudySetup:
    prior: BimodalPrior = BimodalPrior()
    y_obs: float = 0.5
    r: float = 0.5


def posterior_mean(prior, y_obs, r, n_points=20_001, width=12.0):
    """Posterior mean by composite Simpson quadrature of prior times likelihood."""
    sd = np.sqrt(prior.variance)
    lo = min(min(prior.means) - width * sd, y_obs - width * np.sqrt(r))
    hi = max(max(prior.means) + width * sd, y_obs + width * np.sqrt(r))
    x = np.linspace(lo, hi, n_points)
    dens = prior.pdf(x) * np.exp(-0.5 * (x - y_obs) ** 2 / r)
    return float(simpson(x * dens, x=x) / simpson(dens, x=x))


@dataclass
class ConvergenceTable:
    sizes: list
    alphas: np.ndarray
    rmse: np.ndarray  # (len(sizes), len(alphas))

    def optimum(self):
        """``[(M, best_alpha, best_rmse), ...]``; ties go to the smaller alpha."""
        best = np.argmin(self.rmse, axis=1)
        return [(m, float(self.alphas[b]), float(self.rmse[i, b])) for i, (m, b) in
                enumerate(zip(self.sizes, best))]


def run_convergence_study(setup, sizes, alphas, repeats, rng):
    """Average squared error of the hybrid analysis mean over ``repeats``.

    The same prior sample is reused for every ``alpha`` within one repeat so
    that comparisons across ``alpha`` share their sampling noise.
    """
    sizes = list(sizes)
    if sizes != sorted(sizes):
        raise ValueError("ensemble sizes must be ascending")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    alphas = np.asarray(alphas, dtype=np.float64)
    target = posterior_mean(setup.prior, setup.y_obs, setup.r)
    y = np.array([setup.y_obs])
    r_inv = np.array([1.0 / setup.r])
    h = np.ones((1, 1))
    cfgs = [HybridConfig(FixedAlpha(float(a)), "A", 0.0) for a in alphas]
    sq = np.zeros((len(sizes), alphas.size))
    for i, m in enumerate(sizes):
        for _ in range(repeats):
            ens = setup.prior.sample(rng, m)[None, :]
            for j, cfg in enumerate(cfgs):
                za, _ = hybrid_step(ens, y, r_inv, h, cfg, None)
                sq[i, j] += (za.mean() - target) ** 2
    return ConvergenceTable(sizes, alphas, np.sqrt(sq / repeats))
