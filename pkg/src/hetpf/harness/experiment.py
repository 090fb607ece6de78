"""Twin experiments: truth, synthetic observations, cycling and scoring."""
import csv
import io
import logging
import time
from dataclasses import dataclass, replace

import numpy as np

from ..hybrid import FixedAlpha, hybrid_step
from ..localization import GridGeometry, localized_hybrid_step
from ..models import ConvergenceError, CoupledLorenz96Wave, Lorenz63, balance_solve
from .config import ConfigError

log = logging.getLogger(__name__)

CSV_COLUMNS = ("cycle", "rmse", "alpha_mean", "alpha_min", "alpha_max", "ess_mean")

L63_ATTRACTOR_STEPS = 1000


@dataclass
class ExperimentResult:
    rmse: float
    rmse_series: np.ndarray
    alpha_mean: np.ndarray
    alpha_min: np.ndarray
    alpha_max: np.ndarray
    ess_mean: np.ndarray
    wall_time: float
    diverged: bool = False
    message: str = ""

    def rows(self):
        for k in range(self.rmse_series.shape[0]):
            yield (k + 1, self.rmse_series[k], self.alpha_mean[k], self.alpha_min[k],
                   self.alpha_max[k], self.ess_mean[k])


@dataclass(frozen=True)
class ObservationSetup:
    """Linear observation operator plus, for gridded models, its geometry."""

    matrix: np.ndarray
    geometry: GridGeometry | None = None
    site_operator: np.ndarray | None = None


def rng_streams(seed):
    """Independent generators for initial ensemble, truth, observation noise
    and rejuvenation, in that order."""
    children = np.random.SeedSequence(seed).spawn(4)
    return tuple(np.random.default_rng(s) for s in children)


def observation_setup(model, obs_every):
    if isinstance(model, Lorenz63):
        h = np.zeros((1, 3))
        h[0, 0] = 1.0
        return ObservationSetup(h)
    geom = GridGeometry.every_nth(model.n_sites, obs_every)
    site = np.eye(model.site_dim)[0]
    h = np.zeros((geom.observed.size, model.dim))
    # x occupies the first n_sites entries of the state for both gridded models
    h[np.arange(geom.observed.size), geom.observed] = 1.0
    return ObservationSetup(h, geom, site)


def score_slice(model):
    """State entries entering the RMSE (the slow ``x`` for the coupled model)."""
    if isinstance(model, CoupledLorenz96Wave):
        return slice(0, model.n_sites)
    return slice(None)


def sample_initial(model, cfg, rng, size):
    """Draw ``size`` states from the initial distribution as columns."""
    sd = np.sqrt(cfg.init_variance)
    if isinstance(model, Lorenz63):
        centre = model.stepper(cfg.dt).run(np.ones(3), L63_ATTRACTOR_STEPS)
        return centre[:, None] + sd * rng.standard_normal((3, size))
    if isinstance(model, CoupledLorenz96Wave):
        x = sd * rng.standard_normal((model.n_sites, size))
        h = balance_solve(x, model.c)
        return np.concatenate([x, h, np.zeros_like(x)], axis=0)
    return sd * rng.standard_normal((model.dim, size))


def generate_truth_and_obs(cfg, rng_truth=None, rng_obs=None, n_cycles=None):
    """Reference trajectory at observation times and synthetic observations.

    Returns ``(truth, obs)`` with shapes ``(n_cycles, N_z)`` and
    ``(n_cycles, Q)``; row ``k`` belongs to time ``(k + 1) * dt_obs``.
    """
    if rng_truth is None or rng_obs is None:
        _, t_rng, o_rng, _ = rng_streams(cfg.seed)
        rng_truth = rng_truth or t_rng
        rng_obs = rng_obs or o_rng
    n_cycles = cfg.spin_up + cfg.cycles if n_cycles is None else n_cycles
    model = cfg.build_model()
    stepper = model.stepper(cfg.dt)
    obs_op = observation_setup(model, cfg.obs_every)
    z = sample_initial(model, cfg, rng_truth, 1)[:, 0]
    truth = np.empty((n_cycles, model.dim))
    obs = np.empty((n_cycles, obs_op.matrix.shape[0]))
    sd = np.sqrt(cfg.r)
    for k in range(n_cycles):
        z = stepper.run(z, cfg.inner_steps)
        truth[k] = z
        obs[k] = obs_op.matrix @ z + sd * rng_obs.standard_normal(obs_op.matrix.shape[0])
    return truth, obs


def _analysis(model, obs_op, cfg, hybrid_cfg, ens, y, rng):
    if cfg.localization is None:
        r_inv = np.full(obs_op.matrix.shape[0], 1.0 / cfg.r)
        za, info = hybrid_step(ens, y, r_inv, obs_op.matrix, hybrid_cfg, rng)
        return za, np.array([info.alpha]), np.array([info.ess])
    fields = model.to_fields(ens)
    fa, info = localized_hybrid_step(fields, y, obs_op.geometry, cfg.localization, hybrid_cfg, rng,
                                     cfg.r, obs_op.site_operator)
    return model.from_fields(fa), info.alphas, info.ess


def run_twin_experiment(cfg, analysis=None, monitor=None):
    """Run one twin experiment.

    Parameters
    ----------
    cfg : ExperimentConfig
    analysis : callable, optional
        ``analysis(ensemble, y_obs, truth) -> ensemble`` replacing the hybrid
        filter; meant for wiring checks.
    monitor : callable, optional
        ``monitor(cycle, ensemble, in_spin_up)`` called after every analysis
        (and spin-up rebalancing); ``cycle`` counts from 0 including spin-up.

    Returns
    -------
    ExperimentResult
        Per-cycle series cover the ``cfg.cycles`` scored cycles after spin-up.
        A diverged run keeps NaN for the cycles it did not reach.
    """
    if analysis is None and cfg.r == 0:
        raise ConfigError("the filter needs an observation error variance r > 0")
    start = time.perf_counter()
    rng_init, rng_truth, rng_obs, rng_rejuv = rng_streams(cfg.seed)
    model = cfg.build_model()
    stepper = model.stepper(cfg.dt)
    obs_op = observation_setup(model, cfg.obs_every)
    scored = score_slice(model)
    spin_cfg = replace(cfg.hybrid, mode=FixedAlpha(0.0))
    n_inner = cfg.inner_steps

    truth = sample_initial(model, cfg, rng_truth, 1)[:, 0]
    ens = sample_initial(model, cfg, rng_init, cfg.ensemble_size)
    sd = np.sqrt(cfg.r)
    n_obs = obs_op.matrix.shape[0]

    k_total = cfg.spin_up + cfg.cycles
    series = np.full((5, cfg.cycles), np.nan)
    diverged = False
    message = ""
    for k in range(k_total):
        truth = stepper.run(truth, n_inner)
        y = obs_op.matrix @ truth + sd * rng_obs.standard_normal(n_obs)
        in_spin_up = k < cfg.spin_up
        try:
            ens = stepper.run(ens, n_inner)
            if analysis is not None:
                ens = analysis(ens, y, truth)
                alphas = ess = np.array([np.nan])
            else:
                hcfg = spin_cfg if in_spin_up else cfg.hybrid
                ens, alphas, ess = _analysis(model, obs_op, cfg, hcfg, ens, y, rng_rejuv)
            if in_spin_up and isinstance(model, CoupledLorenz96Wave):
                ens = model.rebalance(ens)
            if not np.all(np.isfinite(ens)):
                raise FloatingPointError("non-finite ensemble")
            if monitor is not None:
                monitor(k, ens, in_spin_up)
        except (ConvergenceError, FloatingPointError, ValueError) as exc:
            diverged = True
            message = f"filter diverged at cycle {k + 1}: {exc}"
            log.warning(message)
            break
        if in_spin_up:
            continue
        j = k - cfg.spin_up
        err = ens.mean(axis=1)[scored] - truth[scored]
        series[:, j] = (np.sqrt(np.mean(err**2)), alphas.mean(), alphas.min(), alphas.max(), ess.mean())

    rmse = float(np.mean(series[0])) if not diverged else float("nan")
    return ExperimentResult(
        rmse=rmse,
        rmse_series=series[0],
        alpha_mean=series[1],
        alpha_min=series[2],
        alpha_max=series[3],
        ess_mean=series[4],
        wall_time=time.perf_counter() - start,
        diverged=diverged,
        message=message,
    )


def _fmt(x):
    return repr(float(x)) if not isinstance(x, (int, np.integer)) else str(int(x))


def results_csv(result):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in result.rows():
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def emit_results(result, path):
    """Write the per-cycle series as CSV."""
    with open(path, "w", newline="") as fh:
        fh.write(results_csv(result))


def summary_line(cfg, result):
    mode = cfg.hybrid.mode
    knob = f"theta={mode.theta}" if hasattr(mode, "theta") else f"alpha={mode.alpha}"
    status = "DIVERGED " if result.diverged else ""
    return (f"{status}model={cfg.model} M={cfg.ensemble_size} {knob} ordering={cfg.hybrid.ordering} "
            f"beta={cfg.hybrid.beta} seed={cfg.seed} cycles={cfg.cycles} rmse={result.rmse:.6f} "
            f"time={result.wall_time:.1f}s")
