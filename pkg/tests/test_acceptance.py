"""Acceptance suite: one test per criterion, each emitting a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v -s`` or
``python tests/test_acceptance.py``. The slow experiment checks (9, 10, 11)
take a few minutes each on one core.
"""
import os
import subprocess
import sys
from dataclasses import replace

import numpy as np
import pytest

from hetpf.core import anomalies, apply_transform
from hetpf.esrf import esrf_coefficients, obs_space_stats
from hetpf.etpf import effective_sample_size, etpf_coefficients, importance_weights
from hetpf.harness import StudySetup, default_config, run_convergence_study, run_twin_experiment
from hetpf.hybrid import AdaptiveTheta, FixedAlpha, HybridConfig, adaptive_alpha, hybrid_update, rejuvenate
from hetpf.localization import GridGeometry, LocalizationSpec, localized_hybrid_update, taper
from hetpf.models import Lorenz63, MidpointStepper
from hetpf.transport import solve_transport, solve_transport_1d, squared_distance_cost
from scipy.integrate import solve_ivp

sys.path.insert(0, os.path.dirname(__file__))
from test_transport import brute_force_objective, random_lattice_weights  # noqa: E402


def check_kalman_exactness():
    z = np.array([[-1.0, 1.0]])
    out = hybrid_update(z, [1.0], [1.0], np.eye(1), HybridConfig(FixedAlpha(0.0), "A", 0.0))
    mean, var = out.mean(), out.var(ddof=1)
    ok = abs(mean - 2 / 3) <= 1e-10 and abs(var - 2 / 3) <= 1e-10
    return ok, f"mean={mean:.15f} var={var:.15f}"


def check_etpf_mean():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        m = int(rng.integers(3, 11))
        z = rng.standard_normal((int(rng.integers(1, 4)), m)) * 3
        w = rng.dirichlet(np.ones(m) * rng.uniform(0.2, 3))
        za = apply_transform(z, etpf_coefficients(z, w))
        worst = max(worst, np.abs(za.mean(axis=1) - z @ w).max())
    return worst <= 1e-9, f"max |mean - sum w z| = {worst:.2e} over 100 instances"


def check_transport_optimality():
    rng = np.random.default_rng(3)
    worst_bf = 0.0
    for _ in range(200):
        m = int(rng.integers(2, 5))
        counts = random_lattice_weights(rng, m)
        cost = squared_distance_cost(rng.standard_normal((int(rng.integers(1, 3)), m)))
        plan = solve_transport(cost, counts / (2 * m))
        worst_bf = max(worst_bf, abs(2 * plan.objective - brute_force_objective(cost, counts, 2)))
    worst_1d = 0.0
    for _ in range(100):
        m = int(rng.integers(2, 65))
        z = rng.standard_normal(m) * 3
        w = rng.dirichlet(np.ones(m))
        a = solve_transport_1d(z, w).objective
        b = solve_transport(squared_distance_cost(z), w).objective
        worst_1d = max(worst_1d, abs(a - b))
    ok = worst_bf <= 1e-9 and worst_1d <= 1e-9
    return ok, f"brute force gap {worst_bf:.2e} (200), 1-D gap {worst_1d:.2e} (100)"


def _random_instance(rng):
    m = int(rng.integers(3, 12))
    z = rng.standard_normal((3, m))
    h = rng.standard_normal((2, 3))
    return z, h, rng.standard_normal(2), rng.uniform(0.3, 2.0, 2)


def check_bridging_limits():
    rng = np.random.default_rng(4)
    worst = 0.0
    for i in range(50):
        z, h, y, r_inv = _random_instance(rng)
        ordering = "AB"[i % 2]
        esrf = hybrid_update(z, y, r_inv, h, HybridConfig(FixedAlpha(0.0), ordering, 0.0))
        ref = apply_transform(z, esrf_coefficients(obs_space_stats(z, h), y, r_inv, 0.0))
        worst = max(worst, np.abs(esrf - ref).max())
        etpf = hybrid_update(z, y, r_inv, h, HybridConfig(FixedAlpha(1.0), ordering, 0.0))
        ref = apply_transform(z, etpf_coefficients(z, importance_weights(h @ z, y, r_inv, 1.0)))
        worst = max(worst, np.abs(etpf - ref).max())
    return worst <= 1e-10, f"max deviation {worst:.2e} over 50 instances"


def check_adaptive_alpha():
    rng = np.random.default_rng(5)
    worst, interior, exact = 0.0, 0, True
    while interior < 50:
        m = int(rng.integers(4, 40))
        hz = rng.standard_normal((2, m)) * 2
        y = rng.standard_normal(2) * 3
        r_inv = np.ones(2)
        theta = float(rng.uniform(0.05, 0.95))

        def ratio(a):
            return effective_sample_size(importance_weights(hz, y, r_inv, a)) / m

        alpha = adaptive_alpha(hz, y, r_inv, theta)
        if ratio(1.0) > theta:
            exact &= alpha == 1.0
        else:
            interior += 1
            worst = max(worst, abs(ratio(alpha) - theta))
        exact &= adaptive_alpha(hz, y, r_inv, 1.0) == 0.0
    ok = worst <= 1e-4 and exact
    return ok, f"max |M_eff/M - theta| = {worst:.1e} on {interior} interior instances, edge rules exact={exact}"


def check_taper():
    t = np.linspace(2.0, 10.0, 50)
    checks = {
        "taper(0)=1": taper(0.0) == 1.0,
        "zero beyond 2": bool(np.all(taper(t) == 0.0)),
        "5/24 at 1": abs(taper(1.0) - 5 / 24) <= 1e-12 and abs(taper(1.0 - 1e-13) - 5 / 24) <= 1e-12,
        "continuous at 2": abs(taper(2.0 - 1e-9)) <= 1e-12,
    }
    return all(checks.values()), ", ".join(f"{k} {'ok' if v else 'BAD'}" for k, v in checks.items())


def check_rejuvenation():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        m = int(rng.integers(2, 20))
        zf = rng.standard_normal((3, m)) * 5
        za = rng.standard_normal((3, m))
        out = rejuvenate(za, anomalies(zf), float(rng.uniform(0, 2)), rng)
        worst = max(worst, np.abs(out.mean(axis=1) - za.mean(axis=1)).max())
    za = rng.standard_normal((3, 6))
    identity = np.array_equal(rejuvenate(za, anomalies(za), 0.0, rng), za)
    return worst <= 1e-12 and identity, f"max mean shift {worst:.1e}, beta=0 identity={identity}"


def check_integrator():
    m = Lorenz63()
    z0 = np.array([1.0, 1.0, 1.0])
    ref = solve_ivp(lambda t, z: m.rhs(z), (0, 0.5), z0, method="DOP853", rtol=1e-13, atol=1e-13).y[:, -1]
    e1, e2 = (np.linalg.norm(m.stepper(dt).run(z0, round(0.5 / dt)) - ref) for dt in (0.01, 0.005))
    ratio = e1 / e2
    rng = np.random.default_rng(8)
    drift = 0.0
    for _ in range(200):
        z = rng.uniform(-5, 5, 2)
        step = MidpointStepper(lambda v: np.array([-v[1], v[0]]), float(rng.uniform(1e-3, 0.5)))
        drift = max(drift, abs(np.linalg.norm(step.step(z)) - np.linalg.norm(z)) / max(1.0, np.linalg.norm(z)))
    ok = abs(ratio - 4.0) <= 0.4 and drift <= 1e-12
    return ok, f"error ratio {ratio:.3f}, rotation norm drift {drift:.1e}"


def _median_rmse(base, alpha, seeds):
    cfg = replace(base, hybrid=replace(base.hybrid, mode=FixedAlpha(alpha)))
    return float(np.median([run_twin_experiment(replace(cfg, seed=s)).rmse for s in seeds]))


def check_l63_trend():
    base = default_config("lorenz63", ensemble_size=20, cycles=2000,
                          hybrid=HybridConfig(FixedAlpha(0.0), "A", 0.2))
    med = {a: _median_rmse(base, a, range(1, 6)) for a in (0.0, 0.3, 1.0)}
    ok = med[0.3] < med[0.0] and med[0.3] < med[1.0]
    return ok, "median RMSE " + ", ".join(f"alpha={a}: {v:.4f}" for a, v in med.items())


def check_l96_trend():
    base = default_config("lorenz96", ensemble_size=20, cycles=1000,
                          hybrid=HybridConfig(FixedAlpha(0.0), "A", 0.2))
    med = {a: _median_rmse(base, a, (1, 2, 3)) for a in (0.0, 0.1, 0.2)}
    ok = min(med[0.1], med[0.2]) <= med[0.0]
    return ok, "median RMSE " + ", ".join(f"alpha={a}: {v:.4f}" for a, v in med.items())


def check_convergence_trend():
    table = run_convergence_study(StudySetup(), [4, 32, 256], np.linspace(0, 1, 11), 10_000,
                                  np.random.default_rng(0))
    best = [a for _, a, _ in table.optimum()]
    ok = all(a <= b for a, b in zip(best, best[1:])) and best[-1] >= 0.9
    return ok, "argmin alpha " + ", ".join(f"M={m}: {a:.1f}" for m, a in zip(table.sizes, best))


def check_localization_noop():
    rng = np.random.default_rng(12)
    geom = GridGeometry(30, [5, 6])
    spec = LocalizationSpec(2.0)
    far = [k for k in range(30) if min(geom.distance(k, 5), geom.distance(k, 6)) >= 2 * spec.radius]
    same = True
    for cfg in (HybridConfig(FixedAlpha(0.0)), HybridConfig(FixedAlpha(0.5), "A"),
                HybridConfig(FixedAlpha(1.0), "B"), HybridConfig(AdaptiveTheta(0.5), "B")):
        fields = rng.standard_normal((30, 2, 8)) * 2 + 3
        out = localized_hybrid_update(fields, rng.standard_normal(2), geom, spec, cfg, None, 1.0)
        same &= np.array_equal(out[far], fields[far])
    return same, f"{len(far)} uninfluenced points bit-unchanged under 4 configurations: {same}"


L96_RUN = "[model]\nname = lorenz96\n\n[experiment]\nensemble_size = 10\ncycles = 20\nspin_up = 5\n\n" \
          "[hybrid]\nalpha = 0.3\nbeta = 0.2\n"


def check_determinism(tmp):
    cfg = os.path.join(tmp, "l96.ini")
    with open(cfg, "w") as fh:
        fh.write(L96_RUN)
    cases = {"lorenz63": ["--cycles", "50"], "lorenz96": ["--config", cfg]}
    identical = {}
    for name, extra in cases.items():
        blobs = []
        for rep in range(2):
            out = os.path.join(tmp, f"{name}{rep}.csv")
            subprocess.run([sys.executable, "-m", "hetpf", "run", "--seed", "11", "--out", out, *extra],
                           check=True, capture_output=True)
            with open(out, "rb") as fh:
                blobs.append(fh.read())
        identical[name] = blobs[0] == blobs[1] and len(blobs[0]) > 0
    return all(identical.values()), ", ".join(f"{k} byte-identical={v}" for k, v in identical.items())


CRITERIA = [
    (1, "Kalman exactness", check_kalman_exactness),
    (2, "ETPF mean consistency", check_etpf_mean),
    (3, "transport optimality", check_transport_optimality),
    (4, "bridging limits", check_bridging_limits),
    (5, "adaptive alpha", check_adaptive_alpha),
    (6, "taper", check_taper),
    (7, "rejuvenation", check_rejuvenation),
    (8, "implicit midpoint", check_integrator),
    (9, "Lorenz-63 trend", check_l63_trend),
    (10, "Lorenz-96 trend", check_l96_trend),
    (11, "convergence-study trend", check_convergence_trend),
    (12, "localization no-op", check_localization_noop),
    (13, "CLI determinism", check_determinism),
]
SLOW = {9, 10, 11}


def _param(number, title, fn):
    marks = [pytest.mark.slow] if number in SLOW else []
    return pytest.param(number, title, fn, marks=marks, id=f"c{number:02d}")


@pytest.mark.parametrize("number, title, fn", [_param(*c) for c in CRITERIA])
def test_criterion(number, title, fn, verdict, tmp_path):
    ok, detail = fn(str(tmp_path)) if fn is check_determinism else fn()
    verdict(number, title, ok, detail)


if __name__ == "__main__":
    import tempfile

    failed = 0
    for number, title, fn in CRITERIA:
        with tempfile.TemporaryDirectory() as tmp:
            ok, detail = fn(tmp) if fn is check_determinism else fn()
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'} [{number:2d}] {title}: {detail}", flush=True)
    sys.exit(1 if failed else 0)
