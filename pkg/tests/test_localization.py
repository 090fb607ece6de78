import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from hetpf.hybrid import AdaptiveTheta, FixedAlpha, HybridConfig, hybrid_update
from hetpf.localization import (GridGeometry, LocalizationSpec, localized_hybrid_step, localized_hybrid_update,
                                localized_precisions, localized_r_inverse, taper)


def inner_branch(t):
    return 1 - 5 / 3 * t**2 + 5 / 8 * t**3 + 1 / 2 * t**4 - 1 / 4 * t**5


def outer_branch(t):
    return -2 / (3 * t) + 4 - 5 * t + 5 / 3 * t**2 + 5 / 8 * t**3 - 1 / 2 * t**4 + 1 / 12 * t**5


def letkf_oracle(fields, y, geom, spec, r):
    """Ensemble-space LETKF written from scratch (mean update plus symmetric
    square-root anomaly update)."""
    k_pts, _, m = fields.shape
    hx = fields[geom.observed, 0, :]
    ybar = hx.mean(axis=1)
    yp = hx - ybar[:, None]
    out = np.empty_like(fields)
    for k in range(k_pts):
        rk = np.diag(localized_r_inverse(k, geom, spec, r))
        pa = np.linalg.inv((m - 1) * np.eye(m) + yp.T @ rk @ yp)
        wbar = pa @ yp.T @ rk @ (y - ybar)
        wa = np.real(sla.sqrtm((m - 1) * pa))
        xbar = fields[k].mean(axis=1, keepdims=True)
        xp = fields[k] - xbar
        out[k] = xbar + xp @ (wbar[:, None] + wa)
    return out


class TestTaper:
    def test_values(self):
        assert taper(0.0) == 1.0
        assert taper(2.5) == 0.0
        assert taper(2.0) == 0.0

    def test_branches_meet_at_one(self):
        assert inner_branch(1.0) == pytest.approx(5 / 24, abs=1e-12)
        assert outer_branch(1.0) == pytest.approx(5 / 24, abs=1e-12)
        assert taper(1.0) == pytest.approx(5 / 24, abs=1e-12)

    def test_continuous_at_two(self):
        assert abs(outer_branch(2.0)) <= 1e-12
        assert abs(taper(2.0 - 1e-9)) <= 1e-12

    def test_negative(self):
        with pytest.raises(ValueError):
            taper(-0.1)

    def test_vectorised(self):
        t = np.array([0.0, 0.5, 1.5, 3.0])
        got = taper(t)
        assert got.shape == (4,)
        assert np.allclose(got, [1.0, inner_branch(0.5), outer_branch(1.5), 0.0], atol=1e-15)

    @given(st.floats(0, 3), st.floats(0, 3))
    def test_monotone_and_bounded(self, a, b):
        lo, hi = sorted((a, b))
        assert 0.0 <= taper(hi) <= taper(lo) + 1e-15 <= 1.0 + 1e-15


class TestPrecision:
    def test_periodic_wrap(self):
        geom = GridGeometry(40, [39])
        got = localized_r_inverse(1, geom, LocalizationSpec(4.0), 8.0)
        assert got[0] == pytest.approx(inner_branch(0.5) / 8.0, abs=1e-15)

    def test_own_site_and_far_site(self):
        geom = GridGeometry(40, [10, 30])
        got = localized_r_inverse(10, geom, LocalizationSpec(4.0), 2.0)
        assert got[0] == 0.5 and got[1] == 0.0

    def test_non_periodic(self):
        geom = GridGeometry(40, [39], periodic=False)
        assert localized_r_inverse(1, geom, LocalizationSpec(4.0), 1.0)[0] == 0.0

    def test_stack_matches_rows(self):
        geom = GridGeometry.every_nth(12, 2)
        spec = LocalizationSpec(2.5)
        stack = localized_precisions(geom, spec, 3.0)
        assert stack.shape == (12, 6)
        for k in range(12):
            assert np.array_equal(stack[k], localized_r_inverse(k, geom, spec, 3.0))

    def test_every_nth(self):
        geom = GridGeometry.every_nth(40, 2)
        assert geom.observed.size == 20
        assert geom.observed[0] == 1 and geom.observed[-1] == 39

    def test_validation(self):
        with pytest.raises(ValueError):
            LocalizationSpec(0.0)
        with pytest.raises(ValueError):
            GridGeometry(5, [])
        with pytest.raises(ValueError):
            GridGeometry(5, [5])


def l96_like(rng, k=20, m=8, n=1):
    return rng.standard_normal((k, n, m)) * 2 + 3


class TestLocalUpdate:
    @pytest.mark.parametrize("cfg", [HybridConfig(FixedAlpha(0.0)), HybridConfig(FixedAlpha(0.4), "A"),
                                     HybridConfig(FixedAlpha(1.0), "B"), HybridConfig(AdaptiveTheta(0.5), "B")])
    def test_no_influence_points_are_fixed(self, cfg):
        rng = np.random.default_rng(0)
        fields = l96_like(rng, k=20)
        geom = GridGeometry(20, [3])
        spec = LocalizationSpec(2.0)
        out = localized_hybrid_update(fields, [1.0], geom, spec, cfg, None, 1.0)
        far = [k for k in range(20) if geom.distance(k, 3) >= 4]
        assert far
        assert np.array_equal(out[far], fields[far])
        assert not np.array_equal(out[3], fields[3])

    def test_alpha_zero_is_letkf(self):
        rng = np.random.default_rng(1)
        fields = l96_like(rng, k=16, m=10)
        geom = GridGeometry.every_nth(16, 2)
        spec = LocalizationSpec(3.0)
        y = rng.standard_normal(8) + 3
        out = localized_hybrid_update(fields, y, geom, spec, HybridConfig(FixedAlpha(0.0)), None, 2.0)
        assert np.allclose(out, letkf_oracle(fields, y, geom, spec, 2.0), atol=1e-10)

    def test_huge_radius_matches_global_at_alpha_zero(self):
        rng = np.random.default_rng(2)
        fields = l96_like(rng, k=4, m=6)
        geom = GridGeometry(4, [0, 1, 2, 3])
        y = rng.standard_normal(4)
        cfg = HybridConfig(FixedAlpha(0.0))
        local = localized_hybrid_update(fields, y, geom, LocalizationSpec(1e9), cfg, None, 1.5)
        glob = hybrid_update(fields[:, 0, :], y, np.full(4, 1 / 1.5), np.eye(4), cfg)
        assert np.allclose(local[:, 0, :], glob, atol=1e-12)

    @pytest.mark.parametrize("ordering", ["A", "B"])
    def test_single_point_matches_global_any_alpha(self, ordering):
        rng = np.random.default_rng(3)
        fields = rng.standard_normal((1, 3, 7))
        geom = GridGeometry(1, [0])
        cfg = HybridConfig(FixedAlpha(0.6), ordering)
        h = np.array([[0.0, 1.0, 0.0]])
        local = localized_hybrid_update(fields, [0.5], geom, LocalizationSpec(4.0), cfg, None, 0.8,
                                        site_operator=h[0])
        glob = hybrid_update(fields[0], [0.5], [1 / 0.8], h, cfg)
        assert np.allclose(local[0], glob, atol=1e-12)

    def test_mirror_points_get_identical_updates(self):
        rng = np.random.default_rng(4)
        fields = l96_like(rng, k=20, m=9)
        fields[8] = fields[12]  # equidistant from the single observation at 10
        geom = GridGeometry(20, [10])
        cfg = HybridConfig(FixedAlpha(0.5))
        out, info = localized_hybrid_step(fields, [2.0], geom, LocalizationSpec(3.0), cfg, None, 1.0)
        assert np.array_equal(out[8], out[12])
        assert info.alphas.shape == (20,) and info.ess.shape == (20,)

    @settings(max_examples=25, deadline=None)
    @given(st.sampled_from("AB"), st.floats(0, 1), st.integers(0, 2**32 - 1))
    def test_unit_column_sums(self, ordering, alpha, seed):
        # a local component shared by all members is untouched by every transform
        rng = np.random.default_rng(seed)
        fields = l96_like(rng, k=10, m=6, n=2)
        fields[:, 1, :] = np.arange(10)[:, None]
        geom = GridGeometry.every_nth(10, 2)
        out = localized_hybrid_update(fields, rng.standard_normal(5), geom, LocalizationSpec(2.0),
                                      HybridConfig(FixedAlpha(alpha), ordering), None, 1.0)
        assert np.allclose(out[:, 1, :], np.arange(10)[:, None], atol=1e-10)

    def test_shared_rejuvenation_noise(self):
        rng = np.random.default_rng(5)
        fields = l96_like(rng, k=20, m=6)
        fields[15] = fields[16]
        geom = GridGeometry(20, [3])
        cfg = HybridConfig(FixedAlpha(0.3), "A", beta=0.4)
        out = localized_hybrid_update(fields, [0.0], geom, LocalizationSpec(1.0), cfg,
                                      np.random.default_rng(9), 1.0)
        assert not np.array_equal(out[15], fields[15])
        assert np.array_equal(out[15], out[16])
        assert np.allclose(out[15].mean(axis=1), fields[15].mean(axis=1), atol=1e-12)

    def test_adaptive_per_point(self):
        rng = np.random.default_rng(6)
        fields = l96_like(rng, k=12, m=10)
        geom = GridGeometry.every_nth(12, 2)
        y = rng.standard_normal(6) * 4
        _, info = localized_hybrid_step(fields, y, geom, LocalizationSpec(2.0),
                                        HybridConfig(AdaptiveTheta(0.7)), None, 1.0)
        assert np.all((info.alphas >= 0) & (info.alphas <= 1))
        assert np.unique(info.alphas).size > 1

    def test_shape_checks(self):
        geom = GridGeometry(5, [0])
        with pytest.raises(ValueError):
            localized_hybrid_update(np.zeros((4, 1, 3)), [0.0], geom, LocalizationSpec(1.0),
                                    HybridConfig(), None, 1.0)
        with pytest.raises(ValueError):
            localized_hybrid_update(np.zeros((5, 1, 3)), [0.0, 1.0], geom, LocalizationSpec(1.0),
                                    HybridConfig(), None, 1.0)
