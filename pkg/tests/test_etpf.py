import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetpf.core import apply_transform
from hetpf.etpf import (effective_sample_size, etpf_coefficients, importance_weights, misfit,
                        normalize_log_weights)


class TestWeights:
    def test_alpha_zero_uniform(self):
        w = importance_weights(np.array([[0.0, 3.0, -7.0]]), [1.0], [1.0], alpha=0.0)
        assert np.array_equal(w, np.full(3, 1 / 3))

    def test_two_member_formula(self):
        w = importance_weights(np.array([[1.0, 3.0]]), [1.0], [1.0], alpha=1.0)
        e2 = np.exp(-2.0)
        assert np.allclose(w, [1 / (1 + e2), e2 / (1 + e2)], rtol=0, atol=1e-15)
        assert w[0] == pytest.approx(0.8808, abs=5e-5)

    def test_equidistant_uniform(self):
        w = importance_weights(np.array([[-2.0, 4.0, 4.0, -2.0]]), [1.0], [0.3])
        assert np.allclose(w, 0.25, atol=1e-15)

    def test_dense_and_diagonal_precision_agree(self):
        rng = np.random.default_rng(0)
        hv = rng.standard_normal((3, 6))
        y = rng.standard_normal(3)
        d = np.array([0.5, 2.0, 1.0])
        assert np.allclose(misfit(hv, y, d), misfit(hv, y, np.diag(d)))
        assert np.allclose(misfit(hv, y, 2.0), misfit(hv, y, np.full(3, 2.0)))

    def test_no_overflow_for_huge_misfits(self):
        w = importance_weights(np.array([[1e4, 1e4 + 1.0]]), [0.0], [1.0])
        assert np.all(np.isfinite(w)) and w.sum() == pytest.approx(1.0)

    @pytest.mark.parametrize("alpha", [-0.1, 1.5])
    def test_alpha_range(self, alpha):
        with pytest.raises(ValueError):
            importance_weights(np.zeros((1, 2)), [0.0], [1.0], alpha)

    def test_non_finite(self):
        with pytest.raises(ValueError):
            importance_weights(np.array([[np.inf, 0.0]]), [0.0], [1.0])

    @given(st.lists(st.floats(-50, 50), min_size=2, max_size=10), st.floats(-100, 100))
    def test_shift_invariance(self, logw, c):
        a = normalize_log_weights(np.array(logw))
        b = normalize_log_weights(np.array(logw) + c)
        assert np.allclose(a, b, rtol=1e-12, atol=1e-15)


class TestEss:
    def test_uniform(self):
        assert effective_sample_size(np.full(8, 1 / 8)) == pytest.approx(8.0)

    def test_collapse(self):
        assert effective_sample_size(np.array([0.0, 1.0, 0.0])) == 1.0

    def test_hand_value(self):
        assert effective_sample_size(np.array([0.75, 0.25])) == pytest.approx(1.6, abs=1e-15)

    @given(st.integers(2, 20), st.integers(0, 2**32 - 1))
    def test_bounds(self, m, seed):
        w = np.random.default_rng(seed).dirichlet(np.ones(m) * 0.3)
        ess = effective_sample_size(w)
        assert 1 - 1e-12 <= ess <= m + 1e-12


class TestCoefficients:
    def test_uniform_identity(self):
        z = np.random.default_rng(1).standard_normal((3, 5))
        assert np.array_equal(etpf_coefficients(z, np.full(5, 0.2)), np.eye(5))

    def test_two_member_example(self):
        d = etpf_coefficients([0.0, 1.0], [0.75, 0.25])
        assert np.allclose(d, [[1.0, 0.5], [0.0, 0.5]])
        za = apply_transform([0.0, 1.0], d)
        assert np.allclose(za, [[0.0, 0.5]])
        assert za.mean() == pytest.approx(0.25)

    def test_unit_mass_collapses(self):
        z = np.array([[0.0, 2.0, 5.0], [1.0, -1.0, 0.5]])
        za = apply_transform(z, etpf_coefficients(z, [0.0, 1.0, 0.0]))
        assert np.allclose(za, z[:, [1, 1, 1]])

    @pytest.mark.parametrize("method", ["sort", "simplex"])
    def test_scalar_routes_agree(self, method):
        rng = np.random.default_rng(4)
        z = rng.standard_normal((1, 9))
        w = rng.dirichlet(np.ones(9))
        assert np.allclose(etpf_coefficients(z, w, method), etpf_coefficients(z, w, "simplex"), atol=1e-12)

    def test_sort_needs_scalar(self):
        with pytest.raises(ValueError):
            etpf_coefficients(np.zeros((2, 3)) + np.arange(3), [0.5, 0.25, 0.25], "sort")

    @settings(max_examples=60, deadline=None)
    @given(st.integers(3, 10), st.integers(1, 4), st.integers(0, 2**32 - 1))
    def test_bayes_consistent_mean(self, m, n, seed):
        rng = np.random.default_rng(seed)
        z = rng.standard_normal((n, m)) * rng.uniform(0.1, 5)
        w = rng.dirichlet(np.ones(m))
        d = etpf_coefficients(z, w)
        assert np.all(d >= 0)
        assert np.allclose(d.sum(axis=0), 1.0, atol=1e-12)
        assert np.allclose(apply_transform(z, d).mean(axis=1), z @ w, atol=1e-9)
