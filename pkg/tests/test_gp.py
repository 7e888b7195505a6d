"""GP substrate: kernel values, entropies, likelihoods, conditionals."""

import math

import numpy as np
import pytest

from fieldmon.gp import (DegenerateCovarianceError, HyperParams, chol_with_jitter,
                         conditional_entropies, conditional_entropy_point,
                         conditional_variance, cov_matrix, gaussian_entropy,
                         kernel_eval, log_likelihood)

HALF_LN_2PIE = 0.5 * (1.0 + math.log(2.0 * math.pi))


def theta(sf=1.0, sn=0.0, sl=(1.0, 1.0)):
    return HyperParams(sf, sn, sl)


class TestKernelEval:
    def test_zero_distance_no_noise(self):
        assert kernel_eval((0, 0), (0, 0), theta()) == 1.0

    def test_unit_distance(self):
        assert kernel_eval((0, 0), (1, 0), theta()) == pytest.approx(math.exp(-0.5), abs=1e-12)

    def test_diagonal_includes_noise(self):
        assert kernel_eval((3, 3), (3, 3), theta(sn=0.5)) == pytest.approx(1.25, abs=1e-12)

    def test_symmetric(self):
        rng = np.random.default_rng(0)
        th = theta(1.3, 0.2, (0.7, 2.0))
        for _ in range(50):
            a, b = rng.uniform(-5, 5, (2, 2))
            assert kernel_eval(a, b, th) == kernel_eval(b, a, th)

    def test_invalid_hyperparams(self):
        with pytest.raises(ValueError):
            HyperParams(0.0, 0.1, (1.0, 1.0))
        with pytest.raises(ValueError):
            HyperParams(1.0, -0.1, (1.0, 1.0))
        with pytest.raises(ValueError):
            HyperParams(1.0, 0.1, (1.0, -1.0))


class TestCovMatrix:
    def test_single_location(self):
        assert cov_matrix([(2.0, 3.0)], theta()) == pytest.approx(np.array([[1.0]]))

    def test_duplicate_locations_rank_one(self):
        cov = cov_matrix([(1.0, 1.0), (1.0, 1.0)], theta())
        assert np.allclose(cov, np.ones((2, 2)))

    def test_matches_elementwise_kernel(self):
        rng = np.random.default_rng(3)
        X = rng.uniform(0, 4, (3, 2))
        th = theta(1.4, 0.3, (0.5, 1.5))
        cov = cov_matrix(X, th)
        for i in range(3):
            for j in range(3):
                assert cov[i, j] == pytest.approx(kernel_eval(X[i], X[j], th), abs=1e-14)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            cov_matrix(np.empty((0, 2)), theta())

    def test_psd_up_to_tolerance(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            X = rng.uniform(0, 10, (rng.integers(2, 9), 2))
            th = theta(rng.uniform(0.5, 2), rng.uniform(0, 0.5),
                       tuple(rng.uniform(0.2, 3, 2)))
            cov = cov_matrix(X, th)
            eig = np.linalg.eigvalsh(cov)
            assert eig.min() >= -1e-8 * np.trace(cov)


class TestGaussianEntropy:
    def test_closed_forms(self):
        assert gaussian_entropy([[1.0]]) == pytest.approx(HALF_LN_2PIE, abs=1e-9)
        assert gaussian_entropy(np.eye(2)) == pytest.approx(2 * HALF_LN_2PIE, abs=1e-9)
        assert gaussian_entropy([[4.0]]) == pytest.approx(HALF_LN_2PIE + math.log(2), abs=1e-9)

    def test_chain_rule_on_random_instances(self):
        rng = np.random.default_rng(123)
        for _ in range(10):
            A = rng.standard_normal((6, 6))
            sigma = A @ A.T + 6 * np.eye(6)
            na = rng.integers(1, 5)
            s_aa = sigma[:na, :na]
            s_ab = sigma[:na, na:]
            s_bb = sigma[na:, na:]
            schur = s_aa - s_ab @ np.linalg.solve(s_bb, s_ab.T)
            lhs = gaussian_entropy(sigma)
            rhs = gaussian_entropy(s_bb) + gaussian_entropy(schur)
            assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_degenerate_matrix_raises(self):
        with pytest.raises(DegenerateCovarianceError):
            gaussian_entropy(np.zeros((2, 2)))

    def test_matches_quadrature_1d(self):
        # -int p log p for N(0, v) on a wide grid
        for v in (0.5, 1.0, 3.7):
            x = np.linspace(-40 * math.sqrt(v), 40 * math.sqrt(v), 400001)
            log_p = -0.5 * x * x / v - 0.5 * math.log(2 * math.pi * v)
            h_quad = -np.trapezoid(np.exp(log_p) * log_p, x)
            assert gaussian_entropy([[v]]) == pytest.approx(h_quad, abs=1e-6)


class TestLogLikelihood:
    def test_standard_normal_at_zero(self):
        want = -0.5 * math.log(2 * math.pi)
        assert log_likelihood([0.0], [(0, 0)], theta()) == pytest.approx(want, abs=1e-12)

    def test_standard_normal_at_one(self):
        assert log_likelihood([1.0], [(0, 0)], theta()) == pytest.approx(-1.4189385332046727, abs=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            log_likelihood([1.0, 2.0, 3.0], [(0, 0), (1, 1)], theta())


class TestConditionals:
    def test_empty_conditioning_set(self):
        assert conditional_variance((0, 0), [], theta(sn=0.1)) == pytest.approx(1.01, abs=1e-12)

    def test_observed_point_fully_determined(self):
        var = conditional_variance((0.5, 0.5), [(0.5, 0.5)], theta())
        assert abs(var) <= 1e-9

    def test_far_point_keeps_prior_variance(self):
        th = theta(1.0, 0.1, (1.0, 1.0))
        var = conditional_variance((10.0, 0.0), [(0.0, 0.0)], th)
        # direct formula: prior - k^2 / K_aa
        k = kernel_eval((10.0, 0.0), (0.0, 0.0), th)
        want = 1.01 - k * k / 1.01
        assert var == pytest.approx(want, abs=1e-12)
        assert abs(var - 1.01) < 1e-6

    def test_entropy_floor_case(self):
        h = conditional_entropy_point((0.5, 0.5), [(0.5, 0.5)], theta())
        assert h == pytest.approx(0.5 * (1 + math.log(2 * math.pi) + math.log(1e-12)), abs=1e-9)

    def test_entropy_via_schur_complement(self):
        rng = np.random.default_rng(7)
        th = theta(1.2, 0.3, (0.8, 1.4))
        A = rng.uniform(0, 3, (4, 2))
        x = rng.uniform(0, 3, 2)
        joint = cov_matrix(np.vstack([x, A]), th)
        schur = joint[0, 0] - joint[0, 1:] @ np.linalg.solve(joint[1:, 1:], joint[1:, 0])
        want = gaussian_entropy([[schur]])
        assert conditional_entropy_point(x, A, th) == pytest.approx(want, abs=1e-9)

    def test_variance_non_increasing_in_conditioning_set(self):
        rng = np.random.default_rng(11)
        th = theta(1.0, 0.2, (1.0, 1.0))
        pts = rng.uniform(0, 5, (8, 2))
        x = rng.uniform(0, 5, 2)
        prev = math.inf
        for n in range(len(pts) + 1):
            var = conditional_variance(x, pts[:n], th)
            assert var <= prev + 1e-10
            prev = var

    def test_vectorised_matches_scalar(self):
        rng = np.random.default_rng(21)
        th = theta(0.9, 0.1, (1.5, 0.7))
        A = rng.uniform(0, 4, (5, 2))
        X = rng.uniform(0, 4, (7, 2))
        batch = conditional_entropies(X, A, th)
        for i, x in enumerate(X):
            assert batch[i] == pytest.approx(conditional_entropy_point(x, A, th), abs=1e-10)


def test_jitter_recovers_near_singular():
    cov = np.ones((3, 3)) + 1e-13 * np.eye(3)
    L = chol_with_jitter(cov)
    assert np.all(np.isfinite(L))
