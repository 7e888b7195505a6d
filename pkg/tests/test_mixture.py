"""Gaussian mixtures: density, sampling, EM fitting, serialisation."""

import math

import numpy as np
import pytest

from fieldmon.mixture import GaussianMixture, fit_gm


def single(mean, cov, d=2):
    return GaussianMixture(weights=[1.0], means=[mean], covs=[cov])


class TestDensity:
    def test_standard_normal_at_origin(self):
        gm = single([0.0, 0.0], np.eye(2))
        assert gm.density([0, 0]) == pytest.approx(1.0 / (2 * math.pi), abs=1e-12)

    def test_duplicate_components_equal_single(self):
        one = single([0.5, -0.2], np.eye(2))
        two = GaussianMixture(weights=[0.5, 0.5], means=[[0.5, -0.2]] * 2,
                              covs=[np.eye(2)] * 2)
        x = np.array([0.3, 0.4])
        assert two.density(x) == pytest.approx(one.density(x), rel=1e-12)

    def test_far_point_vanishes(self):
        gm = single([0.0, 0.0], np.eye(2))
        x = np.array([20.0, 0.0])
        direct = math.exp(-0.5 * 400.0) / (2 * math.pi)
        assert gm.density(x) == pytest.approx(direct, rel=1e-9)
        assert gm.density(x) < 1e-30

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            single([0.0, 0.0], np.eye(2)).log_density(np.zeros((3, 3)))


class TestSampling:
    def test_point_mass(self):
        gm = single([2.0, 3.0], 1e-12 * np.eye(2))
        s = gm.sample(100, 0)
        assert np.allclose(s, [2.0, 3.0], atol=1e-4)

    def test_empirical_mean(self):
        gm = GaussianMixture(weights=[0.3, 0.7], means=[[-1.0, 0.0], [2.0, 1.0]],
                             covs=[np.eye(2), 0.5 * np.eye(2)])
        n = 100_000
        s = gm.sample(n, 5)
        want = gm.mean()
        # per-axis std error bound from the mixture second moment
        second = sum(w * (c + np.outer(m - want, m - want))
                     for w, m, c in zip(gm.weights, gm.means, gm.covs))
        se = np.sqrt(np.diag(second) / n)
        assert np.all(np.abs(s.mean(axis=0) - want) < 3 * se)

    def test_deterministic(self):
        gm = single([0.0, 0.0], np.eye(2))
        assert np.array_equal(gm.sample(50, 9), gm.sample(50, 9))


class TestFit:
    def test_identical_points_floor(self):
        pts = np.tile([1.5, -2.0], (40, 1))
        gm = fit_gm(pts, 1, reg_floor=1e-6, seed=0)
        assert np.allclose(gm.means[0], [1.5, -2.0])
        assert np.allclose(gm.covs[0], 1e-6 * np.eye(2), atol=1e-18)

    def test_two_clusters_match_kmeans_oracle(self):
        rng = np.random.default_rng(2)
        a = rng.normal((-10, 0), 0.1, (150, 2))
        b = rng.normal((10, 0), 0.1, (150, 2))
        pts = np.vstack([a, b])
        gm = fit_gm(pts, 2, seed=4)

        # independent oracle: plain Lloyd iterations from extreme starts
        centers = np.array([pts[pts[:, 0].argmin()], pts[pts[:, 0].argmax()]])
        for _ in range(20):
            d = ((pts[:, None, :] - centers[None]) ** 2).sum(axis=2)
            lab = d.argmin(axis=1)
            centers = np.array([pts[lab == i].mean(axis=0) for i in range(2)])
        got = gm.means[np.argsort(gm.means[:, 0])]
        want = centers[np.argsort(centers[:, 0])]
        assert np.all(np.abs(got - want) < 0.2)

    def test_k1_closed_form(self):
        rng = np.random.default_rng(3)
        pts = rng.standard_normal((200, 3)) * [1.0, 2.0, 0.5]
        gm = fit_gm(pts, 1, reg_floor=1e-9, seed=0)
        assert np.allclose(gm.means[0], pts.mean(axis=0), atol=1e-12)
        assert np.allclose(gm.covs[0], np.cov(pts.T, bias=True), atol=1e-10)

    def test_loglik_monotone(self):
        rng = np.random.default_rng(5)
        pts = np.vstack([rng.normal((-3, 1), 0.8, (120, 2)),
                         rng.normal((4, -2), 1.3, (180, 2))])
        _, hist = fit_gm(pts, 3, seed=1, return_history=True)
        assert len(hist) >= 2
        assert np.all(np.diff(hist) >= -1e-8)

    def test_invariants(self):
        rng = np.random.default_rng(6)
        for seed in range(5):
            pts = rng.standard_normal((80, 4))
            gm = fit_gm(pts, 3, reg_floor=1e-6, seed=seed)
            assert gm.weights.sum() == pytest.approx(1.0, abs=1e-9)
            assert np.all(gm.weights >= 0)
            for c in gm.covs:
                assert np.allclose(c, c.T, atol=1e-12)
                assert np.linalg.eigvalsh(c).min() >= 1e-6 - 1e-12

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            fit_gm(np.zeros((2, 2)), 3)


def test_json_round_trip():
    gm = GaussianMixture(weights=[0.25, 0.75],
                         means=[[0.0, 1.0, 2.0, 3.0], [1.0, 1.0, 1.0, 1.0]],
                         covs=[np.diag([1.0, 2.0, 3.0, 4.0]), np.eye(4)])
    back = GaussianMixture.from_json(gm.to_json())
    assert back.dim == 4
    assert np.array_equal(back.weights, gm.weights)
    assert np.array_equal(back.means, gm.means)
    assert np.array_equal(back.covs, gm.covs)
