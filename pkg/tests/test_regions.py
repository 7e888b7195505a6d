"""Informative-region optimisation and the discrete greedy reference."""

import itertools
import math

import numpy as np
import pytest
from scipy.stats import chi2

from fieldmon.gp import HyperParams, conditional_entropy_point, cov_matrix, gaussian_entropy
from fieldmon.mixture import GaussianMixture
from fieldmon.regions import (ENTROPY_MIN, PlannerDegenerateError, Region,
                              SensingPlanConfig, entropy_to_loglik,
                              greedy_entropy_discrete, greedy_regions,
                              location_log_likelihood, mcmc_region,
                              sample_sensing_locations)

SQUARE = Region((0.0, 10.0, 0.0, 10.0))
HOLE = ((4.0, 4.0), (6.0, 4.0), (6.0, 6.0), (4.0, 6.0))


class TestRegion:
    def test_membership(self):
        reg = Region((0.0, 10.0, 0.0, 10.0), (HOLE,))
        assert reg.contains_point((1.0, 1.0))
        assert not reg.contains_point((5.0, 5.0))   # inside the hole
        assert not reg.contains_point((-1.0, 5.0))  # outside the rectangle

    def test_validation(self):
        with pytest.raises(ValueError):
            Region((0.0, 0.0, 0.0, 1.0))  # zero area
        with pytest.raises(ValueError):
            # hole vertex outside the bounds
            Region((0.0, 10.0, 0.0, 10.0), (((-1.0, 2.0), (3.0, 2.0), (2.0, 3.0)),))
        with pytest.raises(ValueError):
            # degenerate hole
            Region((0.0, 10.0, 0.0, 10.0), (((1.0, 1.0), (2.0, 2.0)),))

    def test_uniform_sampling_respects_holes(self):
        reg = Region((0.0, 10.0, 0.0, 10.0), (HOLE,))
        pts = reg.uniform_sample(500, np.random.default_rng(0))
        assert reg.contains(pts).all()

    def test_json_round_trip(self):
        reg = Region((0.0, 10.0, 0.0, 10.0), (HOLE,))
        back = Region.from_json_dict(reg.to_json_dict())
        assert back.bounds == reg.bounds
        assert len(back.holes) == 1


class TestLocationLikelihood:
    def test_outside_region_impossible(self):
        th = HyperParams(1.0, 0.0, (1.0, 1.0))
        assert location_log_likelihood((-1, -1), [], th, 150.0, SQUARE) == -math.inf

    def test_unit_entropy(self):
        assert entropy_to_loglik(1.0, 150.0) == pytest.approx(-1.0, abs=1e-12)
        assert entropy_to_loglik(1.0, 7.0) == pytest.approx(-1.0, abs=1e-12)

    def test_high_entropy_saturates(self):
        lp = entropy_to_loglik(2.0, 150.0)
        assert -1e-40 < lp <= 0.0

    def test_below_floor_impossible(self):
        assert entropy_to_loglik(ENTROPY_MIN, 150.0) == -math.inf
        assert entropy_to_loglik(1e-4, 150.0) == -math.inf


class TestMCMCRegion:
    def test_uniform_under_constant_target(self):
        # no anchors and a stationary kernel: entropy is constant across the
        # region, so the chain must sample it uniformly.  Wide proposals and
        # thinning give near-independent draws for the chi-square check.
        th = HyperParams(1.0, 0.1, (1.0, 1.0))
        cfg = SensingPlanConfig(n_r=1, n_o=1, n_p=1, p=100_000, burn_in=200,
                                thin=1, proposal_frac=0.5)
        samples, w = mcmc_region([], th, SQUARE, cfg, 7)
        assert SQUARE.contains(samples).all()
        counts, _, _ = np.histogram2d(samples[:, 0], samples[:, 1],
                                      bins=10, range=[[0, 10], [0, 10]])
        expected = samples.shape[0] / 100.0
        stat = np.sum((counts - expected) ** 2 / expected)
        # thinning the correlated walk: accept a generous bound vs iid chi2
        assert stat < 3 * chi2.ppf(0.99, 99)
        assert np.allclose(w.sum(), 1.0)

    def test_never_leaves_region_with_holes(self):
        reg = Region((0.0, 10.0, 0.0, 10.0), (HOLE,))
        th = HyperParams(1.0, 0.1, (1.0, 1.0))
        cfg = SensingPlanConfig(n_r=1, n_o=1, n_p=1, p=4000, burn_in=50,
                                thin=1, proposal_frac=0.3)
        samples, _ = mcmc_region([], th, reg, cfg, 3)
        assert reg.contains(samples).all()

    def test_anchor_repels_samples(self):
        th = HyperParams(0.8, 0.1, (2.5, 2.5))
        anchor = np.array([[5.0, 5.0]])
        cfg = SensingPlanConfig(n_r=1, n_o=1, n_p=1, p=8000, burn_in=200,
                                thin=1, proposal_frac=0.3)
        samples, _ = mcmc_region(anchor, th, SQUARE, cfg, 5)
        d_chain = np.hypot(samples[:, 0] - 5, samples[:, 1] - 5).mean()
        uni = SQUARE.uniform_sample(20000, np.random.default_rng(0))
        d_uni = np.hypot(uni[:, 0] - 5, uni[:, 1] - 5).mean()
        assert d_chain > d_uni


class TestGreedyRegions:
    def test_recovers_discrete_argmax(self):
        # narrow strip with an anchor at one end: entropy grows with distance
        # from the anchor, so the chain mass must vote for the candidate the
        # brute-force conditional entropy prefers
        strip = Region((0.0, 10.0, 0.0, 1.0))
        th = HyperParams(0.6, 0.1, (3.0, 3.0))
        anchor = (1.0, 0.5)
        candidates = np.array([[1.0, 0.5], [3.0, 0.5], [9.0, 0.5]])
        ents = [conditional_entropy_point(c, [anchor], th) for c in candidates]
        best = int(np.argmax(ents))

        cfg = SensingPlanConfig(n_r=1, n_o=1, n_p=1, p=4000, burn_in=300,
                                thin=1, proposal_frac=0.15)
        samples, _ = mcmc_region(np.array([anchor]), th, strip, cfg, 11)
        d = np.linalg.norm(samples[:, None, :] - candidates[None], axis=2)
        votes = np.bincount(d.argmin(axis=1).ravel(), minlength=3)
        assert int(np.argmax(votes)) == best

    def test_tiny_length_scale_no_crash(self):
        th = HyperParams(1.0, 0.1, (0.01, 0.01))
        cfg = SensingPlanConfig(n_r=2, n_o=1, n_p=1, p=150, burn_in=30)
        irs = greedy_regions(th, SQUARE, cfg, 0)
        assert len(irs.regions) == 2
        assert SQUARE.contains(irs.all_anchors()).all()

    def test_anchors_always_inside_region(self):
        reg = Region((0.0, 10.0, 0.0, 10.0), (HOLE,))
        th = HyperParams(0.9, 0.2, (2.0, 2.0))
        cfg = SensingPlanConfig(n_r=2, n_o=2, n_p=1, p=80, burn_in=20)
        for seed in range(100):
            irs = greedy_regions(th, reg, cfg, seed)
            assert reg.contains(irs.all_anchors()).all()

    def test_deterministic(self):
        th = HyperParams(0.9, 0.2, (2.0, 2.0))
        cfg = SensingPlanConfig(n_r=2, n_o=2, n_p=1, p=120, burn_in=30)
        a = greedy_regions(th, SQUARE, cfg, 9)
        b = greedy_regions(th, SQUARE, cfg, 9)
        for ga, gb in zip(a.regions, b.regions):
            assert np.array_equal(ga.means, gb.means)
        assert np.array_equal(a.all_anchors(), b.all_anchors())

    def test_json_round_trip(self):
        th = HyperParams(0.9, 0.2, (2.0, 2.0))
        cfg = SensingPlanConfig(n_r=2, n_o=1, n_p=1, p=80, burn_in=20)
        irs = greedy_regions(th, SQUARE, cfg, 1)
        from fieldmon.regions import InformativeRegionSet
        back = InformativeRegionSet.from_json_dict(irs.to_json_dict())
        assert np.array_equal(back.all_anchors(), irs.all_anchors())


class TestSampleSensingLocations:
    def _irs(self, seed=0):
        th = HyperParams(0.9, 0.2, (2.0, 2.0))
        cfg = SensingPlanConfig(n_r=5, n_o=2, n_p=2, p=100, burn_in=20)
        return greedy_regions(th, SQUARE, cfg, seed)

    def test_count(self):
        X = sample_sensing_locations(self._irs(), 2, SQUARE, 0)
        assert X.shape == (10, 2)

    def test_point_mass_region(self):
        from fieldmon.regions import InformativeRegionSet

        gm = GaussianMixture(weights=[1.0], means=[[5.0, 5.0]], covs=[1e-6 * np.eye(2)])
        irs = InformativeRegionSet(regions=[gm], anchors=[np.array([[5.0, 5.0]])],
                                   theta=HyperParams(1.0, 0.1, (1.0, 1.0)))
        X = sample_sensing_locations(irs, 50, SQUARE, 3)
        assert np.all(np.hypot(X[:, 0] - 5, X[:, 1] - 5) < 4 * math.sqrt(1e-6))

    def test_membership_many_seeds(self):
        reg = Region((0.0, 10.0, 0.0, 10.0), (HOLE,))
        irs = self._irs(1)
        for seed in range(100):
            X = sample_sensing_locations(irs, 2, reg, seed)
            assert reg.contains(X).all()


class TestGreedyDiscrete:
    def test_full_set(self):
        rng = np.random.default_rng(0)
        cands = rng.uniform(0, 5, (6, 2))
        th = HyperParams(1.0, 0.4, (1.0, 1.0))
        idx, h = greedy_entropy_discrete(cands, 6, th)
        assert sorted(idx) == list(range(6))
        assert h == pytest.approx(gaussian_entropy(cov_matrix(cands, th)), abs=1e-12)

    def test_single_pick_tie_break(self):
        cands = np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]])
        th = HyperParams(1.0, 0.2, (1.0, 1.0))
        idx, _ = greedy_entropy_discrete(cands, 1, th)
        assert idx == [0]

    def test_too_many_requested(self):
        with pytest.raises(ValueError):
            greedy_entropy_discrete(np.zeros((2, 2)), 3, HyperParams(1, 0.1, (1, 1)))

    def test_bound_against_enumeration(self):
        rng = np.random.default_rng(1)
        th = HyperParams(1.0, 0.4, (0.8, 0.8))
        n_pick = 3
        bound = 1.0 - ((n_pick - 1) / n_pick) ** n_pick
        for _ in range(20):
            cands = rng.uniform(0, 3, (12, 2))
            _, h_greedy = greedy_entropy_discrete(cands, n_pick, th)
            best = max(gaussian_entropy(cov_matrix(cands[list(sub)], th))
                       for sub in itertools.combinations(range(12), n_pick))
            assert h_greedy >= bound * best - 1e-12

    def test_monotone_in_n(self):
        rng = np.random.default_rng(2)
        th = HyperParams(1.0, 0.4, (0.8, 0.8))
        cands = rng.uniform(0, 4, (10, 2))
        prev = -math.inf
        for n in range(1, 11):
            _, h = greedy_entropy_discrete(cands, n, th)
            assert h >= prev - 1e-12
            prev = h


def test_planner_degenerate_when_region_determined():
    # a kernel with almost no variance makes every location "determined"
    th = HyperParams(0.01, 0.0001, (1.0, 1.0))
    cfg = SensingPlanConfig(n_r=1, n_o=1, n_p=1, p=50, burn_in=10)
    with pytest.raises(PlannerDegenerateError):
        mcmc_region([], th, SQUARE, cfg, 0)
