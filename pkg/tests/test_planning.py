"""Tour construction and kinematic traversal timing."""

import itertools
import math

import numpy as np
import pytest

from fieldmon.planning import MotionLimits, Tour, segment_time, traverse, tsp_tour


def path_length(start, pts):
    legs = np.diff(np.vstack([start, pts]), axis=0)
    return float(np.hypot(legs[:, 0], legs[:, 1]).sum())


class TestTSP:
    def test_two_points_in_line(self):
        t = tsp_tour((0, 0), [(1.0, 0.0), (2.0, 0.0)])
        assert list(t.order) == [0, 1]
        assert t.total_length == pytest.approx(2.0, abs=1e-12)

    def test_single_point(self):
        t = tsp_tour((1, 1), [(4.0, 5.0)])
        assert t.total_length == pytest.approx(5.0, abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            tsp_tour((0, 0), np.empty((0, 2)))

    def test_near_optimal_on_small_instances(self):
        perms = np.array(list(itertools.permutations(range(8))))
        for seed in range(50):
            rng = np.random.default_rng(seed)
            start = rng.uniform(0, 10, 2)
            pts = rng.uniform(0, 10, (8, 2))
            tour = tsp_tour(start, pts)

            nodes = np.vstack([start, pts])
            d = np.hypot(nodes[:, None, 0] - nodes[None, :, 0],
                         nodes[:, None, 1] - nodes[None, :, 1])
            seq = perms + 1
            lengths = d[0, seq[:, 0]] + d[seq[:, :-1], seq[:, 1:]].sum(axis=1)
            best = lengths.min()
            assert best - 1e-9 <= tour.total_length <= 1.2 * best

    def test_local_optimum_no_improving_exchange(self):
        rng = np.random.default_rng(3)
        start = rng.uniform(0, 10, 2)
        pts = rng.uniform(0, 10, (12, 2))
        tour = tsp_tour(start, pts)
        nodes = np.vstack([start, pts])
        seq = np.concatenate([[0], tour.order + 1])

        def d(a, b):
            return math.hypot(*(nodes[a] - nodes[b]))

        n = len(tour.order)
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                delta = d(seq[i - 1], seq[j]) - d(seq[i - 1], seq[i])
                if j < n:
                    delta += d(seq[i], seq[j + 1]) - d(seq[j], seq[j + 1])
                assert delta >= -1e-9

    def test_two_opt_never_worse_than_nearest_neighbor(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            start = rng.uniform(0, 10, 2)
            pts = rng.uniform(0, 10, (10, 2))
            tour = tsp_tour(start, pts)
            # plain nearest-neighbour length
            order = []
            remaining = list(range(10))
            cur = start
            while remaining:
                dd = np.hypot(pts[remaining, 0] - cur[0], pts[remaining, 1] - cur[1])
                pick = remaining[int(np.argmin(dd))]
                order.append(pick)
                remaining.remove(pick)
                cur = pts[pick]
            assert tour.total_length <= path_length(start, pts[order]) + 1e-9


class TestTraverse:
    def test_trapezoid_closed_form(self):
        lim = MotionLimits(v_max=(30.0, 30.0), a_max=(300.0, 300.0))
        t = segment_time(np.array([0.0, 0.0]), np.array([300.0, 0.0]), lim)
        assert t == pytest.approx(300 / 30 + 30 / 300, abs=1e-12)

    def test_triangular_profile(self):
        lim = MotionLimits(v_max=(30.0, 30.0), a_max=(300.0, 300.0))
        # shorter than v^2/a = 3: never reaches the speed cap
        t = segment_time(np.array([0.0, 0.0]), np.array([1.2, 0.0]), lim)
        assert t == pytest.approx(2 * math.sqrt(1.2 / 300), abs=1e-12)

    def test_zero_length_segment(self):
        lim = MotionLimits(dwell=1.0)
        tour = tsp_tour((0, 0), [(0.0, 0.0), (0.0, 0.0)])
        sched = traverse(tour, lim, t0=5.0)
        assert sched[0][1] == pytest.approx(5.0)
        assert sched[1][1] == pytest.approx(6.0)  # dwell only

    def test_timestamps_strictly_increasing(self):
        rng = np.random.default_rng(1)
        lim = MotionLimits()
        for seed in range(10):
            pts = np.random.default_rng(seed).uniform(0, 100, (8, 2))
            sched = traverse(tsp_tour((0, 0), pts), lim, 0.0)
            times = [t for _, t in sched]
            assert np.all(np.diff(times) > 0)

    def test_segment_time_at_least_axis_bound(self):
        lim = MotionLimits(v_max=(30.0, 15.0), a_max=(300.0, 300.0))
        frm = np.array([0.0, 0.0])
        to = np.array([90.0, 60.0])
        t = segment_time(frm, to, lim)
        assert t >= 90 / 30 - 1e-12
        assert t >= 60 / 15 - 1e-12

    def test_invalid_limits(self):
        with pytest.raises(ValueError):
            MotionLimits(dwell=0.0)
