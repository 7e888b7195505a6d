"""Short open tours over sensing locations and kinematic traversal timing.

The tour is nearest-neighbour construction followed by 2-opt improvement
(open path: the robot does not return to its start; the next cycle begins
from the last location).  Traversal assumes straight-line segments with a
per-axis trapezoidal velocity profile capped by the velocity and
acceleration limits, plus a sensing dwell at every location.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: a 2-opt exchange must improve the length by more than this to be applied
_IMPROVE_EPS = 1e-12


@dataclass(frozen=True)
class MotionLimits:
    """Per-axis speed/acceleration caps and the sensing dwell per location."""

    v_max: tuple[float, float] = (30.0, 30.0)
    a_max: tuple[float, float] = (300.0, 300.0)
    dwell: float = 1.0

    def __post_init__(self):
        if min(*self.v_max, *self.a_max, self.dwell) <= 0:
            raise ValueError("motion limits must be positive")


@dataclass
class Tour:
    """Visit order over a location set, starting from a fixed point."""

    start: np.ndarray      # (2,)
    locations: np.ndarray  # (n, 2), original order
    order: np.ndarray      # permutation of range(n)
    total_length: float

    def ordered_locations(self) -> np.ndarray:
        return self.locations[self.order]


def _path_length(start: np.ndarray, pts: np.ndarray) -> float:
    legs = np.diff(np.vstack([start, pts]), axis=0)
    return float(np.sum(np.hypot(legs[:, 0], legs[:, 1])))


def tsp_tour(start, X) -> Tour:
    """Nearest-neighbour tour from start, improved by 2-opt to a local optimum."""
    start = np.asarray(start, dtype=float).reshape(2)
    pts = np.atleast_2d(np.asarray(X, dtype=float))
    n = pts.shape[0]
    if n == 0:
        raise ValueError("tsp_tour needs at least one location")

    # nearest-neighbour construction
    order = []
    remaining = list(range(n))
    cur = start
    while remaining:
        d = np.hypot(pts[remaining, 0] - cur[0], pts[remaining, 1] - cur[1])
        pick = remaining[int(np.argmin(d))]
        order.append(pick)
        remaining.remove(pick)
        cur = pts[pick]
    order = np.array(order, dtype=int)

    # 2-opt on the open path: reversing order[i..j] replaces the edges into
    # position i and out of position j (the latter only when j is interior)
    nodes = np.vstack([start, pts])  # node 0 is the start

    def dist(a: int, b: int) -> float:
        return math.hypot(nodes[a, 0] - nodes[b, 0], nodes[a, 1] - nodes[b, 1])

    seq = order + 1  # indices into nodes, with implicit 0 in front
    max_moves = 10 * n * n
    moves = 0
    improved = True
    while improved and moves < max_moves:
        improved = False
        for i in range(n):
            prev = seq[i - 1] if i > 0 else 0
            for j in range(i + 1, n):
                delta = dist(prev, seq[j]) - dist(prev, seq[i])
                if j + 1 < n:
                    delta += dist(seq[i], seq[j + 1]) - dist(seq[j], seq[j + 1])
                if delta < -_IMPROVE_EPS:
                    seq[i:j + 1] = seq[i:j + 1][::-1]
                    moves += 1
                    improved = True
        if moves >= max_moves:
            break
    order = seq - 1
    return Tour(start=start, locations=pts, order=order,
                total_length=_path_length(start, pts[order]))


def _axis_time(d: float, v: float, a: float) -> float:
    """Rest-to-rest time to cover distance d with speed cap v, accel cap a."""
    if d <= 0:
        return 0.0
    if d >= v * v / a:
        return d / v + v / a      # trapezoid: accelerate, cruise, brake
    return 2.0 * math.sqrt(d / a)  # triangular profile, never reaches v


def segment_time(frm: np.ndarray, to: np.ndarray, limits: MotionLimits) -> float:
    """Travel time of one straight segment: the slower axis dominates."""
    return max(
        _axis_time(abs(to[0] - frm[0]), limits.v_max[0], limits.a_max[0]),
        _axis_time(abs(to[1] - frm[1]), limits.v_max[1], limits.a_max[1]),
    )


def traverse(tour: Tour, limits: MotionLimits, t0: float = 0.0):
    """Arrival timestamps along the tour.

    Returns a list of (location, arrival_time); the robot departs each
    location after limits.dwell, so timestamps are strictly increasing.
    """
    out = []
    cur = tour.start
    t = t0
    for loc in tour.ordered_locations():
        t += segment_time(cur, loc, limits)
        out.append((loc.copy(), t))
        t += limits.dwell
        cur = loc
    return out
