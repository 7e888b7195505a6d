"""Hot numeric kernels with optional Numba acceleration.

Every kernel exists in two functionally equivalent flavours: a pure-NumPy
implementation (suffix ``_np``) and a Numba ``@njit`` one (suffix ``_nb``).
The public, unsuffixed names are bound to one flavour at import time:

* if Numba is importable and the environment variable ``FIELDMON_NUMBA``
  is unset or truthy, the jitted kernels are used;
* setting ``FIELDMON_NUMBA=0`` (or ``false``/``no``/``off``) forces the
  pure-NumPy path, e.g. for debugging or lightweight installs.

Both flavours are kept importable whenever Numba is present so that
``benchmarks/bench_kernels.py`` and the cross-path tests can compare them
in a single process.  Cholesky factorisations themselves go through LAPACK
in both paths (see :mod:`fieldmon.gp`); the kernels here cover the O(n^2)
pairwise loops and triangular solves where call overhead dominates.
"""

from __future__ import annotations

import math
import os

import numpy as np
from scipy.linalg import solve_triangular

_LOG_2PI = math.log(2.0 * math.pi)

_env = os.environ.get("FIELDMON_NUMBA", "").strip().lower()
_numba_wanted = _env not in ("0", "false", "no", "off")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on minimal installs
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def decorator(fn):
            return fn

        return decorator


USING_NUMBA = HAVE_NUMBA and _numba_wanted


# ---------------------------------------------------------------------------
# Squared-exponential covariance
# ---------------------------------------------------------------------------


def sqexp_cov_np(X: np.ndarray, sf2: float, sn2: float, il0: float, il1: float) -> np.ndarray:
    """Dense kernel matrix over locations X (n, 2).

    il0/il1 are the inverse squared length-scales.  Noise variance sn2 is
    added wherever the two coordinates compare exactly equal (Kronecker
    delta), which covers the diagonal and exact duplicates.
    """
    d0 = X[:, 0, None] - X[None, :, 0]
    d1 = X[:, 1, None] - X[None, :, 1]
    cov = sf2 * np.exp(-0.5 * (d0 * d0 * il0 + d1 * d1 * il1))
    if sn2 != 0.0:
        same = (X[:, 0, None] == X[None, :, 0]) & (X[:, 1, None] == X[None, :, 1])
        cov = cov + sn2 * same
    return cov


@njit(cache=True)
def sqexp_cov_nb(X, sf2, sn2, il0, il1):  # pragma: no cover - jitted
    n = X.shape[0]
    cov = np.empty((n, n))
    for i in range(n):
        cov[i, i] = sf2 + sn2
        for j in range(i + 1, n):
            d0 = X[i, 0] - X[j, 0]
            d1 = X[i, 1] - X[j, 1]
            v = sf2 * np.exp(-0.5 * (d0 * d0 * il0 + d1 * d1 * il1))
            if d0 == 0.0 and d1 == 0.0:
                v += sn2
            cov[i, j] = v
            cov[j, i] = v
    return cov


def sqexp_cross_np(A: np.ndarray, B: np.ndarray, sf2: float, sn2: float, il0: float, il1: float) -> np.ndarray:
    """Cross-covariance matrix (m, n) between location sets A and B."""
    d0 = A[:, 0, None] - B[None, :, 0]
    d1 = A[:, 1, None] - B[None, :, 1]
    cov = sf2 * np.exp(-0.5 * (d0 * d0 * il0 + d1 * d1 * il1))
    if sn2 != 0.0:
        same = (A[:, 0, None] == B[None, :, 0]) & (A[:, 1, None] == B[None, :, 1])
        cov = cov + sn2 * same
    return cov


@njit(cache=True)
def sqexp_cross_nb(A, B, sf2, sn2, il0, il1):  # pragma: no cover - jitted
    m = A.shape[0]
    n = B.shape[0]
    cov = np.empty((m, n))
    for i in range(m):
        for j in range(n):
            d0 = A[i, 0] - B[j, 0]
            d1 = A[i, 1] - B[j, 1]
            v = sf2 * np.exp(-0.5 * (d0 * d0 * il0 + d1 * d1 * il1))
            if d0 == 0.0 and d1 == 0.0:
                v += sn2
            cov[i, j] = v
    return cov


# ---------------------------------------------------------------------------
# Triangular solves against a Cholesky factor
# ---------------------------------------------------------------------------


def normal_logpdf_chol_np(L: np.ndarray, y: np.ndarray) -> float:
    """Zero-mean Gaussian log density of y given lower Cholesky factor L."""
    z = solve_triangular(L, y, lower=True, check_finite=False)
    logdet = np.sum(np.log(np.diag(L)))
    return float(-0.5 * z @ z - logdet - 0.5 * y.size * _LOG_2PI)


@njit(cache=True)
def normal_logpdf_chol_nb(L, y):  # pragma: no cover - jitted
    n = y.shape[0]
    quad = 0.0
    logdet = 0.0
    z = np.empty(n)
    for i in range(n):
        s = y[i]
        for j in range(i):
            s -= L[i, j] * z[j]
        z[i] = s / L[i, i]
        quad += z[i] * z[i]
        logdet += np.log(L[i, i])
    return -0.5 * quad - logdet - 0.5 * n * _LOG_2PI


def conditional_variances_np(L: np.ndarray, k_cross: np.ndarray, prior_diag: np.ndarray) -> np.ndarray:
    """Posterior variances for query points given anchor factor L.

    k_cross is (m, n): covariances between the m queries and the n anchors;
    prior_diag is (m,): the queries' prior variances K(x, x).
    """
    z = solve_triangular(L, k_cross.T, lower=True, check_finite=False)
    return prior_diag - np.sum(z * z, axis=0)


@njit(cache=True)
def conditional_variances_nb(L, k_cross, prior_diag):  # pragma: no cover - jitted
    m = k_cross.shape[0]
    n = k_cross.shape[1]
    out = np.empty(m)
    z = np.empty(n)
    for q in range(m):
        quad = 0.0
        for i in range(n):
            s = k_cross[q, i]
            for j in range(i):
                s -= L[i, j] * z[j]
            z[i] = s / L[i, i]
            quad += z[i] * z[i]
        out[q] = prior_diag[q] - quad
    return out


# ---------------------------------------------------------------------------
# Gaussian-mixture log density
# ---------------------------------------------------------------------------


def gm_logpdf_np(points: np.ndarray, log_w: np.ndarray, means: np.ndarray,
                 chols: np.ndarray, logdets: np.ndarray) -> np.ndarray:
    """Log density of a GM at many points.

    points (n, d); means (k, d); chols (k, d, d) lower Cholesky factors of
    the component covariances; logdets (k,) their log-determinant halves
    (sum of log diagonal entries).
    """
    n, d = points.shape
    k = log_w.shape[0]
    comp = np.empty((k, n))
    for c in range(k):
        z = solve_triangular(chols[c], (points - means[c]).T, lower=True, check_finite=False)
        comp[c] = log_w[c] - 0.5 * np.sum(z * z, axis=0) - logdets[c] - 0.5 * d * _LOG_2PI
    top = np.max(comp, axis=0)
    out = top + np.log(np.sum(np.exp(comp - top), axis=0))
    # points infinitely unlikely under every component
    out[~np.isfinite(top)] = -np.inf
    return out


@njit(cache=True)
def gm_logpdf_nb(points, log_w, means, chols, logdets):  # pragma: no cover - jitted
    n, d = points.shape
    k = log_w.shape[0]
    out = np.empty(n)
    z = np.empty(d)
    comp = np.empty(k)
    for p in range(n):
        for c in range(k):
            quad = 0.0
            for i in range(d):
                s = points[p, i] - means[c, i]
                for j in range(i):
                    s -= chols[c, i, j] * z[j]
                z[i] = s / chols[c, i, i]
                quad += z[i] * z[i]
            comp[c] = log_w[c] - 0.5 * quad - logdets[c] - 0.5 * d * _LOG_2PI
        top = comp[0]
        for c in range(1, k):
            if comp[c] > top:
                top = comp[c]
        if not np.isfinite(top):
            out[p] = -np.inf
        else:
            acc = 0.0
            for c in range(k):
                acc += np.exp(comp[c] - top)
            out[p] = top + np.log(acc)
    return out


# ---------------------------------------------------------------------------
# Point-in-region test (rectangle minus polygonal holes)
# ---------------------------------------------------------------------------


def points_in_region_np(points: np.ndarray, bounds: np.ndarray,
                        hole_xy: np.ndarray, hole_len: np.ndarray) -> np.ndarray:
    """Boolean mask: inside the bounding rectangle and outside every hole.

    hole_xy packs all hole vertices row-wise; hole_len gives the vertex
    count of each hole.  Hole membership uses even-odd ray casting.
    """
    x = points[:, 0]
    y = points[:, 1]
    ok = (x >= bounds[0]) & (x <= bounds[1]) & (y >= bounds[2]) & (y <= bounds[3])
    off = 0
    for m in hole_len:
        poly = hole_xy[off:off + m]
        off += m
        inside = np.zeros(points.shape[0], dtype=bool)
        for i in range(m):
            x1, y1 = poly[i - 1]
            x2, y2 = poly[i]
            straddles = (y1 > y) != (y2 > y)
            if y2 != y1:
                crosses = straddles & (x < x1 + (y - y1) * (x2 - x1) / (y2 - y1))
            else:
                crosses = straddles  # straddling is impossible for horizontal edges
            inside ^= crosses
        ok &= ~inside
    return ok


@njit(cache=True)
def points_in_region_nb(points, bounds, hole_xy, hole_len):  # pragma: no cover - jitted
    n = points.shape[0]
    out = np.empty(n, dtype=np.bool_)
    for p in range(n):
        x = points[p, 0]
        y = points[p, 1]
        ok = bounds[0] <= x <= bounds[1] and bounds[2] <= y <= bounds[3]
        if ok:
            off = 0
            for h in range(hole_len.shape[0]):
                m = hole_len[h]
                inside = False
                for i in range(m):
                    prev = off + m - 1 if i == 0 else off + i - 1
                    x1 = hole_xy[prev, 0]
                    y1 = hole_xy[prev, 1]
                    x2 = hole_xy[off + i, 0]
                    y2 = hole_xy[off + i, 1]
                    if (y1 > y) != (y2 > y) and x < x1 + (y - y1) * (x2 - x1) / (y2 - y1):
                        inside = not inside
                off += m
                if inside:
                    ok = False
                    break
        out[p] = ok
    return out


# ---------------------------------------------------------------------------
# Path selection
# ---------------------------------------------------------------------------

if USING_NUMBA:
    sqexp_cov = sqexp_cov_nb
    sqexp_cross = sqexp_cross_nb
    normal_logpdf_chol = normal_logpdf_chol_nb
    conditional_variances = conditional_variances_nb
    gm_logpdf = gm_logpdf_nb
    points_in_region = points_in_region_nb
else:
    sqexp_cov = sqexp_cov_np
    sqexp_cross = sqexp_cross_np
    normal_logpdf_chol = normal_logpdf_chol_np
    conditional_variances = conditional_variances_np
    gm_logpdf = gm_logpdf_np
    points_in_region = points_in_region_np


KERNEL_PAIRS = {
    "sqexp_cov": (sqexp_cov_np, sqexp_cov_nb if HAVE_NUMBA else None),
    "sqexp_cross": (sqexp_cross_np, sqexp_cross_nb if HAVE_NUMBA else None),
    "normal_logpdf_chol": (normal_logpdf_chol_np, normal_logpdf_chol_nb if HAVE_NUMBA else None),
    "conditional_variances": (conditional_variances_np, conditional_variances_nb if HAVE_NUMBA else None),
    "gm_logpdf": (gm_logpdf_np, gm_logpdf_nb if HAVE_NUMBA else None),
    "points_in_region": (points_in_region_np, points_in_region_nb if HAVE_NUMBA else None),
}
