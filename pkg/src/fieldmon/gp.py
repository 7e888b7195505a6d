"""Gaussian-process numerics: kernel, joint entropy, likelihood, conditionals.

All entropies are differential entropies in nats (natural log throughout).
Locations are 2-D points given as array-likes of shape (2,) or stacked as
(n, 2) float arrays.  Covariances are computed with the squared-exponential
kernel plus a noise term on exactly coincident coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels

LOG_2PI = math.log(2.0 * math.pi)
LOG_2PI_E = LOG_2PI + 1.0

#: conditional variance is floored at this value before taking the log
ENTROPY_VAR_FLOOR = 1e-12

#: first jitter added to a covariance diagonal is JITTER_SCALE * trace / n
JITTER_SCALE = 1e-10

#: the jitter doubles this many times before the matrix is declared degenerate
MAX_JITTER_DOUBLINGS = 8


class DegenerateCovarianceError(RuntimeError):
    """Covariance matrix stayed non-positive-definite after maximal jitter."""


@dataclass(frozen=True)
class HyperParams:
    """Kernel parameters: signal std-dev, noise std-dev, per-axis length-scales."""

    sigma_f: float
    sigma_n: float
    sigma_l: tuple[float, float]

    def __post_init__(self):
        if not (np.isfinite(self.sigma_f) and self.sigma_f > 0):
            raise ValueError(f"sigma_f must be finite and > 0, got {self.sigma_f}")
        if not (np.isfinite(self.sigma_n) and self.sigma_n >= 0):
            raise ValueError(f"sigma_n must be finite and >= 0, got {self.sigma_n}")
        sl = tuple(float(v) for v in self.sigma_l)
        if len(sl) != 2 or not all(np.isfinite(v) and v > 0 for v in sl):
            raise ValueError(f"sigma_l must be two finite positive entries, got {self.sigma_l}")
        object.__setattr__(self, "sigma_l", sl)

    @classmethod
    def from_vector(cls, vec) -> "HyperParams":
        v = np.asarray(vec, dtype=float)
        return cls(float(v[0]), float(v[1]), (float(v[2]), float(v[3])))

    @classmethod
    def from_log_vector(cls, log_vec) -> "HyperParams":
        return cls.from_vector(np.exp(np.asarray(log_vec, dtype=float)))

    def to_vector(self) -> np.ndarray:
        return np.array([self.sigma_f, self.sigma_n, self.sigma_l[0], self.sigma_l[1]])

    def to_log_vector(self) -> np.ndarray:
        vec = self.to_vector()
        if self.sigma_n == 0.0:
            raise ValueError("sigma_n = 0 has no log-space representation")
        return np.log(vec)


def _as_points(X) -> np.ndarray:
    pts = np.asarray(X, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected locations of shape (n, 2), got {pts.shape}")
    return np.ascontiguousarray(pts)


def _kernel_args(theta: HyperParams) -> tuple[float, float, float, float]:
    sf2 = theta.sigma_f ** 2
    sn2 = theta.sigma_n ** 2
    il0 = 1.0 / theta.sigma_l[0] ** 2
    il1 = 1.0 / theta.sigma_l[1] ** 2
    return sf2, sn2, il0, il1


def kernel_eval(xi, xj, theta: HyperParams) -> float:
    """Squared-exponential covariance between two locations.

    sigma_f^2 exp(-0.5 (xi-xj)^T diag(sigma_l^2)^-1 (xi-xj)) plus sigma_n^2
    when the coordinates compare exactly equal.
    """
    a = _as_points(xi)[0]
    b = _as_points(xj)[0]
    sf2, sn2, il0, il1 = _kernel_args(theta)
    d0 = a[0] - b[0]
    d1 = a[1] - b[1]
    v = sf2 * math.exp(-0.5 * (d0 * d0 * il0 + d1 * d1 * il1))
    if d0 == 0.0 and d1 == 0.0:
        v += sn2
    return v


def cov_matrix(X, theta: HyperParams) -> np.ndarray:
    """Dense covariance matrix over a non-empty sequence of locations."""
    pts = _as_points(X)
    if pts.shape[0] == 0:
        raise ValueError("cov_matrix needs at least one location")
    sf2, sn2, il0, il1 = _kernel_args(theta)
    return _kernels.sqexp_cov(pts, sf2, sn2, il0, il1)


def chol_with_jitter(cov: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, escalating diagonal jitter on failure.

    Starts at JITTER_SCALE * trace / n and doubles up to
    MAX_JITTER_DOUBLINGS times; raises DegenerateCovarianceError after that.
    """
    cov = np.asarray(cov, dtype=float)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    n = cov.shape[0]
    base = JITTER_SCALE * np.trace(cov) / n
    eye = np.eye(n)
    for i in range(MAX_JITTER_DOUBLINGS + 1):
        try:
            return np.linalg.cholesky(cov + (base * 2.0 ** i) * eye)
        except np.linalg.LinAlgError:
            continue
    raise DegenerateCovarianceError(
        f"covariance not positive definite after jitter up to {base * 2.0 ** MAX_JITTER_DOUBLINGS:g}"
    )


def gaussian_entropy(sigma: np.ndarray) -> float:
    """Entropy 0.5 log((2 pi e)^n |Sigma|) of a joint Gaussian, in nats."""
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    n = sigma.shape[0]
    if sigma.shape != (n, n):
        raise ValueError(f"covariance must be square, got {sigma.shape}")
    L = chol_with_jitter(sigma)
    return 0.5 * n * LOG_2PI_E + float(np.sum(np.log(np.diag(L))))


def log_likelihood(y, X, theta: HyperParams) -> float:
    """Log density of observations y under the zero-mean GP at locations X."""
    y = np.ascontiguousarray(np.asarray(y, dtype=float).ravel())
    pts = _as_points(X)
    if y.size != pts.shape[0]:
        raise ValueError(f"{y.size} values for {pts.shape[0]} locations")
    L = chol_with_jitter(cov_matrix(pts, theta))
    return float(_kernels.normal_logpdf_chol(L, y))


def conditional_variance(x, A, theta: HyperParams) -> float:
    """GP posterior variance at x given observed locations A (may be empty)."""
    x = _as_points(x)
    prior = kernel_eval(x[0], x[0], theta)
    A = _as_points(A) if len(A) else np.empty((0, 2))
    if A.shape[0] == 0:
        return prior
    sf2, sn2, il0, il1 = _kernel_args(theta)
    L = chol_with_jitter(_kernels.sqexp_cov(A, sf2, sn2, il0, il1))
    k = _kernels.sqexp_cross(x, A, sf2, sn2, il0, il1)
    var = _kernels.conditional_variances(L, k, np.array([prior]))
    return max(float(var[0]), 0.0)


def conditional_entropy_point(x, A, theta: HyperParams) -> float:
    """Entropy of the value at x conditioned on locations A, in nats."""
    var = max(conditional_variance(x, A, theta), ENTROPY_VAR_FLOOR)
    return 0.5 * (LOG_2PI_E + math.log(var))


def conditional_entropies(X, A, theta: HyperParams) -> np.ndarray:
    """Vectorised conditional_entropy_point over many query locations."""
    pts = _as_points(X)
    sf2, sn2, il0, il1 = _kernel_args(theta)
    prior = np.full(pts.shape[0], sf2 + sn2)
    A = _as_points(A) if len(A) else np.empty((0, 2))
    if A.shape[0] == 0:
        var = prior
    else:
        L = chol_with_jitter(_kernels.sqexp_cov(A, sf2, sn2, il0, il1))
        k = _kernels.sqexp_cross(pts, A, sf2, sn2, il0, il1)
        var = _kernels.conditional_variances(L, k, prior)
    var = np.maximum(var, ENTROPY_VAR_FLOOR)
    return 0.5 * (LOG_2PI_E + np.log(var))
