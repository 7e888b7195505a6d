"""Weighted full-covariance Gaussian mixtures: density, sampling, EM fitting.

Used in three places: the belief over kernel hyper-parameters (4-D,
log-space), informative regions (2-D), and observed-dynamics distributions
(4-D).  Covariance eigenvalues are kept at or above a regularisation floor
so every component stays safely positive definite.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from . import _kernels
from .gp import chol_with_jitter

LOG_2PI = math.log(2.0 * math.pi)

WEIGHT_TOL = 1e-9

EM_MAX_ITER = 200
EM_TOL = 1e-6


@dataclass
class GaussianMixture:
    """Mixture of full-covariance Gaussians over a d-dimensional space."""

    weights: np.ndarray  # (k,)
    means: np.ndarray    # (k, d)
    covs: np.ndarray     # (k, d, d)

    # (chols, logdets); a single attribute so lazy init is atomic under threads
    _factor_cache: tuple | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.means = np.atleast_2d(np.asarray(self.means, dtype=float))
        self.covs = np.asarray(self.covs, dtype=float)
        if self.covs.ndim == 2:
            self.covs = self.covs[None]
        k, d = self.means.shape
        if self.weights.shape != (k,) or self.covs.shape != (k, d, d):
            raise ValueError("inconsistent component shapes")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError("weights must be non-negative and sum to 1")
        if not np.allclose(self.covs, np.swapaxes(self.covs, 1, 2), atol=1e-12):
            raise ValueError("component covariances must be symmetric")

    @property
    def k(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def _factors(self) -> tuple[np.ndarray, np.ndarray]:
        cache = self._factor_cache
        if cache is None:
            chols = np.ascontiguousarray(np.stack([chol_with_jitter(c) for c in self.covs]))
            logdets = np.sum(np.log(np.diagonal(chols, axis1=1, axis2=2)), axis=1)
            cache = (chols, logdets)
            self._factor_cache = cache
        return cache

    def log_density(self, points) -> np.ndarray:
        """Log mixture density at one point (d,) or many points (n, d)."""
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = np.ascontiguousarray(np.atleast_2d(pts))
        if pts.shape[1] != self.dim:
            raise ValueError(f"points have dimension {pts.shape[1]}, mixture has {self.dim}")
        chols, logdets = self._factors()
        with np.errstate(divide="ignore"):
            log_w = np.log(self.weights)
        out = _kernels.gm_logpdf(pts, log_w, self.means, chols, logdets)
        return float(out[0]) if single else out

    def density(self, point) -> float:
        return float(np.exp(self.log_density(np.asarray(point, dtype=float))))

    def sample(self, n: int, seed) -> np.ndarray:
        """Draw n ancestral samples; deterministic given the seed."""
        rng = np.random.default_rng(seed)
        comp = rng.choice(self.k, size=n, p=self.weights)
        z = rng.standard_normal((n, self.dim))
        chols, _ = self._factors()
        return self.means[comp] + np.einsum("nij,nj->ni", chols[comp], z)

    def mean(self) -> np.ndarray:
        return self.weights @ self.means

    def to_json_dict(self) -> dict:
        return {
            "dim": self.dim,
            "components": [
                {"weight": float(w), "mean": m.tolist(), "cov": c.tolist()}
                for w, m, c in zip(self.weights, self.means, self.covs)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "GaussianMixture":
        comps = doc["components"]
        gm = cls(
            weights=np.array([c["weight"] for c in comps]),
            means=np.array([c["mean"] for c in comps]),
            covs=np.array([c["cov"] for c in comps]),
        )
        if gm.dim != doc["dim"]:
            raise ValueError("component dimension does not match declared dim")
        return gm

    @classmethod
    def from_json(cls, text: str) -> "GaussianMixture":
        return cls.from_json_dict(json.loads(text))


def _floor_eigenvalues(cov: np.ndarray, reg_floor: float) -> np.ndarray:
    """Raise covariance eigenvalues to reg_floor; unchanged when already above."""
    vals, vecs = np.linalg.eigh(cov)
    if vals[0] >= reg_floor:
        return cov
    vals = np.maximum(vals, reg_floor)
    out = (vecs * vals) @ vecs.T
    return 0.5 * (out + out.T)


def _kmeanspp_centers(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[i:] = points[rng.integers(n, size=k - i)]
            break
        centers[i] = points[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum((points - centers[i]) ** 2, axis=1))
    return centers


def fit_gm(points, k: int, reg_floor: float = 1e-6, seed=0,
           max_iter: int = EM_MAX_ITER, tol: float = EM_TOL,
           return_history: bool = False):
    """Fit a k-component mixture by EM with k-means++ initialisation.

    Stops after max_iter iterations or when the per-point log-likelihood
    improves by less than tol.  Every covariance eigenvalue ends at or above
    reg_floor.  Deterministic given the seed.
    """
    points = np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=float)))
    n, d = points.shape
    if n < k:
        raise ValueError(f"need at least k={k} points, got {n}")
    rng = np.random.default_rng(seed)

    centers = _kmeanspp_centers(points, k, rng)
    d2 = np.sum((points[:, None, :] - centers[None]) ** 2, axis=2)
    labels = np.argmin(d2, axis=1)
    weights = np.empty(k)
    means = np.empty((k, d))
    covs = np.empty((k, d, d))
    global_cov = _floor_eigenvalues(np.atleast_2d(np.cov(points.T, bias=True)), reg_floor)
    for c in range(k):
        mask = labels == c
        weights[c] = max(mask.sum(), 1.0) / n
        if mask.any():
            means[c] = points[mask].mean(axis=0)
            covs[c] = _floor_eigenvalues(
                np.atleast_2d(np.cov(points[mask].T, bias=True)) if mask.sum() > 1
                else np.zeros((d, d)), reg_floor)
        else:
            means[c] = centers[c]
            covs[c] = global_cov
    weights /= weights.sum()

    history: list[float] = []
    prev_ll = -np.inf
    for _ in range(max_iter):
        # E-step: responsibilities in log space
        comp_log = _responsibility_logs(points, weights, means, covs)
        top = comp_log.max(axis=0)
        norm = top + np.log(np.sum(np.exp(comp_log - top), axis=0))
        ll = float(norm.mean())
        history.append(ll)
        resp = np.exp(comp_log - norm)

        # M-step
        nk = resp.sum(axis=1)
        for c in range(k):
            if nk[c] < n * 1e-12:
                # dead component: reseed at the worst-covered point
                worst = int(np.argmin(norm))
                means[c] = points[worst]
                covs[c] = global_cov
                weights[c] = 1.0 / n
                continue
            means[c] = resp[c] @ points / nk[c]
            diff = points - means[c]
            covs[c] = _floor_eigenvalues((resp[c] * diff.T) @ diff / nk[c], reg_floor)
            weights[c] = nk[c] / n
        weights /= weights.sum()

        if ll - prev_ll < tol and np.isfinite(prev_ll):
            break
        prev_ll = ll

    gm = GaussianMixture(weights=weights, means=means, covs=covs)
    return (gm, history) if return_history else gm


def _responsibility_logs(points, weights, means, covs):
    """Per-component log(weight * N(x | mean, cov)) as a (k, n) array."""
    k = weights.shape[0]
    n, d = points.shape
    out = np.empty((k, n))
    with np.errstate(divide="ignore"):
        log_w = np.log(weights)
    for c in range(k):
        L = chol_with_jitter(covs[c])
        z = solve_triangular(L, (points - means[c]).T, lower=True, check_finite=False)
        out[c] = log_w[c] - 0.5 * np.sum(z * z, axis=0) \
            - np.sum(np.log(np.diag(L))) - 0.5 * d * LOG_2PI
    return out
