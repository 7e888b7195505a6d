"""Greedy optimisation of informative sensing regions in continuous 2-D space.

Each greedy step targets the conditional entropy of a location given the
anchors chosen so far, turned into a location likelihood
P(x) = exp(-1 / H(x)^s_c) inside the region and 0 outside.  A
Metropolis-Hastings chain over that likelihood yields a cloud of
near-equally informative locations; a small Gaussian mixture fit to the
resampled chain is the region, and anchor/sensing locations are drawn from
it.  A discrete greedy maximiser over candidate sets is included as the
reference implementation for oracle tests and the random-selection
baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .gp import HyperParams, chol_with_jitter, conditional_entropies, cov_matrix, gaussian_entropy
from .mixture import GaussianMixture, fit_gm
from .seeds import child_seed

#: entropies at or below this are treated as zero likelihood (the location
#: is already determined; H^-s_c would explode)
ENTROPY_MIN = 1e-3

#: log-likelihood exponent guard: exp() beyond this overflows a float
_EXP_MAX = 700.0


class PlannerDegenerateError(RuntimeError):
    """Region sampling failed to produce admissible locations."""


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle minus polygonal holes."""

    bounds: tuple[float, float, float, float]  # xmin, xmax, ymin, ymax
    holes: tuple = ()

    def __post_init__(self):
        xmin, xmax, ymin, ymax = (float(v) for v in self.bounds)
        if not (xmax > xmin and ymax > ymin):
            raise ValueError("region must have positive area")
        object.__setattr__(self, "bounds", (xmin, xmax, ymin, ymax))
        holes = tuple(np.asarray(h, dtype=float) for h in self.holes)
        for h in holes:
            if h.ndim != 2 or h.shape[1] != 2 or h.shape[0] < 3:
                raise ValueError("each hole must be a polygon of >= 3 vertices")
            if not (np.all(h[:, 0] > xmin) and np.all(h[:, 0] < xmax)
                    and np.all(h[:, 1] > ymin) and np.all(h[:, 1] < ymax)):
                raise ValueError("holes must lie strictly inside the bounds")
        object.__setattr__(self, "holes", holes)
        if holes:
            hole_xy = np.concatenate(holes, axis=0)
            hole_len = np.array([h.shape[0] for h in holes], dtype=np.int64)
        else:
            hole_xy = np.empty((0, 2))
            hole_len = np.empty(0, dtype=np.int64)
        object.__setattr__(self, "_hole_xy", np.ascontiguousarray(hole_xy))
        object.__setattr__(self, "_hole_len", hole_len)
        object.__setattr__(self, "_bounds_arr", np.array([xmin, xmax, ymin, ymax]))

    @property
    def extent(self) -> float:
        xmin, xmax, ymin, ymax = self.bounds
        return max(xmax - xmin, ymax - ymin)

    def contains(self, points) -> np.ndarray:
        pts = np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=float)))
        return _kernels.points_in_region(pts, self._bounds_arr, self._hole_xy, self._hole_len)

    def contains_point(self, point) -> bool:
        return bool(self.contains(point)[0])

    def uniform_sample(self, n: int, rng: np.random.Generator, max_tries: int = 1000) -> np.ndarray:
        """Rejection-sample n points uniformly over the region."""
        xmin, xmax, ymin, ymax = self.bounds
        out = np.empty((n, 2))
        got = 0
        for _ in range(max_tries):
            need = n - got
            cand = rng.uniform([xmin, ymin], [xmax, ymax], size=(max(2 * need, 8), 2))
            cand = cand[self.contains(cand)]
            take = min(need, cand.shape[0])
            out[got:got + take] = cand[:take]
            got += take
            if got == n:
                return out
        raise PlannerDegenerateError("could not draw uniform points inside the region")

    def to_json_dict(self) -> dict:
        return {"bounds": list(self.bounds), "holes": [h.tolist() for h in self.holes]}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Region":
        return cls(tuple(doc["bounds"]), tuple(np.array(h) for h in doc.get("holes", [])))


@dataclass(frozen=True)
class SensingPlanConfig:
    """Tunables of one sensing-plan optimisation."""

    n_r: int = 5              # informative regions per cycle
    n_o: int = 2              # anchor samples per region
    n_p: int = 2              # physical sensing samples per region
    s_c: float = 150.0        # entropy amplification exponent
    p: int = 1000             # MCMC samples per greedy step
    k_region: int = 2         # mixture components per region
    proposal_frac: float = 0.005  # proposal std as a fraction of region extent
    proposal_cov: np.ndarray | None = None  # overrides proposal_frac when set (2x2)
    burn_in: int = 100
    thin: int = 1
    reg_floor: float = 1e-6

    def __post_init__(self):
        if min(self.n_r, self.n_o, self.n_p) < 1 or self.s_c <= 0:
            raise ValueError("n_r, n_o, n_p must be >= 1 and s_c > 0")
        if self.p < self.k_region:
            raise ValueError("need p >= k_region")
        if self.proposal_cov is not None:
            cov = np.asarray(self.proposal_cov, dtype=float)
            if cov.shape != (2, 2):
                raise ValueError("proposal_cov must be 2x2")
            object.__setattr__(self, "proposal_cov", cov)

    def proposal_chol(self, region: Region) -> np.ndarray:
        if self.proposal_cov is not None:
            return np.linalg.cholesky(self.proposal_cov)
        return self.proposal_frac * region.extent * np.eye(2)


@dataclass
class InformativeRegionSet:
    """Greedy result: one 2-D mixture per region plus its anchor samples."""

    regions: list            # n_r GaussianMixture (2-D)
    anchors: list            # n_r arrays (n_o, 2)
    theta: HyperParams

    def all_anchors(self) -> np.ndarray:
        return np.concatenate(self.anchors, axis=0) if self.anchors else np.empty((0, 2))

    def to_json_dict(self) -> dict:
        return {
            "theta": self.theta.to_vector().tolist(),
            "regions": [gm.to_json_dict() for gm in self.regions],
            "anchors": [a.tolist() for a in self.anchors],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "InformativeRegionSet":
        return cls(
            regions=[GaussianMixture.from_json_dict(g) for g in doc["regions"]],
            anchors=[np.array(a) for a in doc["anchors"]],
            theta=HyperParams.from_vector(doc["theta"]),
        )


def entropy_to_loglik(h: float, s_c: float) -> float:
    """Map conditional entropy to log location likelihood -H^(-s_c).

    Entropies at or below ENTROPY_MIN give zero likelihood, as do entropies
    small enough that H^(-s_c) overflows.
    """
    if h <= ENTROPY_MIN:
        return -np.inf
    expo = -s_c * math.log(h)
    if expo > _EXP_MAX:
        return -np.inf
    return -math.exp(expo)


def location_log_likelihood(x, anchors, theta: HyperParams, s_c: float, region: Region) -> float:
    """log P(x) = -H(x | anchors)^(-s_c) inside the region, -inf outside."""
    if s_c <= 0:
        raise ValueError("s_c must be > 0")
    x = np.asarray(x, dtype=float).reshape(1, 2)
    if not region.contains_point(x[0]):
        return -np.inf
    h = float(conditional_entropies(x, anchors, theta)[0])
    return entropy_to_loglik(h, s_c)


def mcmc_region(anchors, theta: HyperParams, region: Region, cfg: SensingPlanConfig, seed):
    """Metropolis-Hastings samples of an informative greedy location.

    Returns (samples (p, 2), normalised likelihood weights).  The chain
    starts from a uniformly drawn in-region point with finite likelihood;
    proposals landing outside the region (or on determined locations) have
    zero likelihood and are always rejected, so the chain never leaves R.
    """
    anchors = np.atleast_2d(np.asarray(anchors, dtype=float)) if len(anchors) else np.empty((0, 2))
    rng = np.random.default_rng(seed)
    L_prop = cfg.proposal_chol(region)

    anchor_chol = None
    sf2 = theta.sigma_f ** 2
    sn2 = theta.sigma_n ** 2
    il0 = 1.0 / theta.sigma_l[0] ** 2
    il1 = 1.0 / theta.sigma_l[1] ** 2
    if anchors.shape[0]:
        anchor_chol = chol_with_jitter(_kernels.sqexp_cov(anchors, sf2, sn2, il0, il1))
    prior_var = sf2 + sn2

    def loglik(pt: np.ndarray) -> float:
        if not region.contains_point(pt):
            return -np.inf
        if anchor_chol is None:
            var = prior_var
        else:
            k = _kernels.sqexp_cross(pt.reshape(1, 2), anchors, sf2, sn2, il0, il1)
            var = float(_kernels.conditional_variances(anchor_chol, k, np.array([prior_var]))[0])
        h = 0.5 * (1.0 + math.log(2.0 * math.pi) + math.log(max(var, 1e-12)))
        return entropy_to_loglik(h, cfg.s_c)

    current = None
    for _ in range(1000):
        cand = region.uniform_sample(1, rng)[0]
        if np.isfinite(loglik(cand)):
            current = cand
            break
    if current is None:
        raise PlannerDegenerateError("no admissible chain start found in the region")

    ll_cur = loglik(current)
    samples = np.empty((cfg.p, 2))
    lls = np.empty(cfg.p)
    kept = 0
    total = cfg.burn_in + cfg.thin * cfg.p
    for step in range(total):
        prop = current + L_prop @ rng.standard_normal(2)
        ll_prop = loglik(prop)
        if ll_prop >= ll_cur or math.log(rng.random()) < ll_prop - ll_cur:
            current = prop
            ll_cur = ll_prop
        if step >= cfg.burn_in and (step - cfg.burn_in + 1) % cfg.thin == 0:
            samples[kept] = current
            lls[kept] = ll_cur
            kept += 1
    shifted = np.exp(lls - lls.max())
    return samples, shifted / shifted.sum()


def _gm_sample_in_region(gm: GaussianMixture, n: int, region: Region,
                         rng: np.random.Generator, max_tries: int = 1000) -> np.ndarray:
    """Rejection-sample n mixture draws that fall inside the region."""
    out = np.empty((n, 2))
    for i in range(n):
        for t in range(max_tries):
            cand = gm.sample(1, rng)[0]
            if region.contains_point(cand):
                out[i] = cand
                break
        else:
            raise PlannerDegenerateError(
                f"{max_tries} consecutive rejections sampling the region mixture")
    return out


def greedy_regions(theta: HyperParams, region: Region, cfg: SensingPlanConfig, seed,
                   initial_anchors=()) -> InformativeRegionSet:
    """Greedy construction of cfg.n_r informative regions.

    Step i runs the location chain conditioned on all anchors accumulated
    so far, fits a k_region-component 2-D mixture to the weight-resampled
    chain, and draws that region's n_o anchors from the fit.
    """
    anchors_acc = [np.asarray(a, dtype=float).reshape(2) for a in initial_anchors]
    region_gms = []
    region_anchors = []
    for i in range(cfg.n_r):
        samples, w = mcmc_region(anchors_acc, theta, region, cfg, child_seed(seed, "chain", i))
        rng = np.random.default_rng(child_seed(seed, "resample", i))
        positions = (rng.random() + np.arange(cfg.p)) / cfg.p
        cum = np.cumsum(w)
        cum[-1] = 1.0
        resampled = samples[np.searchsorted(cum, positions, side="left")]
        gm = fit_gm(resampled, cfg.k_region, cfg.reg_floor, child_seed(seed, "fit", i))
        anchors = _gm_sample_in_region(
            gm, cfg.n_o, region, np.random.default_rng(child_seed(seed, "anchor", i)))
        region_gms.append(gm)
        region_anchors.append(anchors)
        anchors_acc.extend(anchors)
    return InformativeRegionSet(regions=region_gms, anchors=region_anchors, theta=theta)


def sample_sensing_locations(irs: InformativeRegionSet, n_p: int, region: Region, seed) -> np.ndarray:
    """Draw n_p physical sensing locations per region, region-major order."""
    if n_p < 1:
        raise ValueError("n_p must be >= 1")
    rows = []
    for i, gm in enumerate(irs.regions):
        rng = np.random.default_rng(child_seed(seed, "sense", i))
        rows.append(_gm_sample_in_region(gm, n_p, region, rng))
    return np.concatenate(rows, axis=0)


def greedy_entropy_discrete(candidates, n: int, theta: HyperParams):
    """Classic greedy max-entropy subset of discrete candidates.

    Returns (selected indices in pick order, joint entropy of the
    selection).  Ties break toward the lowest index.  Reference
    implementation for oracle tests and the random-selection baseline.
    """
    cands = np.atleast_2d(np.asarray(candidates, dtype=float))
    m = cands.shape[0]
    if n > m:
        raise ValueError(f"cannot select {n} of {m} candidates")
    selected: list[int] = []
    remaining = list(range(m))
    for _ in range(n):
        sel_pts = cands[selected] if selected else np.empty((0, 2))
        ents = conditional_entropies(cands[remaining], sel_pts, theta)
        best = remaining[int(np.argmax(ents))]
        selected.append(best)
        remaining.remove(best)
    entropy = gaussian_entropy(cov_matrix(cands[selected], theta))
    return selected, entropy
