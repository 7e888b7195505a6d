"""Belief over GP hyper-parameters: particle weighting, gating, MCMC, refit.

The belief is a Gaussian mixture over log hyper-parameters (4-D).  One
adaptation cycle samples particles from the mixture, weighs them with the
observation likelihood, and depending on the effective-particle percentage
either keeps the mixture, refits it on resampled particles, or first
rejuvenates the particle set with a Metropolis-Hastings chain targeting the
posterior.  Log-space storage keeps every hyper-parameter positive and
makes the Gaussian random-walk proposal symmetric, so the Hastings
correction cancels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .gp import HyperParams, log_likelihood
from .mixture import GaussianMixture, fit_gm
from .seeds import child_seed


class Snapshot(NamedTuple):
    """Bare (locations, values) pair for likelihood evaluation."""

    X: np.ndarray
    y: np.ndarray


@dataclass(frozen=True)
class ObservationBatch:
    """One robot's sensing-cycle record: locations, values, timestamps."""

    robot_id: int
    X: np.ndarray  # (n, 2) actual sensing locations
    y: np.ndarray  # (n,)
    t: np.ndarray  # (n,) strictly increasing

    def __post_init__(self):
        object.__setattr__(self, "X", np.asarray(self.X, dtype=float))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float).ravel())
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float).ravel())
        if not (self.X.shape[0] == self.y.size == self.t.size):
            raise ValueError("X, y and t must have matching lengths")
        if self.t.size > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("timestamps must be strictly increasing")

    def to_json_dict(self) -> dict:
        return {"robot_id": self.robot_id, "X": self.X.tolist(),
                "y": self.y.tolist(), "t": self.t.tolist()}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ObservationBatch":
        return cls(doc["robot_id"], np.array(doc["X"]), np.array(doc["y"]), np.array(doc["t"]))


@dataclass(frozen=True)
class AdaptationConfig:
    """Tunables of one belief-adaptation cycle."""

    p: int = 1000                 # particle count
    k: int = 3                    # mixture components
    spp: float = 20.0             # stable-particles gate (% -> MCMC below this)
    opp: float = 80.0             # optimum-particles gate (% -> no adaptation at/above)
    proposal_std: float = 0.05    # log-space random-walk scale (isotropic)
    proposal_cov: np.ndarray | None = None  # overrides proposal_std when set (4x4)
    burn_in: int = 200
    thin: int = 2
    reg_floor: float = 1e-6

    def __post_init__(self):
        if not (0 <= self.spp <= self.opp <= 100):
            raise ValueError("need 0 <= spp <= opp <= 100")
        if self.p < self.k or self.k < 1:
            raise ValueError("need p >= k >= 1")
        if self.proposal_cov is not None:
            cov = np.asarray(self.proposal_cov, dtype=float)
            if cov.shape != (4, 4):
                raise ValueError("proposal_cov must be 4x4")
            object.__setattr__(self, "proposal_cov", cov)

    def proposal_chol(self) -> np.ndarray:
        if self.proposal_cov is not None:
            return np.linalg.cholesky(self.proposal_cov)
        return self.proposal_std * np.eye(4)


@dataclass
class ParticleSet:
    """Hyper-parameter particles (log-space rows) with likelihood weights."""

    particles: np.ndarray     # (p, 4) log hyper-parameters
    log_liks: np.ndarray      # (p,) observation log-likelihoods
    raw_weights: np.ndarray   # exp(log_lik - max log_lik)
    norm_weights: np.ndarray  # sums to 1
    degenerate: bool = False  # every likelihood underflowed; weights uniform

    @classmethod
    def from_log_liks(cls, particles: np.ndarray, log_liks: np.ndarray) -> "ParticleSet":
        particles = np.atleast_2d(np.asarray(particles, dtype=float))
        log_liks = np.asarray(log_liks, dtype=float).ravel()
        log_liks = np.where(np.isnan(log_liks), -np.inf, log_liks)
        top = log_liks.max()
        if not np.isfinite(top):
            p = log_liks.size
            uniform = np.full(p, 1.0 / p)
            return cls(particles, log_liks, uniform.copy(), uniform, degenerate=True)
        raw = np.exp(log_liks - top)
        return cls(particles, log_liks, raw, raw / raw.sum())

    @property
    def p(self) -> int:
        return self.particles.shape[0]


def default_belief_bounds(field_std_guess: float, region_extent: float) -> np.ndarray:
    """Log-space initialisation box: wide in the std-devs, extent-scaled in
    the length-scales (1% to 100% of the region extent)."""
    s = math.log(field_std_guess)
    e = math.log(region_extent)
    return np.array([
        [s - 3.0, s + 3.0],
        [s - 3.0, s + 3.0],
        [e + math.log(1e-2), e],
        [e + math.log(1e-2), e],
    ])


def init_gm(k: int, bounds, seed, reg_floor: float = 1e-6) -> GaussianMixture:
    """Random initial mixture: uniform weights, means uniform in the bounds,
    diagonal covariances spanning 1/k of each range."""
    bounds = np.atleast_2d(np.asarray(bounds, dtype=float))
    if bounds.size == 0 or bounds.shape[1] != 2:
        raise ValueError("bounds must be a (d, 2) array of (low, high) pairs")
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = np.random.default_rng(seed)
    lo, hi = bounds[:, 0], bounds[:, 1]
    d = bounds.shape[0]
    means = rng.uniform(lo, hi, size=(k, d))
    var = np.maximum(((hi - lo) / k) ** 2, reg_floor)
    covs = np.broadcast_to(np.diag(var), (k, d, d)).copy()
    return GaussianMixture(weights=np.full(k, 1.0 / k), means=means, covs=covs)


def _as_batches(batches) -> tuple:
    if isinstance(batches, (ObservationBatch, Snapshot)):
        return (batches,)
    return tuple(batches)


def batch_log_lik(theta: HyperParams, batches) -> float:
    """Summed log-likelihood of one or more observation batches."""
    return sum(log_likelihood(b.y, b.X, theta) for b in _as_batches(batches))


def weigh_particles(particles, batches) -> ParticleSet:
    """Weigh log-space particles by observation likelihood.

    batches may be a single ObservationBatch/Snapshot or a sequence of them
    (the sequence form multiplies the per-batch likelihoods, which is the
    observation-exchange decentralised weighting).
    """
    batches = _as_batches(batches)
    if len(batches) == 0 or any(np.asarray(b.y).size == 0 for b in batches):
        raise ValueError("need at least one non-empty observation batch")
    particles = np.atleast_2d(np.asarray(particles, dtype=float))
    lls = np.empty(particles.shape[0])
    for i, row in enumerate(particles):
        theta = HyperParams.from_log_vector(row)
        try:
            lls[i] = batch_log_lik(theta, batches)
        except Exception:
            lls[i] = -np.inf
    return ParticleSet.from_log_liks(particles, lls)


def ode_log_weight(theta: HyperParams, batches) -> float:
    """Decentralised particle weight: log of the product of the batch
    likelihoods of this robot and its neighbours."""
    if len(batches) == 0:
        raise ValueError("need at least one batch")
    return batch_log_lik(theta, batches)


def conditional_entropy_gm(ps: ParticleSet, prior: GaussianMixture) -> float:
    """Particle estimate of the belief entropy conditioned on the data:
    log(1/p) - sum_i w_i log(w_i P(theta_i)) with P the prior density."""
    w = ps.norm_weights
    log_prior = prior.log_density(ps.particles)
    mask = w > 0
    terms = w[mask] * (np.log(w[mask]) + log_prior[mask])
    return float(-math.log(ps.p) - terms.sum())


def optimal_entropy(p: int) -> float:
    """Entropy of the ideal uniform posterior over p particles: -log(1/p)."""
    return math.log(p)


def literal_epp(ps: ParticleSet, prior: GaussianMixture) -> float:
    """Diagnostic: 100 exp(H_opt - H(GM|y)) without clamping.

    Scale-sensitive (depends on the prior density units); logged for
    reference while the gate itself uses effective_particle_pct.
    """
    return 100.0 * math.exp(optimal_entropy(ps.p) - conditional_entropy_gm(ps, prior))


def effective_particle_pct(ps: ParticleSet) -> float:
    """Effective-sample-size percentage: 100 exp(weight entropy) / p."""
    w = ps.norm_weights[ps.norm_weights > 0]
    h = -float(np.sum(w * np.log(w)))
    return float(np.clip(100.0 * math.exp(h) / ps.p, 0.0, 100.0))


def resample_systematic(ps: ParticleSet, seed, n_out: int | None = None) -> np.ndarray:
    """Low-variance systematic resampling; returns (n_out, 4) log particles.

    Particle i appears floor(n_out w_i) or floor(n_out w_i) + 1 times.
    """
    n_out = ps.p if n_out is None else n_out
    rng = np.random.default_rng(seed)
    positions = (rng.random() + np.arange(n_out)) / n_out
    cum = np.cumsum(ps.norm_weights)
    cum[-1] = 1.0  # guard rounding
    idx = np.searchsorted(cum, positions, side="left")
    return ps.particles[idx]


def mcmc_hyperparams(batches, theta0_log, cfg: AdaptationConfig, seed,
                     n_samples: int | None = None,
                     proposal_chol: np.ndarray | None = None):
    """Metropolis-Hastings chain over log hyper-parameters.

    Starts at theta0_log, proposes Gaussian steps (symmetric, so acceptance
    is the likelihood ratio), discards cfg.burn_in steps, keeps every
    cfg.thin-th state until n_samples (default cfg.p) are collected.
    Returns (samples (n, 4), their log-likelihoods, acceptance rate).
    """
    batches = _as_batches(batches)
    n_samples = cfg.p if n_samples is None else n_samples
    L_prop = cfg.proposal_chol() if proposal_chol is None else proposal_chol
    rng = np.random.default_rng(seed)

    def loglik(row):
        try:
            return batch_log_lik(HyperParams.from_log_vector(row), batches)
        except Exception:
            return -np.inf

    current = np.asarray(theta0_log, dtype=float).copy()
    ll_cur = loglik(current)
    samples = np.empty((n_samples, 4))
    lls = np.empty(n_samples)
    accepted = 0
    total = cfg.burn_in + cfg.thin * n_samples
    kept = 0
    for step in range(total):
        prop = current + L_prop @ rng.standard_normal(4)
        ll_prop = loglik(prop)
        if ll_prop >= ll_cur or math.log(rng.random()) < ll_prop - ll_cur:
            current = prop
            ll_cur = ll_prop
            accepted += 1
        if step >= cfg.burn_in and (step - cfg.burn_in + 1) % cfg.thin == 0:
            samples[kept] = current
            lls[kept] = ll_cur
            kept += 1
    accept_rate = accepted / total if total else 0.0
    return samples, lls, accept_rate


def sde_pool_sample(own: GaussianMixture, neighbors, p: int, seed) -> np.ndarray:
    """Draw p particles from the equal-weight pool of own + neighbour GMs.

    Each source contributes ceil(p / n_sources) draws; the concatenation is
    truncated to p rows (own first).
    """
    sources = [own, *neighbors]
    quota = -(-p // len(sources))
    rows = [gm.sample(quota, child_seed(seed, "sde", i)) for i, gm in enumerate(sources)]
    return np.concatenate(rows, axis=0)[:p]


@dataclass
class AdaptDiagnostics:
    """What one adaptation cycle measured and decided."""

    epp: float
    h_gm_given_y: float
    literal_epp: float
    adapted: bool
    mcmc_fired: bool
    degenerate: bool
    mcmc_accept_rate: float = float("nan")


def adapt_belief(prior: GaussianMixture, batches, cfg: AdaptationConfig, seed,
                 neighbor_gms=()) -> tuple[GaussianMixture, AdaptDiagnostics]:
    """One full belief-adaptation cycle.

    Gate logic: epp >= opp keeps the prior untouched; epp < spp (or a fully
    degenerate weighting) rejuvenates with MCMC before the refit, keeping
    the prior particles in the pool for resilience to short-term changes.
    Between the gates the particles are only resampled and refit.

    neighbor_gms switches the particle draw to the pooled-mixture sampling
    of the state-exchange decentralised mode.
    """
    batches = _as_batches(batches)
    if neighbor_gms:
        particles = sde_pool_sample(prior, neighbor_gms, cfg.p, child_seed(seed, "sample"))
    else:
        particles = prior.sample(cfg.p, child_seed(seed, "sample"))
    ps = weigh_particles(particles, batches)
    epp = effective_particle_pct(ps)
    h_gm_y = conditional_entropy_gm(ps, prior)
    lit = literal_epp(ps, prior)

    if not ps.degenerate and epp >= cfg.opp:
        return prior, AdaptDiagnostics(epp, h_gm_y, lit, False, False, False)

    mcmc_fired = ps.degenerate or epp < cfg.spp
    pool = ps
    accept_rate = float("nan")
    if mcmc_fired:
        start = ps.particles[int(np.argmax(ps.log_liks))]
        new_parts, new_lls, accept_rate = mcmc_hyperparams(
            batches, start, cfg, child_seed(seed, "mcmc"))
        pool = ParticleSet.from_log_liks(
            np.concatenate([ps.particles, new_parts], axis=0),
            np.concatenate([ps.log_liks, new_lls]))
    resampled = resample_systematic(pool, child_seed(seed, "resample"), n_out=cfg.p)
    posterior = fit_gm(resampled, cfg.k, cfg.reg_floor, child_seed(seed, "fit"))
    diag = AdaptDiagnostics(epp, h_gm_y, lit, True, mcmc_fired, ps.degenerate, accept_rate)
    return posterior, diag
