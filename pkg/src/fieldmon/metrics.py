"""Evaluation metrics: mixture KL divergence, effective particles versus a
reference distribution, selected-versus-random informativeness, and the
4-D observed-dynamics scoring of whole runs.

KL divergence between Gaussian mixtures has no closed form; it is
estimated by Monte Carlo with samples from the first argument, reported
with a standard error.  A sample falling where the second mixture's
density underflows makes the estimate +inf, mirroring the infinite-KL
convention in the per-cycle plots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import solve_triangular

from .belief import Snapshot, effective_particle_pct, weigh_particles
from .gp import HyperParams, chol_with_jitter, cov_matrix
from .mixture import GaussianMixture, fit_gm
from .regions import Region
from .seeds import child_seed
from .world import oracle_posterior_gm
from . import _kernels


class KLEstimate(NamedTuple):
    """Monte-Carlo divergence estimate in nats."""

    value: float
    std_error: float
    n_underflow: int = 0


#: densities below exp() of this underflow double precision entirely
_LOG_DENSITY_FLOOR = math.log(5e-324)


def kl_gm_mc(p_gm: GaussianMixture, q_gm: GaussianMixture, n: int = 10_000,
             seed=0) -> KLEstimate:
    """KL(p || q) as the sample mean of log p(x) - log q(x), x ~ p.

    A sample where q's density underflows to zero yields the infinite-KL
    flag rather than a numeric estimate.
    """
    if p_gm.dim != q_gm.dim:
        raise ValueError(f"dimension mismatch: {p_gm.dim} vs {q_gm.dim}")
    x = p_gm.sample(n, seed)
    log_p = p_gm.log_density(x)
    log_q = q_gm.log_density(x)
    under = int(np.sum(log_q < _LOG_DENSITY_FLOOR))
    if under:
        return KLEstimate(math.inf, math.nan, under)
    diff = log_p - log_q
    return KLEstimate(float(diff.mean()), float(diff.std(ddof=1) / math.sqrt(n)), 0)


def pct_effective_vs_true(belief: GaussianMixture, oracle, X, y, p: int, seed) -> float:
    """Effective-particle percentage of a belief against one batch.

    The reference distribution is not consumed here; it is accepted so the
    caller can compute this and the paired belief-to-reference KL from the
    same arguments.
    """
    particles = belief.sample(p, seed)
    return effective_particle_pct(weigh_particles(particles, Snapshot(X=np.asarray(X, float),
                                                                      y=np.asarray(y, float))))


def gp_predictive_log_lik(X_obs, y_obs, X_eval, y_eval, theta: HyperParams) -> float:
    """Log density of held-out values under the GP conditioned on (X_obs, y_obs)."""
    X_obs = np.atleast_2d(np.asarray(X_obs, dtype=float))
    X_eval = np.atleast_2d(np.asarray(X_eval, dtype=float))
    y_obs = np.asarray(y_obs, dtype=float).ravel()
    y_eval = np.asarray(y_eval, dtype=float).ravel()
    sf2 = theta.sigma_f ** 2
    sn2 = theta.sigma_n ** 2
    il0 = 1.0 / theta.sigma_l[0] ** 2
    il1 = 1.0 / theta.sigma_l[1] ** 2
    L = chol_with_jitter(_kernels.sqexp_cov(X_obs, sf2, sn2, il0, il1))
    k_cross = _kernels.sqexp_cross(X_eval, X_obs, sf2, sn2, il0, il1)
    a = solve_triangular(L, y_obs, lower=True, check_finite=False)
    B = solve_triangular(L, k_cross.T, lower=True, check_finite=False)
    mu = B.T @ a
    sigma = _kernels.sqexp_cov(X_eval, sf2, sn2, il0, il1) - B.T @ B
    L_post = chol_with_jitter(sigma)
    return float(_kernels.normal_logpdf_chol(L_post, np.ascontiguousarray(y_eval - mu)))


class LogLikRatio(NamedTuple):
    ratio: float
    loglik_selected: float
    loglik_random: float


def loglik_ratio_vs_random(world, region: Region, t: float, X_sel, y_sel,
                           theta: HyperParams, m_eval: int = 50, seed=0,
                           X_rand=None, noise_std: float = 0.0) -> LogLikRatio:
    """Predictive log-likelihood of held-out dynamics: selected vs random.

    m_eval held-out locations are drawn uniformly in the region and sensed
    noiselessly at time t.  The random conditioning set has the same
    cardinality as the selected one, is sensed at the same t, and gets the
    same observation noise the robots had (noise_std).  Both
    log-likelihoods are negative in practice, so a ratio below 1 means the
    selected locations predict the held-out dynamics better.
    """
    rng = np.random.default_rng(child_seed(seed, "holdout"))
    X_eval = region.uniform_sample(m_eval, rng)
    y_eval = world.values(X_eval, t)
    X_sel = np.atleast_2d(np.asarray(X_sel, dtype=float))
    if X_rand is None:
        X_rand = region.uniform_sample(X_sel.shape[0],
                                       np.random.default_rng(child_seed(seed, "rand")))
    else:
        X_rand = np.atleast_2d(np.asarray(X_rand, dtype=float))
    y_rand = world.values(X_rand, t)
    if noise_std > 0:
        y_rand = y_rand + noise_std * np.random.default_rng(
            child_seed(seed, "rand-noise")).standard_normal(y_rand.size)
    l_sel = gp_predictive_log_lik(X_sel, y_sel, X_eval, y_eval, theta)
    l_rand = gp_predictive_log_lik(X_rand, y_rand, X_eval, y_eval, theta)
    return LogLikRatio(l_sel / l_rand, l_sel, l_rand)


# ---------------------------------------------------------------------------
# Observed-dynamics distributions (whole-run scoring)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DynamicsNorm:
    """Affine map of (x, y, t, value) rows into comparable units."""

    bounds: tuple[float, float, float, float]
    horizon: float
    value_mean: float
    value_std: float

    def rows(self, X, t, values) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        t = np.asarray(t, dtype=float).ravel()
        v = np.asarray(values, dtype=float).ravel()
        xmin, xmax, ymin, ymax = self.bounds
        return np.column_stack([
            (X[:, 0] - xmin) / (xmax - xmin),
            (X[:, 1] - ymin) / (ymax - ymin),
            t / self.horizon,
            (v - self.value_mean) / self.value_std,
        ])


def observed_dynamics_gm(batches, region: Region, horizon: float, k: int = 8,
                         seed=0, reg_floor: float = 1e-6):
    """Fit the 4-D (space, time, value) mixture of everything a robot set saw.

    Returns (mixture, normalisation); the normalisation must be reused when
    fitting the reference distribution so the divergence is meaningful.
    """
    batches = list(batches)
    if not batches:
        raise ValueError("need at least one batch")
    X = np.concatenate([b.X for b in batches], axis=0)
    t = np.concatenate([b.t for b in batches])
    v = np.concatenate([b.y for b in batches])
    if v.size < 10 * k:
        raise ValueError(f"need at least {10 * k} observations for k={k}, got {v.size}")
    norm = DynamicsNorm(region.bounds, horizon,
                        float(v.mean()), max(float(v.std()), 1e-12))
    gm = fit_gm(norm.rows(X, t, v), k, reg_floor, seed)
    return gm, norm


def true_dynamics_gm(world, region: Region, horizon: float, norm: DynamicsNorm,
                     k: int = 8, n_dense: int = 2000, seed=0,
                     reg_floor: float = 1e-6) -> GaussianMixture:
    """Reference 4-D distribution from dense uniform (x, t) sampling."""
    rng = np.random.default_rng(child_seed(seed, "dense"))
    X = region.uniform_sample(n_dense, rng)
    t = rng.uniform(0.0, horizon, n_dense)
    v = world.values(X, t)
    return fit_gm(norm.rows(X, t, v), k, reg_floor, child_seed(seed, "fit"))


def dataset_kld(observed_gm: GaussianMixture, norm: DynamicsNorm, world,
                region: Region, horizon: float, k: int = 8, n_dense: int = 2000,
                seed=0, n_mc: int = 10_000) -> KLEstimate:
    """KL(true || observed) between the 4-D dynamics distributions."""
    truth = true_dynamics_gm(world, region, horizon, norm, k, n_dense, seed)
    return kl_gm_mc(truth, observed_gm, n_mc, child_seed(seed, "mc"))


# ---------------------------------------------------------------------------
# Per-cycle metric series
# ---------------------------------------------------------------------------

METRICS_CSV_COLUMNS = ("cycle", "robot_id", "pct_ep_adapted", "pct_ep_initial",
                       "kld_adapted", "kld_initial", "entropy_selected",
                       "entropy_random", "loglik_ratio", "loglik_selected",
                       "loglik_random")


@dataclass
class MetricRow:
    cycle: int
    robot_id: int
    pct_ep_adapted: float
    pct_ep_initial: float
    kld_adapted: float
    kld_initial: float
    entropy_selected: float
    entropy_random: float
    loglik_ratio: float
    loglik_selected: float
    loglik_random: float


@dataclass
class MetricSeries:
    rows: list

    def to_csv(self) -> str:
        lines = [",".join(METRICS_CSV_COLUMNS)]
        for r in self.rows:
            lines.append(",".join(
                str(v) if isinstance(v, int) else repr(float(v))
                for v in (r.cycle, r.robot_id, r.pct_ep_adapted, r.pct_ep_initial,
                          r.kld_adapted, r.kld_initial, r.entropy_selected,
                          r.entropy_random, r.loglik_ratio, r.loglik_selected,
                          r.loglik_random)))
        return "\n".join(lines) + "\n"

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)


def compute_metric_series(result, world, seed=None, oracle_k: int = 3,
                          oracle_n_dense: int = 150, oracle_p: int = 800,
                          kl_n: int = 10_000, m_eval: int = 50,
                          ep_particles: int | None = None,
                          oracle_reg_floor: float = 0.04) -> MetricSeries:
    """Per-cycle metric rows aligned 1:1 with a run's cycle records.

    The adapted belief of each cycle and the frozen initial belief are both
    scored against the same reference hyper-parameter distribution computed
    at the cycle's end time.  oracle_reg_floor keeps the reference mixture
    from collapsing tighter than its own construction noise warrants.
    Held-out prediction is evaluated at the cycle's median sensing time.
    """
    cfg = result.config
    master = cfg.seed if seed is None else seed
    init = result.initial_gm
    p = cfg.adaptation.p if ep_particles is None else ep_particles
    rows = []
    for i, cyc in enumerate(result.cycles):
        rec = cyc.record
        batch = cyc.batch
        oracle = oracle_posterior_gm(
            world, cfg.region, rec.t_end, oracle_k, child_seed(master, "eval-oracle", i),
            n_dense=oracle_n_dense, p=oracle_p, bounds=result.belief_bounds,
            noise_std=cfg.sensor.noise_std, reg_floor=oracle_reg_floor)
        kld_a = kl_gm_mc(cyc.belief_after, oracle, kl_n, child_seed(master, "eval-kla", i))
        kld_i = kl_gm_mc(init, oracle, kl_n, child_seed(master, "eval-kli", i))
        ep_init = pct_effective_vs_true(init, oracle, batch.X, batch.y, p,
                                        child_seed(master, "eval-ep", i))
        llr = loglik_ratio_vs_random(world, cfg.region, float(np.median(batch.t)),
                                     batch.X, batch.y, cyc.theta, m_eval,
                                     child_seed(master, "eval-llr", i),
                                     noise_std=cfg.sensor.noise_std)
        rows.append(MetricRow(
            cycle=rec.cycle, robot_id=rec.robot_id,
            pct_ep_adapted=rec.epp, pct_ep_initial=ep_init,
            kld_adapted=kld_a.value, kld_initial=kld_i.value,
            entropy_selected=rec.entropy_selected, entropy_random=rec.entropy_random,
            loglik_ratio=llr.ratio, loglik_selected=llr.loglik_selected,
            loglik_random=llr.loglik_random))
    return MetricSeries(rows=rows)
