"""fieldmon: persistent monitoring of stochastic spatio-temporal fields.

A small team of simulated mobile sensors tracks a field whose covariance
structure drifts over time.  A Gaussian-mixture belief over GP kernel
hyper-parameters is adapted by particle weighting with MCMC rejuvenation;
each robot plans informative sensing regions by greedy entropy
maximisation in continuous space and tours them between reports.
"""

from ._kernels import HAVE_NUMBA, USING_NUMBA
from .belief import (AdaptationConfig, ObservationBatch, ParticleSet, Snapshot,
                     adapt_belief, conditional_entropy_gm, default_belief_bounds,
                     effective_particle_pct, init_gm, mcmc_hyperparams,
                     ode_log_weight, resample_systematic, sde_pool_sample,
                     weigh_particles)
from .gp import (DegenerateCovarianceError, HyperParams, conditional_entropy_point,
                 conditional_variance, cov_matrix, gaussian_entropy, kernel_eval,
                 log_likelihood)
from .metrics import (KLEstimate, MetricSeries, compute_metric_series, dataset_kld,
                      kl_gm_mc, loglik_ratio_vs_random, observed_dynamics_gm,
                      pct_effective_vs_true)
from .mixture import GaussianMixture, fit_gm
from .planning import MotionLimits, Tour, traverse, tsp_tour
from .regions import (InformativeRegionSet, PlannerDegenerateError, Region,
                      SensingPlanConfig, greedy_entropy_discrete, greedy_regions,
                      location_log_likelihood, mcmc_region, sample_sensing_locations)
from .simulate import CycleRecord, ExperimentConfig, RunResult, neighbor_set, run_experiment
from .world import (ArtificialField, ArtificialFieldSpec, GridDataset, GridRangeError,
                    SensorModel, oracle_posterior_gm, sense)

__version__ = "0.1.0"
