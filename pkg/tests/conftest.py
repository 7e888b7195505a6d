"""Shared fixtures: the desk-scale experiment configuration.

The desk configuration is a 200 x 200 world small enough to simulate in
seconds while keeping every mechanism active: a drifting multi-scale field
whose amplitude sits near the location-likelihood threshold, moderate
observation noise, singles-per-region sensing, and aggressive adaptation
gates so the belief converges within a few cycles.
"""

import numpy as np
import pytest

from fieldmon import (AdaptationConfig, ArtificialFieldSpec, ExperimentConfig,
                      Region, SensingPlanConfig, SensorModel)


def desk_world_spec(seed: int = 7) -> ArtificialFieldSpec:
    return ArtificialFieldSpec(
        bounds=(0.0, 200.0, 0.0, 200.0), n_components=220, seed=seed,
        amp_range=(0.08, 0.24), wavelength_frac=(0.3, 2.2),
        bump_scale_frac=(0.05, 0.3), drift_frac=0.0003, spectral_slope=1.0)


def desk_config(seed: int = 11, r: int = 2, horizon: float = 900.0,
                comm_failure_prob: float = 0.0, mode: str = "central",
                threads: int = 1, particles: int = 500,
                region_chain: int = 300) -> ExperimentConfig:
    return ExperimentConfig(
        region=Region((0.0, 200.0, 0.0, 200.0)),
        world=desk_world_spec(),
        mode=mode, r=r, horizon=horizon, seed=seed,
        adaptation=AdaptationConfig(p=particles, k=2, spp=60.0, opp=95.0,
                                    proposal_std=0.2, burn_in=200, thin=2),
        sensing=SensingPlanConfig(n_r=24, n_o=1, n_p=1, p=region_chain,
                                  burn_in=50, k_region=2, proposal_frac=0.0025),
        sensor=SensorModel(noise_std=0.42),
        comm_failure_prob=comm_failure_prob,
        threads=threads,
    )


@pytest.fixture(scope="session")
def desk_run():
    """One full desk-scale central-mode run shared across test modules."""
    from fieldmon import run_experiment

    return run_experiment(desk_config())
