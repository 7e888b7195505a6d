"""Discrete-event simulation of the persistent-monitoring loop.

Robots cycle plan -> traverse -> sense -> report on a virtual clock.  In
central mode a server holds the belief, adapts it on each successfully
reported batch and hands the result back to the reporting robot only, so
robots generally operate on different belief versions.  Reports may fail
with a configured probability, in which case the robot adapts its belief
locally and carries on.  The sde/ode modes drop the server entirely:
each robot adapts locally and, within communication radius, either pools
particle draws from neighbours' mixtures (sde) or multiplies in
neighbours' batch likelihoods (ode).

All randomness derives from the master seed through seeds.child_seed, and
reports are processed strictly in (time, robot_id) order, so runs are
bit-reproducible regardless of how many worker threads compute the
per-robot plans.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .belief import (AdaptationConfig, ObservationBatch, adapt_belief,
                     default_belief_bounds, init_gm)
from .gp import HyperParams, cov_matrix, gaussian_entropy
from .mixture import GaussianMixture
from .planning import MotionLimits, traverse, tsp_tour
from .regions import (InformativeRegionSet, PlannerDegenerateError, Region,
                      SensingPlanConfig, greedy_regions, sample_sensing_locations)
from .seeds import child_seed
from .world import ArtificialField, ArtificialFieldSpec, GridDataset, SensorModel, sense

MODES = ("central", "sde", "ode")

CYCLE_CSV_COLUMNS = ("cycle", "robot_id", "t_start", "t_end", "epp", "h_gm_given_y",
                     "adapted", "mcmc_fired", "entropy_selected", "entropy_random")

MAX_PLAN_RETRIES = 3


@dataclass(frozen=True)
class ExperimentConfig:
    region: Region
    world: ArtificialFieldSpec | dict
    mode: str = "central"
    r: int = 4
    horizon: float = 5000.0
    seed: int = 0
    adaptation: AdaptationConfig = field(default_factory=AdaptationConfig)
    sensing: SensingPlanConfig = field(default_factory=SensingPlanConfig)
    motion: MotionLimits = field(default_factory=MotionLimits)
    sensor: SensorModel = field(default_factory=SensorModel)
    comm_failure_prob: float = 0.0
    comm_radius: float = 300.0
    field_std_guess: float | None = None
    threads: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not 0.0 <= self.comm_failure_prob <= 1.0:
            raise ValueError("comm_failure_prob must be in [0, 1]")
        if self.horizon <= 0 or self.r < 1 or self.threads < 1:
            raise ValueError("horizon must be > 0, r >= 1, threads >= 1")


def build_world(spec):
    """Instantiate the ground-truth field from its config form."""
    if isinstance(spec, ArtificialFieldSpec):
        return ArtificialField(spec)
    if isinstance(spec, dict):
        kind = spec.get("kind")
        if kind == "artificial":
            return ArtificialField(ArtificialFieldSpec.from_json_dict(spec))
        if kind == "dataset":
            return GridDataset.from_csv(spec["path"])
        raise ValueError(f"unknown world kind {kind!r}")
    raise ValueError(f"cannot build a world from {type(spec).__name__}")


def neighbor_set(positions: dict, robot_id: int, radius: float) -> list:
    """Ids of other robots within Euclidean radius; empty for radius <= 0."""
    if radius <= 0:
        return []
    me = np.asarray(positions[robot_id], dtype=float)
    out = []
    for rid, pos in positions.items():
        if rid == robot_id:
            continue
        if math.hypot(pos[0] - me[0], pos[1] - me[1]) <= radius:
            out.append(rid)
    return sorted(out)


@dataclass
class CycleRecord:
    """One completed robot cycle; scalar fields back the CSV log."""

    cycle: int
    robot_id: int
    t_start: float
    t_end: float
    epp: float
    h_gm_given_y: float
    adapted: bool
    mcmc_fired: bool
    entropy_selected: float
    entropy_random: float
    local: bool
    belief_used: str
    belief_after: str
    retries: int
    literal_epp: float

    def csv_row(self) -> str:
        vals = (self.cycle, self.robot_id, repr(self.t_start), repr(self.t_end),
                repr(self.epp), repr(self.h_gm_given_y), int(self.adapted),
                int(self.mcmc_fired), repr(self.entropy_selected), repr(self.entropy_random))
        return ",".join(str(v) for v in vals)


@dataclass
class CycleData:
    """Full per-cycle artefacts kept for evaluation and replay."""

    record: CycleRecord
    theta: HyperParams
    regions: InformativeRegionSet
    planned_locations: np.ndarray
    batch: ObservationBatch
    belief_after: GaussianMixture


@dataclass
class RunResult:
    config: ExperimentConfig
    initial_gm: GaussianMixture
    records: list
    cycles: list                 # CycleData, same order as records
    server_versions: list        # (snapshot_id, GaussianMixture), central mode
    robot_beliefs: dict          # robot_id -> GaussianMixture at end
    belief_bounds: np.ndarray
    final_time: float


@dataclass
class _Robot:
    rid: int
    pos: np.ndarray
    belief: GaussianMixture
    belief_id: str
    cycle: int = 0
    local_versions: int = 0
    last_batch: ObservationBatch | None = None


def _plan_cycle(world, cfg: ExperimentConfig, robot: _Robot, t_start: float):
    """Plan, traverse and sense one cycle; pure function of its arguments."""
    master = cfg.seed
    rid, cyc = robot.rid, robot.cycle
    last_err = None
    for attempt in range(MAX_PLAN_RETRIES):
        try:
            theta_log = robot.belief.sample(
                1, child_seed(master, rid, cyc, attempt, "theta"))[0]
            theta = HyperParams.from_log_vector(theta_log)
            irs = greedy_regions(theta, cfg.region, cfg.sensing,
                                 child_seed(master, rid, cyc, attempt, "regions"))
            X = sample_sensing_locations(irs, cfg.sensing.n_p, cfg.region,
                                         child_seed(master, rid, cyc, attempt, "locs"))
            break
        except PlannerDegenerateError as err:
            last_err = err
    else:
        raise PlannerDegenerateError(
            f"robot {rid} cycle {cyc}: planning failed {MAX_PLAN_RETRIES} times: {last_err}")
    retries = attempt

    tour = tsp_tour(robot.pos, X)
    schedule = traverse(tour, cfg.motion, t_start)
    xs, ys, ts = [], [], []
    for i, (loc, t_arr) in enumerate(schedule):
        y, x_act = sense(world, loc, t_arr, cfg.sensor,
                         child_seed(master, rid, cyc, "sense", i))
        xs.append(x_act)
        ys.append(y)
        ts.append(t_arr)
    batch = ObservationBatch(rid, np.array(xs), np.array(ys), np.array(ts))
    t_end = ts[-1] + cfg.motion.dwell

    entropy_sel = gaussian_entropy(cov_matrix(X, theta))
    rand_rng = np.random.default_rng(child_seed(master, rid, cyc, "rand-ent"))
    U = cfg.region.uniform_sample(X.shape[0], rand_rng)
    entropy_rand = gaussian_entropy(cov_matrix(U, theta))

    end_pos = schedule[-1][0]
    return dict(theta=theta, irs=irs, X=X, batch=batch, t_start=t_start, t_end=t_end,
                entropy_sel=entropy_sel, entropy_rand=entropy_rand,
                end_pos=end_pos, retries=retries)


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    """Run the full simulation until the virtual clock reaches the horizon."""
    world = build_world(cfg.world)
    master = cfg.seed

    if cfg.field_std_guess is not None:
        std_guess = cfg.field_std_guess
    elif isinstance(world, ArtificialField):
        std_guess = world.estimate_std(seed=child_seed(master, "std-guess"))
    else:
        rng = np.random.default_rng(child_seed(master, "std-guess"))
        X = cfg.region.uniform_sample(256, rng)
        std_guess = max(float(np.std(world.values(X, world.t_axis[0]))), 1e-6)
    bounds = default_belief_bounds(std_guess, cfg.region.extent)

    initial_gm = init_gm(cfg.adaptation.k, bounds, child_seed(master, "init-gm"),
                         cfg.adaptation.reg_floor)
    server_gm = initial_gm
    server_versions = [("server-v0", initial_gm)] if cfg.mode == "central" else []

    robots = {}
    for rid in range(cfg.r):
        rng = np.random.default_rng(child_seed(master, rid, "spawn"))
        pos = cfg.region.uniform_sample(1, rng)[0]
        bid = "server-v0" if cfg.mode == "central" else f"robot{rid}-v0"
        robots[rid] = _Robot(rid=rid, pos=pos, belief=initial_gm, belief_id=bid)

    executor = ThreadPoolExecutor(max_workers=cfg.threads) if cfg.threads > 1 else None
    pending = {}

    def dispatch(robot: _Robot, t_start: float):
        if t_start >= cfg.horizon:
            return
        if executor is None:
            pending[robot.rid] = _plan_cycle(world, cfg, robot, t_start)
        else:
            pending[robot.rid] = executor.submit(_plan_cycle, world, cfg, robot, t_start)

    records: list[CycleRecord] = []
    cycles: list[CycleData] = []
    final_time = 0.0
    try:
        for rid in range(cfg.r):
            dispatch(robots[rid], 0.0)

        while pending:
            done = {rid: (job if isinstance(job, dict) else job.result())
                    for rid, job in pending.items()}
            rid = min(done, key=lambda r: (done[r]["t_end"], r))
            data = done[rid]
            del pending[rid]
            robot = robots[rid]
            robot.pos = data["end_pos"]
            batch = data["batch"]
            used_id = robot.belief_id
            adapt_seed = child_seed(master, rid, robot.cycle, "adapt")

            if cfg.mode == "central":
                fail_rng = np.random.default_rng(child_seed(master, rid, robot.cycle, "comm"))
                failed = fail_rng.random() < cfg.comm_failure_prob
                if failed:
                    robot.belief, diag = adapt_belief(robot.belief, batch,
                                                      cfg.adaptation, adapt_seed)
                    robot.local_versions += 1
                    robot.belief_id = f"local-{rid}-v{robot.local_versions}"
                else:
                    server_gm, diag = adapt_belief(server_gm, batch,
                                                   cfg.adaptation, adapt_seed)
                    if diag.adapted:
                        server_versions.append((f"server-v{len(server_versions)}", server_gm))
                    robot.belief = server_gm
                    robot.belief_id = server_versions[-1][0]
                local = failed
            else:
                positions = {r.rid: r.pos for r in robots.values()}
                nbrs = neighbor_set(positions, rid, cfg.comm_radius)
                if cfg.mode == "sde":
                    robot.belief, diag = adapt_belief(
                        robot.belief, batch, cfg.adaptation, adapt_seed,
                        neighbor_gms=[robots[j].belief for j in nbrs])
                else:  # ode
                    extra = [robots[j].last_batch for j in nbrs
                             if robots[j].last_batch is not None]
                    robot.belief, diag = adapt_belief(
                        robot.belief, [batch, *extra], cfg.adaptation, adapt_seed)
                robot.local_versions += 1
                robot.belief_id = f"robot{rid}-v{robot.local_versions}"
                local = False
            robot.last_batch = batch

            record = CycleRecord(
                cycle=robot.cycle, robot_id=rid,
                t_start=data["t_start"], t_end=data["t_end"],
                epp=diag.epp, h_gm_given_y=diag.h_gm_given_y,
                adapted=diag.adapted, mcmc_fired=diag.mcmc_fired,
                entropy_selected=data["entropy_sel"], entropy_random=data["entropy_rand"],
                local=local, belief_used=used_id, belief_after=robot.belief_id,
                retries=data["retries"], literal_epp=diag.literal_epp)
            records.append(record)
            cycles.append(CycleData(record=record, theta=data["theta"],
                                    regions=data["irs"], planned_locations=data["X"],
                                    batch=batch, belief_after=robot.belief))
            final_time = max(final_time, data["t_end"])
            robot.cycle += 1
            dispatch(robot, data["t_end"])
    finally:
        if executor is not None:
            executor.shutdown(wait=False)

    return RunResult(config=cfg, initial_gm=initial_gm, records=records, cycles=cycles,
                     server_versions=server_versions,
                     robot_beliefs={rid: r.belief for rid, r in robots.items()},
                     belief_bounds=bounds, final_time=final_time)


def records_csv(records) -> str:
    """CycleRecord log as a byte-stable CSV string."""
    lines = [",".join(CYCLE_CSV_COLUMNS)]
    lines.extend(rec.csv_row() for rec in records)
    return "\n".join(lines) + "\n"
