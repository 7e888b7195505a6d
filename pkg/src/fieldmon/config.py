"""Experiment configuration: JSON form, defaults, and override handling.

One JSON document mirrors ExperimentConfig; missing fields take the
defaults below (four robots, five regions of two samples, gates 20/80,
amplification 150, thousand particles, 1000 x 1000 region, communication
radius 300).  Command-line overrides use dotted paths into the document,
e.g. ``--set adaptation.spp=30`` or ``--set r=1``.
"""

from __future__ import annotations

import copy
import hashlib
import json

import numpy as np

from .belief import AdaptationConfig
from .planning import MotionLimits
from .regions import Region, SensingPlanConfig
from .simulate import ExperimentConfig
from .world import ArtificialFieldSpec, SensorModel

FORMAT_VERSIONS = {
    "config": 1,
    "manifest": 1,
    "cycles_csv": 1,
    "cycle_json": 1,
    "belief_json": 1,
    "metrics_csv": 1,
    "dataset_csv": 1,
}

DEFAULT_CONFIG = {
    "mode": "central",
    "r": 4,
    "horizon": 5000.0,
    "seed": 0,
    "region": {"bounds": [0.0, 1000.0, 0.0, 1000.0], "holes": []},
    "world": {"kind": "artificial", "n_components": 220, "seed": 0},
    "adaptation": {"p": 1000, "k": 3, "spp": 20.0, "opp": 80.0,
                   "proposal_std": 0.05, "burn_in": 200, "thin": 2,
                   "reg_floor": 1e-6},
    "sensing": {"n_r": 5, "n_o": 2, "n_p": 2, "s_c": 150.0, "p": 1000,
                "k_region": 2, "proposal_frac": 0.005, "burn_in": 100,
                "thin": 1, "reg_floor": 1e-6},
    "motion": {"v_max": [30.0, 30.0], "a_max": [300.0, 300.0], "dwell": 1.0},
    "sensor": {"noise_std": 0.0, "localization_std": 0.0},
    "comm_failure_prob": 0.0,
    "comm_radius": 300.0,
    "field_std_guess": None,
    "threads": 1,
}


def default_config_dict() -> dict:
    return copy.deepcopy(DEFAULT_CONFIG)


def _merge_section(name: str, doc: dict) -> dict:
    base = copy.deepcopy(DEFAULT_CONFIG[name])
    extra = doc.get(name, {})
    if not isinstance(extra, dict):
        raise ValueError(f"config section {name!r} must be an object")
    unknown = set(extra) - set(base) - ({"bounds"} if name == "world" else set())
    if name == "world":
        # world sections vary by kind; validate later
        base.update(extra)
        return base
    if unknown:
        raise ValueError(f"unknown keys in config section {name!r}: {sorted(unknown)}")
    base.update(extra)
    return base


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Build the validated ExperimentConfig from a (possibly partial) dict."""
    if not isinstance(doc, dict):
        raise ValueError("config must be a JSON object")
    unknown = set(doc) - set(DEFAULT_CONFIG)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")

    region_doc = _merge_section("region", doc)
    region = Region(tuple(region_doc["bounds"]),
                    tuple(np.array(h, dtype=float) for h in region_doc.get("holes", [])))

    world_doc = _merge_section("world", doc)
    kind = world_doc.get("kind")
    if kind == "artificial":
        world_doc.setdefault("bounds", list(region.bounds))
        world = ArtificialFieldSpec.from_json_dict(world_doc)
    elif kind == "dataset":
        if "path" not in world_doc:
            raise ValueError("dataset world needs a 'path'")
        world = {"kind": "dataset", "path": world_doc["path"]}
    else:
        raise ValueError(f"unknown world kind {kind!r}")

    adapt = AdaptationConfig(**_merge_section("adaptation", doc))
    sensing = SensingPlanConfig(**_merge_section("sensing", doc))
    motion_doc = _merge_section("motion", doc)
    motion = MotionLimits(v_max=tuple(motion_doc["v_max"]),
                          a_max=tuple(motion_doc["a_max"]),
                          dwell=motion_doc["dwell"])
    sensor = SensorModel(**_merge_section("sensor", doc))

    return ExperimentConfig(
        region=region, world=world,
        mode=doc.get("mode", DEFAULT_CONFIG["mode"]),
        r=int(doc.get("r", DEFAULT_CONFIG["r"])),
        horizon=float(doc.get("horizon", DEFAULT_CONFIG["horizon"])),
        seed=int(doc.get("seed", DEFAULT_CONFIG["seed"])),
        adaptation=adapt, sensing=sensing, motion=motion, sensor=sensor,
        comm_failure_prob=float(doc.get("comm_failure_prob", 0.0)),
        comm_radius=float(doc.get("comm_radius", DEFAULT_CONFIG["comm_radius"])),
        field_std_guess=doc.get("field_std_guess"),
        threads=int(doc.get("threads", 1)),
    )


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Effective configuration as a plain JSON-ready dict."""
    if isinstance(cfg.world, ArtificialFieldSpec):
        world = cfg.world.to_json_dict()
    else:
        world = dict(cfg.world)
    return {
        "mode": cfg.mode,
        "r": cfg.r,
        "horizon": cfg.horizon,
        "seed": cfg.seed,
        "region": cfg.region.to_json_dict(),
        "world": world,
        "adaptation": {"p": cfg.adaptation.p, "k": cfg.adaptation.k,
                       "spp": cfg.adaptation.spp, "opp": cfg.adaptation.opp,
                       "proposal_std": cfg.adaptation.proposal_std,
                       "burn_in": cfg.adaptation.burn_in, "thin": cfg.adaptation.thin,
                       "reg_floor": cfg.adaptation.reg_floor},
        "sensing": {"n_r": cfg.sensing.n_r, "n_o": cfg.sensing.n_o,
                    "n_p": cfg.sensing.n_p, "s_c": cfg.sensing.s_c,
                    "p": cfg.sensing.p, "k_region": cfg.sensing.k_region,
                    "proposal_frac": cfg.sensing.proposal_frac,
                    "burn_in": cfg.sensing.burn_in, "thin": cfg.sensing.thin,
                    "reg_floor": cfg.sensing.reg_floor},
        "motion": {"v_max": list(cfg.motion.v_max), "a_max": list(cfg.motion.a_max),
                   "dwell": cfg.motion.dwell},
        "sensor": {"noise_std": cfg.sensor.noise_std,
                   "localization_std": cfg.sensor.localization_std},
        "comm_failure_prob": cfg.comm_failure_prob,
        "comm_radius": cfg.comm_radius,
        "field_std_guess": cfg.field_std_guess,
        "threads": cfg.threads,
    }


def config_hash(doc: dict) -> str:
    """SHA-256 of the canonical JSON form."""
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(doc: dict, overrides) -> dict:
    """Apply key=value overrides with dotted paths into nested sections."""
    doc = copy.deepcopy(doc)
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"override {item!r} is not of the form key=value")
        path, _, raw = item.partition("=")
        keys = path.strip().split(".")
        node = doc
        for k in keys[:-1]:
            nxt = node.setdefault(k, {})
            if not isinstance(nxt, dict):
                raise ValueError(f"override path {path!r} crosses a non-object")
            node = nxt
        node[keys[-1]] = _parse_value(raw)
    return doc
