"""Run-directory layout: manifest, cycle log, belief and region snapshots.

Layout under the output directory:

    manifest.json            written before the first cycle, then immutable
    run_complete.json        final virtual time and cycle count
    cycles.csv               one row per completed robot cycle (byte-stable)
    cycles/cycle_NNNN.json   per-cycle record, plan, regions, batch
    beliefs/initial.json     the initial mixture
    beliefs/<snapshot>.json  every belief version produced during the run

Everything an evaluation needs is on disk, so ``load_run`` can rebuild the
in-memory result without re-running the simulation.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np

from .belief import ObservationBatch
from .config import FORMAT_VERSIONS, config_from_dict, config_hash, config_to_dict
from .gp import HyperParams
from .mixture import GaussianMixture
from .regions import InformativeRegionSet
from .simulate import CycleData, CycleRecord, RunResult, build_world, records_csv


def _dump(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="ascii")


def write_manifest(out_dir: Path, cfg_dict: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    _dump(out_dir / "manifest.json", {
        "format_versions": FORMAT_VERSIONS,
        "config": cfg_dict,
        "config_sha256": config_hash(cfg_dict),
        "master_seed": cfg_dict["seed"],
        "virtual_start": 0.0,
        "virtual_end": cfg_dict["horizon"],
        "outputs": {"cycles_csv": "cycles.csv", "cycles_dir": "cycles",
                    "beliefs_dir": "beliefs"},
        "wall_clock_started": time.time(),
    })


def _cycle_doc(index: int, cyc: CycleData) -> dict:
    rec = cyc.record
    return {
        "index": index,
        "record": {
            "cycle": rec.cycle, "robot_id": rec.robot_id,
            "t_start": rec.t_start, "t_end": rec.t_end,
            "epp": rec.epp, "h_gm_given_y": rec.h_gm_given_y,
            "adapted": rec.adapted, "mcmc_fired": rec.mcmc_fired,
            "entropy_selected": rec.entropy_selected,
            "entropy_random": rec.entropy_random,
            "local": rec.local, "belief_used": rec.belief_used,
            "belief_after": rec.belief_after, "retries": rec.retries,
            "literal_epp": rec.literal_epp,
        },
        "theta": cyc.theta.to_vector().tolist(),
        "regions": cyc.regions.to_json_dict(),
        "planned_locations": cyc.planned_locations.tolist(),
        "batch": cyc.batch.to_json_dict(),
    }


def write_run(out_dir, result: RunResult) -> None:
    """Persist everything after a completed run (manifest written earlier)."""
    out_dir = Path(out_dir)
    (out_dir / "cycles").mkdir(parents=True, exist_ok=True)
    (out_dir / "beliefs").mkdir(parents=True, exist_ok=True)

    (out_dir / "cycles.csv").write_text(records_csv(result.records), encoding="ascii")

    _dump(out_dir / "beliefs" / "initial.json", result.initial_gm.to_json_dict())
    seen = set()
    for name, gm in result.server_versions:
        if name not in seen:
            _dump(out_dir / "beliefs" / f"{name}.json", gm.to_json_dict())
            seen.add(name)
    for i, cyc in enumerate(result.cycles):
        _dump(out_dir / "cycles" / f"cycle_{i:04d}.json", _cycle_doc(i, cyc))
        name = cyc.record.belief_after
        if name not in seen:
            _dump(out_dir / "beliefs" / f"{name}.json", cyc.belief_after.to_json_dict())
            seen.add(name)

    _dump(out_dir / "run_complete.json", {
        "final_virtual_time": result.final_time,
        "n_cycles": len(result.records),
        "belief_bounds": result.belief_bounds.tolist(),
    })


class MissingArtifactsError(FileNotFoundError):
    """Run directory lacks the files an evaluation needs."""


def load_run(run_dir) -> RunResult:
    """Rebuild a RunResult (minus server version objects) from disk."""
    run_dir = Path(run_dir)
    manifest_path = run_dir / "manifest.json"
    complete_path = run_dir / "run_complete.json"
    csv_path = run_dir / "cycles.csv"
    if not (manifest_path.exists() and complete_path.exists() and csv_path.exists()):
        raise MissingArtifactsError(f"{run_dir} is not a completed run directory")
    manifest = json.loads(manifest_path.read_text())
    complete = json.loads(complete_path.read_text())
    cfg = config_from_dict(manifest["config"])

    initial = GaussianMixture.from_json_dict(
        json.loads((run_dir / "beliefs" / "initial.json").read_text()))

    cycle_files = sorted((run_dir / "cycles").glob("cycle_*.json"))
    if complete["n_cycles"] == 0 or not cycle_files:
        raise MissingArtifactsError(f"{run_dir} contains no completed cycles")

    beliefs_cache: dict[str, GaussianMixture] = {}

    def belief(name: str) -> GaussianMixture:
        if name not in beliefs_cache:
            path = run_dir / "beliefs" / f"{name}.json"
            if path.exists():
                beliefs_cache[name] = GaussianMixture.from_json_dict(json.loads(path.read_text()))
            else:
                beliefs_cache[name] = initial  # v0 snapshots are the initial mixture
        return beliefs_cache[name]

    records, cycles = [], []
    for path in cycle_files:
        doc = json.loads(path.read_text())
        r = doc["record"]
        rec = CycleRecord(**r)
        records.append(rec)
        cycles.append(CycleData(
            record=rec,
            theta=HyperParams.from_vector(doc["theta"]),
            regions=InformativeRegionSet.from_json_dict(doc["regions"]),
            planned_locations=np.array(doc["planned_locations"]),
            batch=ObservationBatch.from_json_dict(doc["batch"]),
            belief_after=belief(r["belief_after"]),
        ))

    return RunResult(config=cfg, initial_gm=initial, records=records, cycles=cycles,
                     server_versions=[], robot_beliefs={},
                     belief_bounds=np.array(complete["belief_bounds"]),
                     final_time=complete["final_virtual_time"])


def reload_world(result: RunResult):
    return build_world(result.config.world)


# ---------------------------------------------------------------------------
# Minimal SVG line plots (derived strictly from the metric values)
# ---------------------------------------------------------------------------

_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def svg_line_chart(series: dict, title: str, path) -> None:
    """Write a simple multi-series line chart; series maps label -> values."""
    width, height, pad = 640, 360, 48
    finite = [v for vals in series.values() for v in vals if np.isfinite(v)]
    if not finite:
        finite = [0.0, 1.0]
    lo, hi = min(finite), max(finite)
    if hi == lo:
        hi = lo + 1.0
    n = max(len(v) for v in series.values())

    def sx(i):
        return pad + (width - 2 * pad) * (i / max(n - 1, 1))

    def sy(v):
        return height - pad - (height - 2 * pad) * ((v - lo) / (hi - lo))

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
             f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
             f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
             f'<text x="{pad}" y="{height - pad + 16}" font-size="10">0</text>',
             f'<text x="{width - pad}" y="{height - pad + 16}" font-size="10" text-anchor="end">{n - 1}</text>',
             f'<text x="{pad - 4}" y="{height - pad}" font-size="10" text-anchor="end">{lo:.4g}</text>',
             f'<text x="{pad - 4}" y="{pad + 4}" font-size="10" text-anchor="end">{hi:.4g}</text>']
    for ci, (label, vals) in enumerate(series.items()):
        color = _SVG_COLORS[ci % len(_SVG_COLORS)]
        pts = " ".join(f"{sx(i):.2f},{sy(v):.2f}" for i, v in enumerate(vals) if np.isfinite(v))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{width - pad}" y="{pad + 14 * ci}" text-anchor="end" '
                     f'font-size="11" fill="{color}">{label}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="ascii")
