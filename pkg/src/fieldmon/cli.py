"""Command-line interface: run experiments, evaluate runs, self-test.

    fieldmon run CONFIG.json --out DIR [--set key=value]... [--plots]
    fieldmon eval RUN_DIR [--out DIR] [--plots] ...
    fieldmon selftest

The default output root is the FIELDMON_OUTPUT_ROOT environment variable
(falling back to the current directory) when --out is omitted.  Exit codes:
0 success, 1 selftest failure, 2 invalid config or missing artifacts,
3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import apply_overrides, config_from_dict, config_hash, config_to_dict
from .metrics import METRICS_CSV_COLUMNS, compute_metric_series, dataset_kld, observed_dynamics_gm
from .runio import (MissingArtifactsError, load_run, reload_world, svg_line_chart,
                    write_manifest, write_run)
from .selftest import run_selftest
from .simulate import run_experiment


def _output_root() -> Path:
    return Path(os.environ.get("FIELDMON_OUTPUT_ROOT", "."))


def cmd_run(args) -> int:
    try:
        doc = json.loads(Path(args.config).read_text())
        doc = apply_overrides(doc, args.set or [])
        cfg = config_from_dict(doc)
    except (OSError, ValueError, TypeError) as err:
        print(f"invalid config: {err}", file=sys.stderr)
        return 2
    eff = config_to_dict(cfg)
    out_dir = Path(args.out) if args.out else _output_root() / f"run_{config_hash(eff)[:12]}"
    try:
        write_manifest(out_dir, eff)
        result = run_experiment(cfg)
        write_run(out_dir, result)
    except Exception as err:
        print(f"run failed: {err}", file=sys.stderr)
        return 3
    print(f"{len(result.records)} cycles -> {out_dir}")
    if args.plots:
        _run_plots(out_dir, result)
    return 0


def _run_plots(out_dir: Path, result) -> None:
    epp = [r.epp for r in result.records]
    ent_s = [r.entropy_selected for r in result.records]
    ent_r = [r.entropy_random for r in result.records]
    svg_line_chart({"epp": epp}, "effective particles per cycle (%)",
                   out_dir / "epp.svg")
    svg_line_chart({"selected": ent_s, "random": ent_r},
                   "joint entropy of sensing locations", out_dir / "entropy.svg")


def cmd_eval(args) -> int:
    run_dir = Path(args.run_dir)
    try:
        result = load_run(run_dir)
    except (MissingArtifactsError, OSError, ValueError, KeyError) as err:
        print(f"cannot evaluate {run_dir}: {err}", file=sys.stderr)
        return 2
    out_dir = Path(args.out) if args.out else run_dir / "eval"
    out_dir.mkdir(parents=True, exist_ok=True)
    world = reload_world(result)
    cfg = result.config

    series = compute_metric_series(
        result, world, oracle_k=args.oracle_k, oracle_n_dense=args.oracle_points,
        oracle_p=args.oracle_chain, kl_n=args.kl_samples, m_eval=args.holdout)
    (out_dir / "metrics.csv").write_text(series.to_csv(), encoding="ascii")

    # whole-run dynamics scoring: joint row plus one row per robot
    horizon = max(result.final_time, cfg.horizon)
    kld_rows = []
    robot_ids = sorted({c.batch.robot_id for c in result.cycles})
    groups = {"joint": [c.batch for c in result.cycles]}
    for rid in robot_ids:
        groups[str(rid)] = [c.batch for c in result.cycles if c.batch.robot_id == rid]
    for name, batches in groups.items():
        try:
            gm, norm = observed_dynamics_gm(batches, cfg.region, horizon,
                                            k=args.dynamics_k, seed=cfg.seed)
            est = dataset_kld(gm, norm, world, cfg.region, horizon,
                              k=args.dynamics_k, n_dense=args.dynamics_dense,
                              seed=cfg.seed)
            kld_rows.append((name, est.value, est.std_error))
        except ValueError as err:
            print(f"dataset KL for {name!r} skipped: {err}", file=sys.stderr)
            kld_rows.append((name, float("nan"), float("nan")))
    lines = ["robot_id,kld,kld_std_error"]
    lines += [f"{name},{val!r},{se!r}" for name, val, se in kld_rows]
    (out_dir / "dataset_kld.csv").write_text("\n".join(lines) + "\n", encoding="ascii")

    summary = {
        "n_cycles": len(result.records),
        "dataset_kld": {name: val for name, val, _ in kld_rows},
        "mean_pct_ep_adapted": float(np.mean(series.column("pct_ep_adapted"))),
        "mean_pct_ep_initial": float(np.mean(series.column("pct_ep_initial"))),
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=1) + "\n", encoding="ascii")

    if args.plots:
        svg_line_chart({"adapted": series.column("pct_ep_adapted"),
                        "initial": series.column("pct_ep_initial")},
                       "effective particles (%)", out_dir / "pct_ep.svg")
        svg_line_chart({"adapted": series.column("kld_adapted"),
                        "initial": series.column("kld_initial")},
                       "KL divergence to reference", out_dir / "kld.svg")
        svg_line_chart({"selected": series.column("entropy_selected"),
                        "random": series.column("entropy_random")},
                       "joint entropy of sensing locations", out_dir / "entropy.svg")
    print(f"metrics for {len(series.rows)} cycles -> {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fieldmon", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("config", help="path to the config JSON")
    p_run.add_argument("--out", help="output directory (default under FIELDMON_OUTPUT_ROOT)")
    p_run.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config field (dotted path)")
    p_run.add_argument("--plots", action="store_true", help="emit SVG plots")
    p_run.set_defaults(fn=cmd_run)

    p_eval = sub.add_parser("eval", help="compute metrics for a completed run")
    p_eval.add_argument("run_dir")
    p_eval.add_argument("--out", help="output directory (default RUN_DIR/eval)")
    p_eval.add_argument("--kl-samples", type=int, default=10_000, dest="kl_samples")
    p_eval.add_argument("--oracle-points", type=int, default=150, dest="oracle_points")
    p_eval.add_argument("--oracle-chain", type=int, default=800, dest="oracle_chain")
    p_eval.add_argument("--oracle-k", type=int, default=3, dest="oracle_k")
    p_eval.add_argument("--holdout", type=int, default=50)
    p_eval.add_argument("--dynamics-k", type=int, default=8, dest="dynamics_k")
    p_eval.add_argument("--dynamics-dense", type=int, default=2000, dest="dynamics_dense")
    p_eval.add_argument("--plots", action="store_true")
    p_eval.set_defaults(fn=cmd_eval)

    p_self = sub.add_parser("selftest", help="run the analytic-oracle checks")
    p_self.set_defaults(fn=lambda args: run_selftest())

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
