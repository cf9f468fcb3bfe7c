"""Command-line entry points: run, synth, sweep.

A config file (key=value lines, '#' comments) can seed any `run` flag;
explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .geometry import Intrinsics
from .pipeline import RunConfig, run
from .synth import synthesize_sequence


def _parse_config_file(path: str) -> dict:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        values[key.strip().replace("-", "_")] = val.strip()
    return values


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", help="dataset directory")
    p.add_argument("--trajectory", help="trajectory file (default: <dataset>/groundtruth.txt)")
    p.add_argument("--tau", type=float, help="NID fusion threshold (default 0.8)")
    p.add_argument("--alpha", type=float, help="intensity/depth weighting (default 0.5)")
    p.add_argument("--bins", type=int, help="histogram bins per axis (default 64)")
    p.add_argument("--depth-min", type=float, help="depth histogram lower edge (m)")
    p.add_argument("--depth-max", type=float, help="depth histogram upper edge (m)")
    p.add_argument("--window", type=int, help="base active window in frames (default 200)")
    p.add_argument("--stride", type=int, help="fusion pixel subsampling stride (default 1)")
    p.add_argument("--out", help="output directory for CSV/PLY/summary")
    p.add_argument("--disable-gating", action="store_const", const=True,
                   help="fuse every frame (tau treated as 0)")
    p.add_argument("--disable-loops", action="store_const", const=True,
                   help="turn off local loop detection")
    p.add_argument("--force-loop-frames",
                   help="comma-separated frame indices with injected loop events")
    p.add_argument("--depth-scale", type=float, help="depth counts per meter (default 5000)")
    p.add_argument("--max-frames", type=int, help="process only the first N frames")
    p.add_argument("--threads", type=int, help="histogram chunk count (default 1)")
    p.add_argument("--config", help="key=value config file; flags win")


_RUN_FIELDS = {
    "dataset": str, "trajectory": str, "tau": float, "alpha": float,
    "bins": int, "depth_min": float, "depth_max": float, "window": int,
    "stride": int, "out": str, "disable_gating": bool, "disable_loops": bool,
    "force_loop_frames": str, "depth_scale": float, "max_frames": int,
    "threads": int,
}


def _build_run_config(args: argparse.Namespace) -> RunConfig:
    merged: dict = {}
    if args.config:
        for key, val in _parse_config_file(args.config).items():
            if key not in _RUN_FIELDS:
                raise ValueError(f"unknown config key {key!r}")
            typ = _RUN_FIELDS[key]
            merged[key] = val.lower() in ("1", "true", "yes") if typ is bool \
                else typ(val)
    for key in _RUN_FIELDS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    if "force_loop_frames" in merged and isinstance(merged["force_loop_frames"], str):
        text = merged["force_loop_frames"]
        merged["force_loop_frames"] = tuple(int(t) for t in text.split(",") if t)
    if "dataset" not in merged:
        raise ValueError("--dataset is required (flag or config file)")
    return RunConfig(**merged)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="nidfusion",
        description="Information-gated surfel fusion for posed RGB-D sequences")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="process a dataset")
    _add_run_flags(p_run)

    p_synth = sub.add_parser("synth", help="generate a synthetic dataset")
    p_synth.add_argument("--spec", required=True, help="YAML scene/path spec")
    p_synth.add_argument("--out", required=True, help="dataset output directory")

    p_sweep = sub.add_parser("sweep", help="grid of runs over tau and alpha")
    _add_run_flags(p_sweep)
    p_sweep.add_argument("--taus", required=True, help="comma-separated tau values")
    p_sweep.add_argument("--alphas", required=True, help="comma-separated alpha values")
    p_sweep.add_argument("--sweep-out", required=True, help="sweep CSV path")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            config = _build_run_config(args)
            report = run(config)
            fused = report.fused_count
            total = len(report.decisions)
            print(f"processed {total} frames, fused {fused} "
                  f"({fused / max(total, 1):.1%}), map size {len(report.map)}")
        elif args.command == "synth":
            out = synthesize_sequence(args.spec, args.out)
            print(f"wrote dataset to {out}")
        elif args.command == "sweep":
            from .evaluation import emit_sweep
            config = _build_run_config(args)
            taus = [float(t) for t in args.taus.split(",")]
            alphas = [float(a) for a in args.alphas.split(",")]
            rows = emit_sweep(config, taus, alphas, args.sweep_out)
            print(f"wrote {len(rows)} sweep rows to {args.sweep_out}")
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
