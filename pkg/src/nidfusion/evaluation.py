"""Run summaries, CSV emission, parameter sweeps and map accuracy.

Model accuracy is measured as depth reprojection error: render the final map
at sampled frame poses and compare against the live depth over co-valid
pixels. Timings come from a monotonic clock and are reported in ms.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import dataset as ds
from .nid import NidScore
from .pipeline import RunConfig, RunReport, resolve_intrinsics, run
from .policy import FusionDecision
from .renderer import predict_view
from .surfels import SurfelMap

CSV_HEADER = ["index", "nid_rgb", "nid_depth", "combined", "verdict",
              "reason", "surfel_count", "nid_ms", "render_ms", "fuse_ms"]

SWEEP_HEADER = ["tau", "alpha", "frames_total", "frames_fused",
                "frames_skipped", "fused_fraction", "final_surfels",
                "mean_combined_nid", "mean_nid_ms", "mean_render_ms",
                "mean_fuse_ms"]


@dataclass(frozen=True)
class Summary:
    frames_total: int
    frames_fused: int
    frames_skipped: int
    fused_fraction: float
    final_surfels: int
    mean_combined_nid: float
    mean_nid_ms: float
    mean_render_ms: float
    mean_fuse_ms: float


def summarize(report: RunReport) -> Summary:
    decs = report.decisions
    if not decs:
        raise ValueError("empty report")
    n = len(decs)
    fused = sum(1 for d in decs if d.fused)
    return Summary(
        frames_total=n,
        frames_fused=fused,
        frames_skipped=n - fused,
        fused_fraction=fused / n,
        final_surfels=len(report.map),
        mean_combined_nid=sum(d.score.combined for d in decs) / n,
        mean_nid_ms=sum(d.nid_ms for d in decs) / n,
        mean_render_ms=sum(d.render_ms for d in decs) / n,
        mean_fuse_ms=sum(d.fuse_ms for d in decs) / n,
    )


def write_summary(summary: Summary, path: str | Path) -> None:
    lines = [f"{k}={getattr(summary, k)!r}" for k in summary.__dataclass_fields__]
    Path(path).write_text("\n".join(lines) + "\n")


def emit_csv(decisions: list[FusionDecision], path: str | Path) -> None:
    """One row per frame; floats serialized with repr for exact round-trips."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for d in decisions:
            writer.writerow([d.frame_index, repr(d.score.nid_rgb),
                             repr(d.score.nid_depth), repr(d.score.combined),
                             d.verdict, d.reason, d.surfel_count,
                             repr(d.nid_ms), repr(d.render_ms),
                             repr(d.fuse_ms)])


def read_csv(path: str | Path) -> list[FusionDecision]:
    """Inverse of emit_csv (pixels_used/low_support are not serialized)."""
    decisions = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        for row in reader:
            score = NidScore(float(row[1]), float(row[2]), float(row[3]),
                             pixels_used=0, low_support=False)
            decisions.append(FusionDecision(
                int(row[0]), score, row[4], row[5], int(row[6]),
                float(row[7]), float(row[8]), float(row[9])))
    return decisions


@dataclass(frozen=True)
class DepthErrorStats:
    pixels: int
    mean: float
    median: float
    p95: float

    @property
    def no_overlap(self) -> bool:
        return self.pixels == 0


def depth_reprojection_error(map_: SurfelMap, report: RunReport,
                             sample_indices: list[int],
                             ) -> DepthErrorStats:
    """|predicted - live| depth error of the map over sampled frames."""
    if len(map_) == 0:
        raise ValueError("empty map")
    config = report.config
    intr = resolve_intrinsics(config)
    root = Path(config.dataset)
    all_ids = np.arange(len(map_), dtype=np.int64)
    errors = []
    for idx in sample_indices:
        record, pose = report.frames[idx]
        frame = ds.load_frame(root, record, config.depth_scale)
        pred = predict_view(map_, all_ids, pose, intr, config.r_max)
        covalid = (frame.depth > 0) & (pred.depth > 0)
        if covalid.any():
            errors.append(np.abs(pred.depth[covalid] - frame.depth[covalid]))
    if not errors:
        return DepthErrorStats(0, float("nan"), float("nan"), float("nan"))
    err = np.concatenate(errors)
    return DepthErrorStats(int(err.size), float(err.mean()),
                           float(np.median(err)),
                           float(np.percentile(err, 95)))


def emit_sweep(base_config: RunConfig, tau_list: list[float],
               alpha_list: list[float], path: str | Path | None = None,
               ) -> list[tuple[float, float, Summary]]:
    """Run the pipeline per (tau, alpha) point and tabulate the summaries."""
    rows = []
    for tau in tau_list:
        for alpha in alpha_list:
            cfg = replace(base_config, tau=tau, alpha=alpha, out=None)
            rows.append((tau, alpha, summarize(run(cfg))))
    if path is not None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(SWEEP_HEADER)
            for tau, alpha, s in rows:
                writer.writerow([repr(tau), repr(alpha), s.frames_total,
                                 s.frames_fused, s.frames_skipped,
                                 repr(s.fused_fraction), s.final_surfels,
                                 repr(s.mean_combined_nid), repr(s.mean_nid_ms),
                                 repr(s.mean_render_ms), repr(s.mean_fuse_ms)])
    return rows
