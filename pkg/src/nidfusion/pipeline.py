"""Per-frame orchestration: load, render predictions, score, decide, fuse.

Each frame is scored against a prediction rendered from the active map (and,
when inactive surfels exist, one from the inactive map — a frame explained
by either part is redundant, so the lower combined score wins). Local loop
closures reactivate visible inactive surfels and force fusion.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dataset as ds
from .geometry import Frame, Intrinsics, Pose
from .nid import NidConfig, NidScore, frame_nid
from .policy import (FusionDecision, PolicyState, VERDICT_FUSE, advance,
                     decide, detect_local_loop)
from .renderer import Rendering, predict_view, visibility_ids
from .surfels import SurfelMap, fuse_frame


@dataclass(frozen=True)
class RunConfig:
    dataset: str
    trajectory: str | None = None        # default: <dataset>/groundtruth.txt
    intrinsics: Intrinsics | None = None  # default: from dataset meta or TUM fr3
    tau: float = 0.8
    alpha: float = 0.5
    bins: int = 64
    depth_min: float = 0.4
    depth_max: float = 8.0
    window: int = 200
    stride: int = 1
    out: str | None = None
    disable_gating: bool = False
    disable_loops: bool = False
    force_loop_frames: tuple[int, ...] = ()
    eps_d: float = 0.05
    eps_n_deg: float = 30.0
    min_support: float = 0.1
    loop_agree_frac: float = 0.5
    depth_scale: float = ds.DEFAULT_DEPTH_SCALE
    max_dt: float = 0.02
    threads: int = 1        # histogram chunk count (deterministic merge)
    r_max: float = 16.0
    max_frames: int | None = None

    def nid_config(self) -> NidConfig:
        return NidConfig(bins=self.bins, alpha=self.alpha,
                         depth_min=self.depth_min, depth_max=self.depth_max,
                         min_support=self.min_support, chunks=self.threads)


# TUM Freiburg-3 pinhole parameters; sensible default for real sequences.
TUM_FR3_INTRINSICS = Intrinsics(fx=535.4, fy=539.2, cx=320.1, cy=247.6,
                                width=640, height=480)


@dataclass
class RunReport:
    config: RunConfig
    decisions: list[FusionDecision] = field(default_factory=list)
    map: SurfelMap = field(default_factory=SurfelMap)
    frames: list[tuple[ds.FrameRecord, Pose]] = field(default_factory=list)
    dropped_records: int = 0

    @property
    def fused_count(self) -> int:
        return sum(1 for d in self.decisions if d.fused)


class PipelineError(RuntimeError):
    def __init__(self, frame_index: int, cause: Exception):
        super().__init__(f"frame {frame_index}: {cause}")
        self.frame_index = frame_index


def _read_intrinsics_file(path: Path) -> Intrinsics | None:
    if not path.exists():
        return None
    kv = {}
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, val = line.partition("=")
        kv[key.strip()] = val.strip()
    return Intrinsics(fx=float(kv["fx"]), fy=float(kv["fy"]),
                      cx=float(kv["cx"]), cy=float(kv["cy"]),
                      width=int(kv["width"]), height=int(kv["height"]))


def resolve_intrinsics(config: RunConfig) -> Intrinsics:
    if config.intrinsics is not None:
        return config.intrinsics
    from_file = _read_intrinsics_file(Path(config.dataset) / "intrinsics.txt")
    return from_file if from_file is not None else TUM_FR3_INTRINSICS


def _select_score(active: NidScore, inactive: NidScore | None) -> NidScore:
    """Lower combined score among trusted candidates; active as fallback."""
    candidates = [s for s in (active, inactive)
                  if s is not None and not s.low_support]
    if not candidates:
        return active
    return min(candidates, key=lambda s: s.combined)


def process_frame(map_: SurfelMap, frame: Frame, pose: Pose, intr: Intrinsics,
                  state: PolicyState, index: int, config: RunConfig,
                  ) -> tuple[FusionDecision, PolicyState]:
    """Run the decision+fusion state machine for one frame."""
    nid_cfg = config.nid_config()
    tau = 0.0 if config.disable_gating else config.tau

    t0 = time.perf_counter()
    theta, phi = map_.partition(index, state.effective_window) if len(map_) \
        else (np.zeros(0, np.int64), np.zeros(0, np.int64))
    pred_active = predict_view(map_, theta, pose, intr, config.r_max)
    pred_inactive: Rendering | None = None
    if phi.size:
        pred_inactive = predict_view(map_, phi, pose, intr, config.r_max)
    render_ms = (time.perf_counter() - t0) * 1e3

    loop_event = index in config.force_loop_frames
    if (not config.disable_loops and pred_inactive is not None
            and detect_local_loop(frame, pred_inactive.to_frame(),
                                  config.eps_d, config.loop_agree_frac,
                                  config.min_support)):
        loop_event = True
    if loop_event and phi.size:
        visible = visibility_ids(map_, phi, pose, intr, config.eps_d,
                                 config.r_max)
        map_.reactivate(visible, index)

    t0 = time.perf_counter()
    score_active = frame_nid(frame, pred_active.to_frame(), nid_cfg)
    score_inactive = None
    if pred_inactive is not None:
        score_inactive = frame_nid(frame, pred_inactive.to_frame(), nid_cfg)
    score = _select_score(score_active, score_inactive)
    nid_ms = (time.perf_counter() - t0) * 1e3

    verdict, reason = decide(score, tau, loop_event)
    fuse_ms = 0.0
    if verdict == VERDICT_FUSE:
        t0 = time.perf_counter()
        fuse_frame(map_, frame, pose, intr, pred_active,
                   eps_d=config.eps_d, eps_n_deg=config.eps_n_deg,
                   stride=config.stride, now=index)
        fuse_ms = (time.perf_counter() - t0) * 1e3

    decision = FusionDecision(index, score, verdict, reason,
                              surfel_count=len(map_), nid_ms=nid_ms,
                              render_ms=render_ms, fuse_ms=fuse_ms)
    return decision, advance(state, verdict == VERDICT_FUSE)


def run(config: RunConfig) -> RunReport:
    """Process a whole dataset; optionally write CSV, PLY and summary."""
    root = Path(config.dataset)
    assoc = ds.parse_association((root / "associations.txt").read_text())
    traj_path = Path(config.trajectory) if config.trajectory \
        else root / "groundtruth.txt"
    trajectory = ds.parse_trajectory(traj_path.read_text())
    pairs, dropped = ds.associate_poses(assoc, trajectory, config.max_dt)
    if config.max_frames is not None:
        pairs = pairs[:config.max_frames]
    intr = resolve_intrinsics(config)

    report = RunReport(config=config, frames=pairs, dropped_records=dropped)
    state = PolicyState(base_window=config.window)
    for index, (record, pose) in enumerate(pairs):
        try:
            frame = ds.load_frame(root, record, config.depth_scale)
            decision, state = process_frame(report.map, frame, pose, intr,
                                            state, index, config)
        except Exception as exc:  # attach the frame index for diagnosis
            raise PipelineError(index, exc) from exc
        report.decisions.append(decision)

    if config.out is not None:
        from .evaluation import emit_csv, summarize, write_summary
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        emit_csv(report.decisions, out / "decisions.csv")
        report.map.write_ply(out / "map.ply")
        write_summary(summarize(report), out / "summary.txt")
    return report
