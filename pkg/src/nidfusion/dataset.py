"""TUM-RGB-D style dataset ingestion.

Handles association files ("ts rgb ts depth"), ground-truth trajectories
("ts tx ty tz qx qy qz qw"), 16-bit depth PNGs and 8-bit RGB PNGs. The same
layout is used by ICL-NUIM exports.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from .geometry import Frame, Pose

DEFAULT_DEPTH_SCALE = 5000.0  # TUM / ICL-NUIM: counts per meter
LUMA = (0.299, 0.587, 0.114)  # ITU-R BT.601


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class FrameRecord:
    timestamp: float
    rgb_path: str
    depth_path: str


@dataclass(frozen=True)
class TrajectoryEntry:
    timestamp: float
    pose: Pose


def parse_association(text: str) -> list[FrameRecord]:
    """Parse an association file into frame records, keeping file order."""
    records = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise DatasetError(
                f"line {lineno}: expected 'ts rgb ts depth', got {len(parts)} fields")
        try:
            ts = float(parts[0])
            float(parts[2])
        except ValueError as exc:
            raise DatasetError(f"line {lineno}: bad timestamp: {exc}") from exc
        records.append(FrameRecord(ts, parts[1], parts[3]))
    return records


def serialize_association(records: list[FrameRecord]) -> str:
    lines = [f"{r.timestamp!r} {r.rgb_path} {r.timestamp!r} {r.depth_path}"
             for r in records]
    return "\n".join(lines) + ("\n" if lines else "")


def quaternion_to_rotation(qx: float, qy: float, qz: float, qw: float) -> np.ndarray:
    """Unit quaternion (x, y, z, w) to a 3x3 rotation matrix."""
    n = np.sqrt(qx * qx + qy * qy + qz * qz + qw * qw)
    if abs(n - 1.0) > 1e-2:
        raise DatasetError(f"quaternion norm {n} too far from 1")
    qx, qy, qz, qw = qx / n, qy / n, qz / n, qw / n
    return np.array([
        [1 - 2 * (qy * qy + qz * qz), 2 * (qx * qy - qz * qw), 2 * (qx * qz + qy * qw)],
        [2 * (qx * qy + qz * qw), 1 - 2 * (qx * qx + qz * qz), 2 * (qy * qz - qx * qw)],
        [2 * (qx * qz - qy * qw), 2 * (qy * qz + qx * qw), 1 - 2 * (qx * qx + qy * qy)],
    ])


def parse_trajectory(text: str) -> list[TrajectoryEntry]:
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 8:
            raise DatasetError(
                f"line {lineno}: expected 8 fields 'ts tx ty tz qx qy qz qw'")
        try:
            vals = [float(p) for p in parts]
        except ValueError as exc:
            raise DatasetError(f"line {lineno}: {exc}") from exc
        ts, tx, ty, tz, qx, qy, qz, qw = vals
        rot = quaternion_to_rotation(qx, qy, qz, qw)
        entries.append(TrajectoryEntry(ts, Pose(rot, np.array([tx, ty, tz]))))
    return entries


def load_depth(raw: np.ndarray, scale: float = DEFAULT_DEPTH_SCALE) -> np.ndarray:
    """Convert 16-bit depth counts to meters; zero stays zero (invalid)."""
    if scale <= 0:
        raise ValueError("depth scale must be positive")
    raw = np.asarray(raw)
    if raw.dtype != np.uint16:
        raise DatasetError(f"depth image must be 16-bit, got {raw.dtype}")
    return raw.astype(np.float64) / scale


def load_intensity(rgb: np.ndarray) -> np.ndarray:
    """8-bit RGB to luma intensity in [0, 1] (BT.601 weights)."""
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise DatasetError(f"expected HxWx3 image, got shape {rgb.shape}")
    r, g, b = (rgb[:, :, i].astype(np.float64) for i in range(3))
    return (LUMA[0] * r + LUMA[1] * g + LUMA[2] * b) / 255.0


def read_depth_png(path: str | Path, scale: float = DEFAULT_DEPTH_SCALE) -> np.ndarray:
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise DatasetError(f"cannot read depth image {path}")
    return load_depth(raw, scale)


def read_intensity_png(path: str | Path) -> np.ndarray:
    img = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if img is None:
        raise DatasetError(f"cannot read color image {path}")
    rgb = cv2.cvtColor(img, cv2.COLOR_BGR2RGB)
    return load_intensity(rgb)


def load_frame(root: str | Path, record: FrameRecord,
               scale: float = DEFAULT_DEPTH_SCALE) -> Frame:
    root = Path(root)
    return Frame(timestamp=record.timestamp,
                 intensity=read_intensity_png(root / record.rgb_path),
                 depth=read_depth_png(root / record.depth_path, scale),
                 kind="live")


def associate_poses(records: list[FrameRecord],
                    trajectory: list[TrajectoryEntry],
                    max_dt: float = 0.02,
                    ) -> tuple[list[tuple[FrameRecord, Pose]], int]:
    """Pair each record with its nearest-timestamp pose.

    Records further than max_dt from every trajectory entry are dropped;
    the count of dropped records is returned alongside the pairs.
    """
    if not trajectory:
        raise DatasetError("empty trajectory")
    times = [e.timestamp for e in trajectory]
    pairs = []
    dropped = 0
    for rec in records:
        i = bisect.bisect_left(times, rec.timestamp)
        best = None
        for j in (i - 1, i):
            if 0 <= j < len(times):
                dt = abs(times[j] - rec.timestamp)
                if best is None or dt < best[0]:
                    best = (dt, j)
        if best[0] > max_dt:
            dropped += 1
            continue
        pairs.append((rec, trajectory[best[1]].pose))
    return pairs, dropped
