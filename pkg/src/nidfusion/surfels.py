"""Surfel map: storage, active/inactive partition, fusion and PLY export.

Surfels are stored structure-of-arrays for vectorized fusion and rendering.
A surfel is active when it was last updated within the current time window;
older surfels go inactive until a local loop closure reactivates them.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .geometry import Frame, Intrinsics, Pose, se3_apply

if TYPE_CHECKING:  # pragma: no cover
    from .renderer import Rendering

INITIAL_CONFIDENCE = 1.0
# Clamp for grazing-angle radius inflation. Kept high so splat footprints
# stay uniform (~sqrt(2) px at creation scale) and predictions stay sharp.
_MIN_VIEW_COS = 0.75


@dataclass(frozen=True)
class FusionStats:
    associated: int
    added: int


class SurfelMap:
    def __init__(self):
        self.positions = np.zeros((0, 3), dtype=np.float64)
        self.normals = np.zeros((0, 3), dtype=np.float64)
        self.radii = np.zeros(0, dtype=np.float64)
        self.intensities = np.zeros(0, dtype=np.float64)
        self.confidences = np.zeros(0, dtype=np.float64)
        self.last_seen = np.zeros(0, dtype=np.int64)
        self.frame_counter = 0

    def __len__(self) -> int:
        return self.positions.shape[0]

    def add(self, positions, normals, radii, intensities, now: int) -> int:
        n = positions.shape[0]
        self.positions = np.concatenate([self.positions, positions])
        self.normals = np.concatenate([self.normals, normals])
        self.radii = np.concatenate([self.radii, radii])
        self.intensities = np.concatenate([self.intensities, intensities])
        self.confidences = np.concatenate(
            [self.confidences, np.full(n, INITIAL_CONFIDENCE)])
        self.last_seen = np.concatenate(
            [self.last_seen, np.full(n, now, dtype=np.int64)])
        return n

    def partition(self, now: int, window: int) -> tuple[np.ndarray, np.ndarray]:
        """Ids of active (updated within `window` frames) and inactive surfels."""
        if window < 1:
            raise ValueError("window must be >= 1")
        active = (now - self.last_seen) < window
        ids = np.arange(len(self), dtype=np.int64)
        return ids[active], ids[~active]

    def reactivate(self, visible_ids: np.ndarray, now: int) -> int:
        """Mark inactive surfels as freshly seen; duplicate ids count once."""
        ids = np.unique(np.asarray(visible_ids, dtype=np.int64))
        self.last_seen[ids] = now
        return int(ids.size)

    def write_ply(self, path: str | Path) -> None:
        """ASCII PLY with position, normal, radius, intensity, confidence."""
        lines = [
            "ply",
            "format ascii 1.0",
            f"element vertex {len(self)}",
            "property float x", "property float y", "property float z",
            "property float nx", "property float ny", "property float nz",
            "property float radius",
            "property float intensity",
            "property float confidence",
            "end_header",
        ]
        for i in range(len(self)):
            p = self.positions[i]
            n = self.normals[i]
            lines.append(
                f"{p[0]!r} {p[1]!r} {p[2]!r} {n[0]!r} {n[1]!r} {n[2]!r} "
                f"{self.radii[i]!r} {self.intensities[i]!r} {self.confidences[i]!r}")
        Path(path).write_text("\n".join(lines) + "\n")


def backproject_map(depth: np.ndarray, intr: Intrinsics) -> np.ndarray:
    """Camera-frame point per pixel, (H, W, 3); invalid depth gives z=0."""
    h, w = depth.shape
    u = np.arange(w, dtype=np.float64)
    v = np.arange(h, dtype=np.float64)
    uu, vv = np.meshgrid(u, v)
    pts = np.empty((h, w, 3), dtype=np.float64)
    pts[:, :, 0] = (uu - intr.cx) * depth / intr.fx
    pts[:, :, 1] = (vv - intr.cy) * depth / intr.fy
    pts[:, :, 2] = depth
    return pts


def compute_normals(points: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Per-pixel camera-frame normals from central differences.

    Normals are oriented towards the camera (n . p < 0). Pixels without four
    valid neighbours fall back to the reverse viewing direction, so every
    depth-valid pixel has a usable normal.
    """
    h, w, _ = points.shape
    normals = np.zeros_like(points)
    dpdu = np.zeros_like(points)
    dpdv = np.zeros_like(points)
    dpdu[:, 1:-1] = points[:, 2:] - points[:, :-2]
    dpdv[1:-1, :] = points[2:, :] - points[:-2, :]
    n = np.cross(dpdu, dpdv)
    nrm = np.linalg.norm(n, axis=2)
    ok = np.zeros((h, w), dtype=bool)
    ok[1:-1, 1:-1] = (valid[1:-1, 2:] & valid[1:-1, :-2]
                      & valid[2:, 1:-1] & valid[:-2, 1:-1])
    ok &= valid & (nrm > 1e-12)
    normals[ok] = n[ok] / nrm[ok][:, None]
    # orient towards the camera
    flip = (np.sum(normals * points, axis=2) > 0) & ok
    normals[flip] = -normals[flip]
    # fallback: unit vector from the point back to the camera origin
    fb = valid & ~ok
    pn = np.linalg.norm(points, axis=2)
    fb &= pn > 0
    normals[fb] = -points[fb] / pn[fb][:, None]
    return normals


def fuse_frame(map_: SurfelMap, frame: Frame, pose: Pose, intr: Intrinsics,
               predicted: "Rendering", eps_d: float = 0.05,
               eps_n_deg: float = 30.0, stride: int = 1,
               now: int | None = None) -> FusionStats:
    """Fuse a live frame into the map using a prediction for association.

    A live pixel associates with the surfel splatted at the same pixel of the
    prediction when depths agree within eps_d (relative) and normals agree
    within eps_n_deg; associated surfels take a confidence-weighted average.
    Unmatched valid pixels spawn new surfels.
    """
    if frame.kind != "live":
        raise ValueError("can only fuse live frames")
    if frame.depth.shape != (intr.height, intr.width):
        raise ValueError("frame size does not match intrinsics")
    if predicted.depth.shape != frame.depth.shape:
        raise ValueError("prediction size does not match frame")
    now = map_.frame_counter if now is None else now
    h, w = frame.depth.shape

    valid = frame.depth > 0
    if stride > 1:
        sub = np.zeros((h, w), dtype=bool)
        sub[::stride, ::stride] = True
        valid &= sub

    pts_cam = backproject_map(frame.depth, intr)
    normals_cam = compute_normals(pts_cam, frame.depth > 0)
    pts_map = se3_apply(pose, pts_cam.reshape(-1, 3)).reshape(h, w, 3)
    normals_map = normals_cam @ pose.rotation.T

    cos_eps = np.cos(np.deg2rad(eps_n_deg))
    cand = valid & (predicted.depth > 0)
    cand &= np.abs(frame.depth - predicted.depth) <= eps_d * frame.depth
    sid = predicted.ids[cand]
    agree = np.einsum("ij,ij->i", normals_map[cand], map_.normals[sid]) >= cos_eps
    assoc = np.zeros((h, w), dtype=bool)
    assoc[cand] = agree

    sid = predicted.ids[assoc]
    if sid.size:
        n_map = len(map_)
        k = np.bincount(sid, minlength=n_map).astype(np.float64)
        pos_sum = np.zeros((n_map, 3))
        nrm_sum = np.zeros((n_map, 3))
        int_sum = np.zeros(n_map)
        np.add.at(pos_sum, sid, pts_map[assoc])
        np.add.at(nrm_sum, sid, normals_map[assoc])
        np.add.at(int_sum, sid, frame.intensity[assoc])
        hit = k > 0
        c = map_.confidences[hit]
        tot = c + k[hit]
        map_.positions[hit] = (c[:, None] * map_.positions[hit]
                               + pos_sum[hit]) / tot[:, None]
        avg_n = c[:, None] * map_.normals[hit] + nrm_sum[hit]
        norms = np.linalg.norm(avg_n, axis=1)
        keep = norms > 1e-12
        upd = np.where(hit)[0][keep]
        map_.normals[upd] = avg_n[keep] / norms[keep][:, None]
        map_.intensities[hit] = (c * map_.intensities[hit] + int_sum[hit]) / tot
        map_.confidences[hit] = tot
        map_.last_seen[hit] = now

    fresh = valid & ~assoc
    added = 0
    if fresh.any():
        p_cam = pts_cam[fresh]
        n_cam = normals_cam[fresh]
        d = frame.depth[fresh]
        view_cos = np.abs(np.einsum("ij,ij->i", n_cam, p_cam)) \
            / np.linalg.norm(p_cam, axis=1)
        radii = d * np.sqrt(2.0) / intr.fx / np.clip(view_cos, _MIN_VIEW_COS, 1.0)
        added = map_.add(pts_map[fresh], normals_map[fresh], radii,
                         frame.intensity[fresh], now)

    map_.frame_counter = max(map_.frame_counter, now)
    return FusionStats(associated=int(assoc.sum()), added=added)
