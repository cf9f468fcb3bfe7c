"""Point-splat renderer: predicted intensity/depth views of the surfel map.

Surfels are rasterized as filled discs with nearest-depth-wins visibility.
Splatting iterates surfels in ascending id with strict depth replacement, so
equal-depth ties go to the lower id and output is reproducible bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .geometry import Frame, Intrinsics, Pose
from .surfels import SurfelMap

DEFAULT_MAX_SPLAT_PX = 16.0


@dataclass(frozen=True)
class Rendering:
    depth: np.ndarray      # (H, W), 0 = nothing rendered
    intensity: np.ndarray  # (H, W)
    ids: np.ndarray        # (H, W) int64, -1 = nothing rendered

    def to_frame(self, timestamp: float = 0.0) -> Frame:
        return Frame(timestamp, self.intensity, self.depth, kind="predicted")


DEPTH_TIE_TOL = 1e-4  # depths closer than this tie; lower id wins


@njit(cache=True)
def _splat_discs(us, vs, zs, r_px, intens, ids, centers, normals,
                 fx, fy, cx, cy, width, height, tie_tol,
                 depth_buf, inten_buf, id_buf):  # pragma: no cover
    for k in range(us.shape[0]):
        u0 = int(np.round(us[k]))
        v0 = int(np.round(vs[k]))
        r = r_px[k]
        ri = int(np.ceil(r))
        rr = r * r
        z = zs[k]
        nx, ny, nz = normals[k, 0], normals[k, 1], normals[k, 2]
        ndotc = (nx * centers[k, 0] + ny * centers[k, 1]
                 + nz * centers[k, 2])
        for dv in range(-ri, ri + 1):
            v = v0 + dv
            if v < 0 or v >= height:
                continue
            for du in range(-ri, ri + 1):
                if du * du + dv * dv > rr:
                    continue
                u = u0 + du
                if u < 0 or u >= width:
                    continue
                # depth of the oriented disc plane along this pixel's ray;
                # falls back to the center depth for degenerate geometry
                denom = (nx * (u - cx) / fx + ny * (v - cy) / fy + nz)
                d = z
                if abs(denom) > 1e-9:
                    t = ndotc / denom
                    if 0.5 * z <= t <= 2.0 * z:
                        d = t
                d0 = depth_buf[v, u]
                if d0 <= 0.0 or d < d0 - tie_tol:
                    depth_buf[v, u] = d
                    inten_buf[v, u] = intens[k]
                    id_buf[v, u] = ids[k]


def _camera_frame_splats(map_: SurfelMap, ids: np.ndarray, pose: Pose,
                         intr: Intrinsics, r_max: float):
    """Transform, cull and project the given surfels; returns splat arrays."""
    ids = np.sort(np.asarray(ids, dtype=np.int64))
    if ids.size == 0:
        z = np.zeros(0)
        return ids, z, z, z, z, np.zeros((0, 3)), np.zeros((0, 3))
    inv = pose.inverse()
    p_cam = map_.positions[ids] @ inv.rotation.T + inv.translation
    n_cam = map_.normals[ids] @ inv.rotation.T
    front = (p_cam[:, 2] > 0) & (np.einsum("ij,ij->i", n_cam, p_cam) <= 0)
    ids = ids[front]
    p_cam = p_cam[front]
    n_cam = n_cam[front]
    z = p_cam[:, 2]
    u = intr.fx * p_cam[:, 0] / z + intr.cx
    v = intr.fy * p_cam[:, 1] / z + intr.cy
    r_px = np.clip(intr.fx * map_.radii[ids] / z, 1.0, r_max)
    return ids, u, v, z, r_px, p_cam, n_cam


def predict_view(map_: SurfelMap, ids: np.ndarray, pose: Pose,
                 intr: Intrinsics, r_max: float = DEFAULT_MAX_SPLAT_PX,
                 ) -> Rendering:
    """Render the given surfels at a pose; untouched pixels stay invalid."""
    depth_buf = np.zeros((intr.height, intr.width), dtype=np.float64)
    inten_buf = np.zeros((intr.height, intr.width), dtype=np.float64)
    id_buf = np.full((intr.height, intr.width), -1, dtype=np.int64)
    ids, u, v, z, r_px, p_cam, n_cam = _camera_frame_splats(
        map_, ids, pose, intr, r_max)
    if ids.size:
        _splat_discs(u, v, z, r_px, map_.intensities[ids], ids, p_cam, n_cam,
                     intr.fx, intr.fy, intr.cx, intr.cy,
                     intr.width, intr.height, DEPTH_TIE_TOL,
                     depth_buf, inten_buf, id_buf)
    return Rendering(depth_buf, inten_buf, id_buf)


def visibility_ids(map_: SurfelMap, ids: np.ndarray, pose: Pose,
                   intr: Intrinsics, eps_d: float = 0.05,
                   r_max: float = DEFAULT_MAX_SPLAT_PX) -> np.ndarray:
    """Ids whose splat center is in view and agrees with the depth buffer."""
    rendering = predict_view(map_, ids, pose, intr, r_max)
    ids, u, v, z, _, _, _ = _camera_frame_splats(map_, ids, pose, intr, r_max)
    if ids.size == 0:
        return ids
    ui = np.round(u).astype(np.int64)
    vi = np.round(v).astype(np.int64)
    inb = (ui >= 0) & (ui < intr.width) & (vi >= 0) & (vi < intr.height)
    vis = np.zeros(ids.size, dtype=bool)
    buf = rendering.depth[vi[inb], ui[inb]]
    vis[inb] = np.abs(z[inb] - buf) <= eps_d * z[inb]
    return ids[vis]
