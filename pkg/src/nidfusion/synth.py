"""Synthetic RGB-D sequence generation for tests and benchmarks.

Ray-casts analytic scenes (textured planes and spheres) along a scripted
camera path and writes the result in the dataset layout the pipeline
ingests: association file, trajectory file, 8-bit RGB PNGs and 16-bit depth
PNGs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np
import yaml

from .dataset import DEFAULT_DEPTH_SCALE
from .geometry import Intrinsics, Pose


@dataclass(frozen=True)
class Plane:
    point: np.ndarray
    normal: np.ndarray       # unit
    axis_u: np.ndarray       # in-plane texture axes, unit
    axis_v: np.ndarray
    half_extent: tuple[float, float]
    texture: str = "sine"    # sine | checker | flat
    cell: float = 0.25
    shades: tuple[float, float] = (0.2, 0.9)


@dataclass(frozen=True)
class Sphere:
    center: np.ndarray
    radius: float
    texture: str = "sine"
    cell: float = 0.5
    shades: tuple[float, float] = (0.2, 0.9)


@dataclass(frozen=True)
class SceneSpec:
    intrinsics: Intrinsics
    planes: list[Plane] = field(default_factory=list)
    spheres: list[Sphere] = field(default_factory=list)
    fps: float = 30.0
    noise_sigma: float = 0.0   # depth noise stddev per meter of depth
    seed: int = 0


def _texture_value(kind: str, a: np.ndarray, b: np.ndarray, cell: float,
                   shades: tuple[float, float]) -> np.ndarray:
    lo, hi = shades
    if kind == "flat":
        return np.full_like(a, (lo + hi) / 2.0)
    if kind == "checker":
        parity = (np.floor(a / cell) + np.floor(b / cell)) % 2
        return np.where(parity == 0, lo, hi)
    # smooth sinusoidal texture: richer histograms than a 2-level checker
    mid = (lo + hi) / 2.0
    amp = (hi - lo) / 2.0
    return mid + amp * np.sin(2 * np.pi * a / cell) * np.sin(2 * np.pi * b / cell)


def render_scene(scene: SceneSpec, pose: Pose) -> tuple[np.ndarray, np.ndarray]:
    """Analytic depth (meters) and intensity for one camera pose.

    Depth is the camera-frame z of the nearest hit; pixels that miss every
    primitive get depth 0 and intensity 0.
    """
    intr = scene.intrinsics
    h, w = intr.height, intr.width
    uu, vv = np.meshgrid(np.arange(w, dtype=np.float64),
                         np.arange(h, dtype=np.float64))
    # unnormalized ray directions with unit z: ray parameter == camera depth
    d_cam = np.stack([(uu - intr.cx) / intr.fx,
                      (vv - intr.cy) / intr.fy,
                      np.ones_like(uu)], axis=-1)
    d_world = d_cam.reshape(-1, 3) @ pose.rotation.T
    origin = pose.translation

    best_t = np.full(h * w, np.inf)
    best_i = np.zeros(h * w)

    for pl in scene.planes:
        denom = d_world @ pl.normal
        num = (pl.point - origin) @ pl.normal
        with np.errstate(divide="ignore", invalid="ignore"):
            t = num / denom
        hit = np.isfinite(t) & (t > 1e-6)
        t = np.where(hit, t, 0.0)
        x = origin + t[:, None] * d_world
        rel = x - pl.point
        a = rel @ pl.axis_u
        b = rel @ pl.axis_v
        hit &= (np.abs(a) <= pl.half_extent[0]) & (np.abs(b) <= pl.half_extent[1])
        hit &= t < best_t
        best_t[hit] = t[hit]
        best_i[hit] = _texture_value(pl.texture, a, b, pl.cell, pl.shades)[hit]

    for sp in scene.spheres:
        oc = origin - sp.center
        bq = d_world @ oc
        cq = oc @ oc - sp.radius ** 2
        aq = np.einsum("ij,ij->i", d_world, d_world)
        disc = bq * bq - aq * cq
        ok = disc >= 0
        sq = np.sqrt(np.where(ok, disc, 0.0))
        t1 = (-bq - sq) / aq
        t2 = (-bq + sq) / aq
        t = np.where(t1 > 1e-6, t1, t2)
        hit = ok & (t > 1e-6) & (t < best_t)
        x = origin + t[:, None] * d_world
        rel = x - sp.center
        az = np.arctan2(rel[:, 1], rel[:, 0])
        el = np.arcsin(np.clip(rel[:, 2] / sp.radius, -1, 1))
        tex = _texture_value(sp.texture, az * sp.radius, el * sp.radius,
                             sp.cell, sp.shades)
        best_t[hit] = t[hit]
        best_i[hit] = tex[hit]

    depth = np.where(np.isfinite(best_t), best_t, 0.0).reshape(h, w)
    intensity = np.clip(best_i, 0.0, 1.0).reshape(h, w)
    intensity[depth == 0] = 0.0
    return depth, intensity


def look_at(position: np.ndarray, target: np.ndarray,
            up: np.ndarray | None = None) -> Pose:
    """Camera pose at `position` with +z towards `target`, image-y downward."""
    up = np.array([0.0, 1.0, 0.0]) if up is None else np.asarray(up, float)
    z = target - position
    z = z / np.linalg.norm(z)
    down = -up
    y = down - (down @ z) * z
    y = y / np.linalg.norm(y)
    x = np.cross(y, z)
    return Pose(np.stack([x, y, z], axis=1), np.asarray(position, float))


def orbit_dwell_path(center: np.ndarray, radius: float, height: float,
                     segments: list[dict]) -> list[Pose]:
    """Camera poses on a horizontal circle looking at `center`.

    Segments: {kind: "arc", frames: N, start_deg: a, end_deg: b} sweeps the
    azimuth; {kind: "dwell", frames: N} repeats the previous pose.
    """
    poses: list[Pose] = []
    angle = None
    for seg in segments:
        n = int(seg["frames"])
        if seg["kind"] == "arc":
            a0 = np.deg2rad(float(seg["start_deg"]))
            a1 = np.deg2rad(float(seg["end_deg"]))
            for ang in np.linspace(a0, a1, n, endpoint=False):
                pos = center + np.array([radius * np.cos(ang), height,
                                         radius * np.sin(ang)])
                poses.append(look_at(pos, center))
            angle = a1
        elif seg["kind"] == "dwell":
            if not poses:
                pos = center + np.array([radius, height, 0.0])
                poses.append(look_at(pos, center))
                n -= 1
            poses.extend([poses[-1]] * n)
        else:
            raise ValueError(f"unknown path segment kind {seg['kind']!r}")
    return poses


def _rotation_to_quaternion(r: np.ndarray) -> tuple[float, float, float, float]:
    """Rotation matrix to (qx, qy, qz, qw)."""
    tr = np.trace(r)
    if tr > 0:
        s = np.sqrt(tr + 1.0) * 2
        qw = 0.25 * s
        qx = (r[2, 1] - r[1, 2]) / s
        qy = (r[0, 2] - r[2, 0]) / s
        qz = (r[1, 0] - r[0, 1]) / s
    elif r[0, 0] > r[1, 1] and r[0, 0] > r[2, 2]:
        s = np.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2]) * 2
        qw = (r[2, 1] - r[1, 2]) / s
        qx = 0.25 * s
        qy = (r[0, 1] + r[1, 0]) / s
        qz = (r[0, 2] + r[2, 0]) / s
    elif r[1, 1] > r[2, 2]:
        s = np.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2]) * 2
        qw = (r[0, 2] - r[2, 0]) / s
        qx = (r[0, 1] + r[1, 0]) / s
        qy = 0.25 * s
        qz = (r[1, 2] + r[2, 1]) / s
    else:
        s = np.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1]) * 2
        qw = (r[1, 0] - r[0, 1]) / s
        qx = (r[0, 2] + r[2, 0]) / s
        qy = (r[1, 2] + r[2, 1]) / s
        qz = 0.25 * s
    return qx, qy, qz, qw


def _scene_from_dict(d: dict) -> tuple[SceneSpec, list[Pose]]:
    intr = Intrinsics(**d["intrinsics"])
    planes = []
    for p in d.get("planes", []):
        normal = np.asarray(p["normal"], float)
        normal = normal / np.linalg.norm(normal)
        au = np.asarray(p["axis_u"], float)
        au = au - (au @ normal) * normal
        au = au / np.linalg.norm(au)
        av = np.cross(normal, au)
        planes.append(Plane(np.asarray(p["point"], float), normal, au, av,
                            tuple(p["half_extent"]),
                            p.get("texture", "sine"),
                            float(p.get("cell", 0.25)),
                            tuple(p.get("shades", (0.2, 0.9)))))
    spheres = [Sphere(np.asarray(s["center"], float), float(s["radius"]),
                      s.get("texture", "sine"), float(s.get("cell", 0.5)),
                      tuple(s.get("shades", (0.2, 0.9))))
               for s in d.get("spheres", [])]
    scene = SceneSpec(intr, planes, spheres,
                      fps=float(d.get("fps", 30.0)),
                      noise_sigma=float(d.get("noise_sigma", 0.0)),
                      seed=int(d.get("seed", 0)))
    path = d["path"]
    poses = orbit_dwell_path(np.asarray(path["center"], float),
                             float(path["radius"]), float(path["height"]),
                             path["segments"])
    return scene, poses


def synthesize_sequence(spec: dict | str | Path, out_dir: str | Path,
                        depth_scale: float = DEFAULT_DEPTH_SCALE) -> Path:
    """Generate a dataset directory from a scene spec (dict or YAML path).

    Writes rgb/*.png, depth/*.png, associations.txt and groundtruth.txt and
    returns the dataset root. Optional Gaussian depth noise grows linearly
    with depth (sigma = noise_sigma * d).
    """
    if not isinstance(spec, dict):
        spec = yaml.safe_load(Path(spec).read_text())
    scene, poses = _scene_from_dict(spec)
    out = Path(out_dir)
    (out / "rgb").mkdir(parents=True, exist_ok=True)
    (out / "depth").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(scene.seed)

    assoc_lines = ["# timestamp rgb timestamp depth"]
    traj_lines = ["# timestamp tx ty tz qx qy qz qw"]
    for i, pose in enumerate(poses):
        ts = i / scene.fps
        depth, intensity = render_scene(scene, pose)
        if scene.noise_sigma > 0:
            noise = rng.normal(0.0, 1.0, depth.shape) * scene.noise_sigma * depth
            depth = np.where(depth > 0, np.maximum(depth + noise, 1e-3), 0.0)
        raw = np.clip(np.round(depth * depth_scale), 0, 65535).astype(np.uint16)
        gray = np.clip(np.round(intensity * 255), 0, 255).astype(np.uint8)
        rgb = np.repeat(gray[:, :, None], 3, axis=2)
        name = f"{ts:.6f}.png"
        cv2.imwrite(str(out / "rgb" / name), rgb)
        cv2.imwrite(str(out / "depth" / name), raw)
        assoc_lines.append(f"{ts:.6f} rgb/{name} {ts:.6f} depth/{name}")
        qx, qy, qz, qw = _rotation_to_quaternion(pose.rotation)
        t = pose.translation
        traj_lines.append(f"{ts:.6f} {t[0]:.9f} {t[1]:.9f} {t[2]:.9f} "
                          f"{qx:.9f} {qy:.9f} {qz:.9f} {qw:.9f}")
    (out / "associations.txt").write_text("\n".join(assoc_lines) + "\n")
    (out / "groundtruth.txt").write_text("\n".join(traj_lines) + "\n")
    intr = scene.intrinsics
    (out / "intrinsics.txt").write_text(
        f"fx={intr.fx!r}\nfy={intr.fy!r}\ncx={intr.cx!r}\ncy={intr.cy!r}\n"
        f"width={intr.width}\nheight={intr.height}\n")
    return out
