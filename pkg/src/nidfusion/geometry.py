"""Rigid poses, pinhole intrinsics and frame containers.

Conventions: right-handed camera frame with +z forward, image origin at the
top-left. Poses map camera coordinates into the map frame. Pixel coordinates
are real-valued; rounding to integer pixels happens only at rasterization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_ORTHO_TOL = 1e-9


@dataclass(frozen=True)
class Pose:
    """Rigid transform: x_map = rotation @ x_cam + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if r.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {r.shape}")
        if not np.allclose(r.T @ r, np.eye(3), atol=1e-8):
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > 1e-8:
            raise ValueError("rotation determinant is not +1")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    def compose(self, other: "Pose") -> "Pose":
        """Matrix product self @ other (other applied first)."""
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.translation + self.translation)

    def inverse(self) -> "Pose":
        rt = self.rotation.T
        return Pose(rt, -rt @ self.translation)


def se3_apply(pose: Pose, point: np.ndarray) -> np.ndarray:
    """Apply a pose to one point (3,) or a stack of points (N, 3)."""
    p = np.asarray(point, dtype=np.float64)
    if p.ndim == 1:
        return pose.rotation @ p + pose.translation
    return p @ pose.rotation.T + pose.translation


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")


def project(intr: Intrinsics, p_cam: np.ndarray) -> tuple[float, float] | None:
    """Project a camera-frame point to (u, v); None when out of view.

    Non-positive depth is reported as out-of-view, not as an error.
    """
    x, y, z = np.asarray(p_cam, dtype=np.float64)
    if z <= 0:
        return None
    u = intr.fx * x / z + intr.cx
    v = intr.fy * y / z + intr.cy
    if not (0 <= u < intr.width and 0 <= v < intr.height):
        return None
    return (u, v)


def backproject(intr: Intrinsics, pixel: tuple[float, float],
                depth: float) -> np.ndarray:
    """Lift a pixel with metric depth to a camera-frame point."""
    if depth <= 0:
        raise ValueError(f"depth must be positive, got {depth}")
    u, v = pixel
    return np.array([(u - intr.cx) * depth / intr.fx,
                     (v - intr.cy) * depth / intr.fy,
                     depth])


@dataclass(frozen=True)
class Frame:
    """One intensity+depth image pair; depth 0 marks invalid pixels."""

    timestamp: float
    intensity: np.ndarray
    depth: np.ndarray
    kind: str = "live"

    def __post_init__(self):
        inten = np.asarray(self.intensity, dtype=np.float64)
        depth = np.asarray(self.depth, dtype=np.float64)
        if inten.shape != depth.shape or inten.ndim != 2:
            raise ValueError("intensity and depth must be 2d arrays of equal shape")
        if self.kind not in ("live", "predicted"):
            raise ValueError(f"unknown frame kind {self.kind!r}")
        if inten.size and (inten.min() < -1e-9 or inten.max() > 1 + 1e-9):
            raise ValueError("intensity values must lie in [0, 1]")
        if depth.size and depth.min() < 0:
            raise ValueError("depth values must be nonnegative")
        object.__setattr__(self, "intensity", inten)
        object.__setattr__(self, "depth", depth)

    @property
    def valid(self) -> np.ndarray:
        return self.depth > 0
