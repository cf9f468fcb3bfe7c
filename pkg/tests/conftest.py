import numpy as np
import pytest

from nidfusion.geometry import Intrinsics
from nidfusion.synth import synthesize_sequence


def scene_spec(width=160, height=120, segments=None, noise_sigma=0.0, seed=0):
    """Desk-scale room: textured floor, back wall and a sphere."""
    if segments is None:
        segments = [{"kind": "dwell", "frames": 10}]
    return {
        "intrinsics": dict(fx=width / 2.0, fy=width / 2.0,
                           cx=width / 2.0, cy=height / 2.0,
                           width=width, height=height),
        "fps": 30.0,
        "noise_sigma": noise_sigma,
        "seed": seed,
        "planes": [
            {"point": [0, 0, 0], "normal": [0, 1, 0], "axis_u": [1, 0, 0],
             "half_extent": [4, 4], "texture": "sine", "cell": 2.0},
            {"point": [0, 1.0, -2.5], "normal": [0, 0, 1], "axis_u": [1, 0, 0],
             "half_extent": [4, 2], "texture": "sine", "cell": 1.5},
            {"point": [2.5, 1.0, 0], "normal": [-1, 0, 0], "axis_u": [0, 0, 1],
             "half_extent": [4, 2], "texture": "sine", "cell": 1.7},
            {"point": [-2.5, 1.0, 0], "normal": [1, 0, 0], "axis_u": [0, 0, 1],
             "half_extent": [4, 2], "texture": "sine", "cell": 1.3},
        ],
        "spheres": [{"center": [0, 0.5, 0], "radius": 0.5, "cell": 1.2}],
        "path": {"center": [0, 0.5, 0], "radius": 2.0, "height": 1.2,
                 "segments": segments},
    }


def intrinsics_of(spec) -> Intrinsics:
    return Intrinsics(**spec["intrinsics"])


@pytest.fixture(scope="session")
def dwell_ds(tmp_path_factory):
    """12 identical noiseless frames."""
    spec = scene_spec(segments=[{"kind": "dwell", "frames": 12}])
    root = synthesize_sequence(spec, tmp_path_factory.mktemp("dwell"))
    return root, intrinsics_of(spec)


@pytest.fixture(scope="session")
def orbit_ds(tmp_path_factory):
    """60-frame orbit with a dwell tail at 160x120."""
    spec = scene_spec(segments=[
        {"kind": "arc", "frames": 40, "start_deg": 0, "end_deg": 90},
        {"kind": "dwell", "frames": 20},
    ])
    root = synthesize_sequence(spec, tmp_path_factory.mktemp("orbit"))
    return root, intrinsics_of(spec)


@pytest.fixture(scope="session")
def orbit300_ds(tmp_path_factory):
    """300-frame orbit with a stationary dwell segment at 320x240."""
    spec = scene_spec(width=320, height=240, segments=[
        {"kind": "arc", "frames": 110, "start_deg": 0, "end_deg": 120},
        {"kind": "dwell", "frames": 80},
        {"kind": "arc", "frames": 110, "start_deg": 120, "end_deg": 240},
    ])
    root = synthesize_sequence(spec, tmp_path_factory.mktemp("orbit300"))
    return root, intrinsics_of(spec)


@pytest.fixture(scope="session")
def stationary50_ds(tmp_path_factory):
    """50 identical noiseless frames at 160x120."""
    spec = scene_spec(segments=[{"kind": "dwell", "frames": 50}])
    root = synthesize_sequence(spec, tmp_path_factory.mktemp("stationary"))
    return root, intrinsics_of(spec)
