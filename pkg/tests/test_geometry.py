import numpy as np
import pytest

from nidfusion.geometry import (Frame, Intrinsics, Pose, backproject, project,
                                se3_apply)


def random_rotation(rng):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    x, y, z, w = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def random_pose(rng):
    return Pose(random_rotation(rng), rng.normal(scale=2.0, size=3))


INTR = Intrinsics(fx=100.0, fy=100.0, cx=50.0, cy=50.0, width=101, height=101)


class TestPose:
    def test_identity_apply(self):
        assert np.allclose(se3_apply(Pose.identity(), [1, 2, 3]), [1, 2, 3])

    def test_pure_translation(self):
        p = Pose(np.eye(3), [0, 0, 1])
        assert np.allclose(se3_apply(p, [0, 0, 0]), [0, 0, 1])

    def test_rotation_90deg_about_z(self):
        rz = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        got = se3_apply(Pose(rz, np.zeros(3)), [1, 0, 0])
        assert np.allclose(got, [0, 1, 0], atol=1e-12)

    def test_compose_inverse_is_identity(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            p = random_pose(rng)
            ident = p.compose(p.inverse())
            assert np.allclose(ident.rotation, np.eye(3), atol=1e-9)
            assert np.allclose(ident.translation, 0, atol=1e-9)

    def test_rotation_orthonormal_invariant(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            p = random_pose(rng)
            assert np.allclose(p.rotation.T @ p.rotation, np.eye(3), atol=1e-9)
            assert abs(np.linalg.det(p.rotation) - 1) < 1e-9

    def test_rejects_non_rotation(self):
        with pytest.raises(ValueError):
            Pose(np.eye(3) * 2.0, np.zeros(3))

    def test_isometry_over_random_poses(self):
        rng = np.random.default_rng(11)
        a = rng.normal(size=3)
        b = rng.normal(size=3)
        d0 = np.linalg.norm(a - b)
        for _ in range(1000):
            p = random_pose(rng)
            d = np.linalg.norm(se3_apply(p, a) - se3_apply(p, b))
            assert abs(d - d0) < 1e-9


class TestProjection:
    def test_optical_axis_hits_principal_point(self):
        for z in (0.3, 1.0, 7.5):
            assert project(INTR, [0, 0, z]) == (INTR.cx, INTR.cy)

    def test_projection_arithmetic(self):
        u, v = project(INTR, [1, 0, 2])
        assert u == pytest.approx(100.0, abs=1e-12)

    def test_zero_depth_is_out_of_view(self):
        assert project(INTR, [1, 0, 0]) is None

    def test_outside_image_is_out_of_view(self):
        assert project(INTR, [10, 0, 1]) is None

    def test_backproject_principal_point(self):
        assert np.allclose(backproject(INTR, (INTR.cx, INTR.cy), 1.0), [0, 0, 1])

    def test_backproject_arithmetic(self):
        assert np.allclose(backproject(INTR, (100, 50), 2.0), [1, 0, 2])

    def test_backproject_rejects_nonpositive_depth(self):
        with pytest.raises(ValueError):
            backproject(INTR, (50, 50), 0.0)

    def test_round_trip_project_backproject(self):
        rng = np.random.default_rng(5)
        for _ in range(500):
            px = (rng.uniform(0, INTR.width - 1e-9),
                  rng.uniform(0, INTR.height - 1e-9))
            d = rng.uniform(0.1, 10.0)
            got = project(INTR, backproject(INTR, px, d))
            assert got is not None
            assert abs(got[0] - px[0]) < 1e-9 and abs(got[1] - px[1]) < 1e-9


class TestIntrinsicsAndFrame:
    def test_invalid_intrinsics(self):
        with pytest.raises(ValueError):
            Intrinsics(fx=-1, fy=1, cx=0, cy=0, width=10, height=10)
        with pytest.raises(ValueError):
            Intrinsics(fx=1, fy=1, cx=20, cy=0, width=10, height=10)

    def test_frame_validation(self):
        with pytest.raises(ValueError):
            Frame(0.0, np.zeros((4, 4)) + 2.0, np.zeros((4, 4)))
        with pytest.raises(ValueError):
            Frame(0.0, np.zeros((4, 4)), np.zeros((4, 4)) - 1.0)
        with pytest.raises(ValueError):
            Frame(0.0, np.zeros((4, 4)), np.zeros((4, 5)))

    def test_frame_valid_mask(self):
        d = np.zeros((2, 2))
        d[0, 0] = 1.5
        f = Frame(0.0, np.zeros((2, 2)), d)
        assert f.valid.sum() == 1
