import numpy as np
import pytest

from nidfusion.dataset import (DatasetError, FrameRecord, TrajectoryEntry,
                               associate_poses, load_depth, load_intensity,
                               parse_association, parse_trajectory,
                               quaternion_to_rotation, serialize_association)
from nidfusion.geometry import Pose


class TestAssociation:
    def test_comments_only_gives_empty_list(self):
        assert parse_association("# comment\n# another\n") == []

    def test_single_line(self):
        recs = parse_association(
            "1305031102.175304 rgb/a.png 1305031102.160407 depth/b.png\n")
        assert len(recs) == 1
        assert recs[0].timestamp == 1305031102.175304
        assert recs[0].rgb_path == "rgb/a.png"
        assert recs[0].depth_path == "depth/b.png"

    def test_malformed_line_names_line_number(self):
        with pytest.raises(DatasetError, match="line 2"):
            parse_association("1.0 a 1.0 b\n2.0 c d\n")

    def test_round_trip_is_identity_on_normalized_form(self):
        text = "# header\n1.5 rgb/x.png 1.5 depth/x.png\n2.5 rgb/y.png 2.5 depth/y.png\n"
        recs = parse_association(text)
        again = parse_association(serialize_association(recs))
        assert again == recs


class TestDepthAndIntensity:
    def test_tum_scale_convention(self):
        raw = np.array([[5000]], dtype=np.uint16)
        assert load_depth(raw, 5000.0)[0, 0] == 1.0

    def test_zero_stays_invalid(self):
        raw = np.array([[0]], dtype=np.uint16)
        assert load_depth(raw, 5000.0)[0, 0] == 0.0

    def test_max_count(self):
        raw = np.array([[65535]], dtype=np.uint16)
        assert load_depth(raw, 5000.0)[0, 0] == pytest.approx(13.107)

    def test_requires_16bit(self):
        with pytest.raises(DatasetError):
            load_depth(np.zeros((2, 2), dtype=np.uint8))

    def test_linearity_and_zero_preservation(self):
        rng = np.random.default_rng(0)
        raw = rng.integers(0, 65536, size=(16, 16)).astype(np.uint16)
        d1 = load_depth(raw, 5000.0)
        d2 = load_depth(raw, 2500.0)
        assert np.allclose(d2, 2 * d1)
        assert np.all((raw == 0) == (d1 == 0))

    def test_luma_white_black_red(self):
        white = np.full((1, 1, 3), 255, dtype=np.uint8)
        black = np.zeros((1, 1, 3), dtype=np.uint8)
        red = np.zeros((1, 1, 3), dtype=np.uint8)
        red[..., 0] = 255
        assert load_intensity(white)[0, 0] == pytest.approx(1.0)
        assert load_intensity(black)[0, 0] == 0.0
        assert load_intensity(red)[0, 0] == pytest.approx(0.299)


class TestTrajectory:
    def test_parse_and_quaternion(self):
        entries = parse_trajectory("# hdr\n0.0 1 2 3 0 0 0 1\n")
        assert len(entries) == 1
        assert np.allclose(entries[0].pose.rotation, np.eye(3))
        assert np.allclose(entries[0].pose.translation, [1, 2, 3])

    def test_quaternion_normalized_within_tolerance(self):
        # TUM files quantize to ~4 decimals; mild norm errors are accepted
        r = quaternion_to_rotation(0.0001, 0.0, 0.0, 1.0001)
        assert np.allclose(r.T @ r, np.eye(3), atol=1e-12)

    def test_quaternion_far_from_unit_rejected(self):
        with pytest.raises(DatasetError):
            quaternion_to_rotation(1.0, 1.0, 1.0, 1.0)

    def test_malformed_line(self):
        with pytest.raises(DatasetError, match="line 1"):
            parse_trajectory("0.0 1 2 3 0 0 1\n")


class TestAssociatePoses:
    def _traj(self, times):
        return [TrajectoryEntry(t, Pose(np.eye(3), [t, 0, 0])) for t in times]

    def test_exact_match(self):
        recs = [FrameRecord(1.0, "a", "b")]
        pairs, dropped = associate_poses(recs, self._traj([0.0, 1.0, 2.0]))
        assert dropped == 0
        assert pairs[0][1].translation[0] == 1.0

    def test_nearest_neighbor(self):
        recs = [FrameRecord(1.4, "a", "b")]
        pairs, _ = associate_poses(recs, self._traj([1.0, 1.5]), max_dt=1.0)
        assert pairs[0][1].translation[0] == 1.5

    def test_beyond_max_dt_dropped_and_counted(self):
        recs = [FrameRecord(5.0, "a", "b")]
        pairs, dropped = associate_poses(recs, self._traj([0.0, 1.0]), max_dt=0.02)
        assert pairs == [] and dropped == 1

    def test_empty_trajectory_errors(self):
        with pytest.raises(DatasetError):
            associate_poses([FrameRecord(0.0, "a", "b")], [])
