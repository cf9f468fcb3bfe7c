import numpy as np
import pytest

from nidfusion.geometry import Frame
from nidfusion.nid import NidScore
from nidfusion.policy import (PolicyState, REASON_ABOVE, REASON_BELOW,
                              REASON_LOOP, REASON_LOW_SUPPORT, VERDICT_FUSE,
                              VERDICT_SKIP, advance, decide, detect_local_loop)


def score(combined=0.5, low_support=False):
    return NidScore(combined, combined, combined, 1000, low_support)


class TestDecide:
    def test_above_threshold_fuses(self):
        assert decide(score(0.95), 0.9, False) == (VERDICT_FUSE, REASON_ABOVE)

    def test_loop_event_overrides_low_nid(self):
        assert decide(score(0.5), 0.9, True) == (VERDICT_FUSE, REASON_LOOP)

    def test_below_threshold_skips(self):
        assert decide(score(0.5), 0.9, False) == (VERDICT_SKIP, REASON_BELOW)

    def test_threshold_is_inclusive(self):
        assert decide(score(0.9), 0.9, False)[0] == VERDICT_FUSE

    def test_low_support_fuses(self):
        verdict, reason = decide(score(0.0, low_support=True), 0.9, False)
        assert (verdict, reason) == (VERDICT_FUSE, REASON_LOW_SUPPORT)

    def test_loop_takes_precedence_over_low_support(self):
        _, reason = decide(score(0.0, low_support=True), 0.9, True)
        assert reason == REASON_LOOP

    def test_monotone_in_tau_for_fixed_score(self):
        s = score(0.63)
        fused = [decide(s, tau, False)[0] == VERDICT_FUSE
                 for tau in np.linspace(0, 1, 21)]
        # once a tau skips, every higher tau skips too
        assert fused == sorted(fused, reverse=True)

    def test_pure_function(self):
        s = score(0.7)
        assert decide(s, 0.6, False) == decide(s, 0.6, False)

    def test_invalid_tau(self):
        with pytest.raises(ValueError):
            decide(score(), 1.5, False)


class TestAdvance:
    def test_thirty_skips_grow_window_by_thirty(self):
        st = PolicyState(base_window=200)
        for _ in range(30):
            st = advance(st, fused=False)
        assert st.effective_window == 230

    def test_fusion_resets(self):
        st = PolicyState(base_window=200, frames_since_fusion=57)
        st = advance(st, fused=True)
        assert st.effective_window == 200

    def test_no_skips_keeps_base(self):
        assert PolicyState(base_window=200).effective_window == 200

    def test_window_never_below_base(self):
        st = PolicyState(base_window=100)
        rng = np.random.default_rng(0)
        gap = 0
        for fused in rng.uniform(size=200) < 0.3:
            st = advance(st, bool(fused))
            gap = 0 if fused else gap + 1
            assert st.effective_window == 100 + gap
            assert st.effective_window >= 100


class TestLocalLoop:
    def _frames(self, d_live, d_pred):
        z = np.zeros_like(d_live)
        return (Frame(0.0, z, d_live),
                Frame(0.0, z, d_pred, kind="predicted"))

    def test_empty_prediction_is_no_loop(self):
        live, pred = self._frames(np.ones((10, 10)), np.zeros((10, 10)))
        assert not detect_local_loop(live, pred)

    def test_identical_depth_triggers(self):
        d = np.full((10, 10), 2.0)
        live, pred = self._frames(d, d.copy())
        assert detect_local_loop(live, pred)

    def test_agreement_fraction_boundary_inclusive(self):
        d = np.full((10, 10), 2.0)
        d_pred = d.copy()
        d_pred[:5, :] = 3.0  # exactly half agree
        live, pred = self._frames(d, d_pred)
        assert detect_local_loop(live, pred, agree_frac=0.5)
        assert not detect_local_loop(live, pred, agree_frac=0.51)

    def test_tiny_overlap_is_no_loop(self):
        d_live = np.full((10, 10), 2.0)
        d_pred = np.zeros((10, 10))
        d_pred[0, :5] = 2.0
        live, pred = self._frames(d_live, d_pred)
        assert not detect_local_loop(live, pred, min_support=0.1)
