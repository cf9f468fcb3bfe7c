"""Fuse/skip decisions and the adaptive active-window bookkeeping.

A frame is fused when its combined NID reaches the threshold, when a loop
closure forces it, or when the score has too little pixel support to be
trusted (an unexplained view is exploration). The active window grows by one
frame for every consecutive skip and resets on fusion, so long no-fusion
stretches do not silently retire the surfels being tracked against.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .geometry import Frame
from .nid import NidScore

REASON_ABOVE = "above-threshold"
REASON_LOOP = "loop-closure-override"
REASON_LOW_SUPPORT = "low-support"
REASON_BELOW = "below-threshold"

VERDICT_FUSE = "fuse"
VERDICT_SKIP = "skip"


@dataclass(frozen=True)
class PolicyState:
    base_window: int
    frames_since_fusion: int = 0

    @property
    def effective_window(self) -> int:
        return self.base_window + self.frames_since_fusion


def advance(state: PolicyState, fused: bool) -> PolicyState:
    """Reset the skip counter on fusion, grow it otherwise."""
    return replace(state,
                   frames_since_fusion=0 if fused else state.frames_since_fusion + 1)


@dataclass(frozen=True)
class FusionDecision:
    frame_index: int
    score: NidScore
    verdict: str
    reason: str
    surfel_count: int = 0
    nid_ms: float = 0.0
    render_ms: float = 0.0
    fuse_ms: float = 0.0

    @property
    def fused(self) -> bool:
        return self.verdict == VERDICT_FUSE


def decide(score: NidScore, tau: float, loop_event: bool) -> tuple[str, str]:
    """Verdict and reason for one frame.

    Precedence: loop override, then low support, then the threshold test
    (fuse when combined >= tau, inclusive).
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    if loop_event:
        return VERDICT_FUSE, REASON_LOOP
    if score.low_support:
        return VERDICT_FUSE, REASON_LOW_SUPPORT
    if score.combined >= tau:
        return VERDICT_FUSE, REASON_ABOVE
    return VERDICT_SKIP, REASON_BELOW


def detect_local_loop(live: Frame, inactive_pred: Frame, eps_d: float = 0.05,
                      agree_frac: float = 0.5,
                      min_support: float = 0.1) -> bool:
    """True when the live depth agrees with the inactive-map prediction.

    Requires at least min_support of all pixels to be co-valid and the
    fraction of co-valid pixels within the relative depth tolerance to reach
    agree_frac (inclusive).
    """
    if live.depth.shape != inactive_pred.depth.shape:
        raise ValueError("frames differ in size")
    covalid = (live.depth > 0) & (inactive_pred.depth > 0)
    n = int(covalid.sum())
    if n < min_support * live.depth.size or n == 0:
        return False
    dl = live.depth[covalid]
    dp = inactive_pred.depth[covalid]
    frac = float(np.mean(np.abs(dl - dp) <= eps_d * dl))
    return frac >= agree_frac
