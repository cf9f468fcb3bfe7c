"""Normalised information distance between a live and a predicted frame.

NID(X, Y) = (H(X,Y) - I[X;Y]) / H(X,Y), computed from joint co-occurrence
histograms with hard bin assignment. It is a metric on [0, 1]: 0 when one
image determines the other, 1 when they are independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Frame


class EmptyHistogramError(ValueError):
    """Raised when entropy is requested of a histogram with zero total."""


@dataclass(frozen=True)
class HistEdges:
    lo: float
    hi: float
    bins: int

    def __post_init__(self):
        if self.hi <= self.lo:
            raise ValueError(f"invalid edges: hi {self.hi} <= lo {self.lo}")
        if self.bins < 2:
            raise ValueError("need at least 2 bins")


@dataclass(frozen=True)
class JointHistogram:
    counts: np.ndarray  # B x B, int64
    total: int
    edges_a: HistEdges
    edges_b: HistEdges

    def transpose(self) -> "JointHistogram":
        return JointHistogram(self.counts.T.copy(), self.total,
                              self.edges_b, self.edges_a)


def bin_indices(values: np.ndarray, edges: HistEdges) -> np.ndarray:
    """Hard bin assignment, clamped to [0, bins-1]."""
    scaled = (np.asarray(values, dtype=np.float64) - edges.lo) \
        / (edges.hi - edges.lo) * edges.bins
    return np.clip(np.floor(scaled), 0, edges.bins - 1).astype(np.int64)


def build_joint_histogram(a: np.ndarray, b: np.ndarray, mask: np.ndarray,
                          edges_a: HistEdges, edges_b: HistEdges,
                          chunks: int = 1) -> JointHistogram:
    """Count co-occurring (bin(a), bin(b)) pairs over masked pixels.

    `chunks` splits the work into partial histograms merged by addition;
    integer counts make the merge associative and commutative, so the result
    is identical for any chunk count.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    mask = np.asarray(mask, dtype=bool)
    if a.shape != b.shape or a.shape != mask.shape:
        raise ValueError("a, b and mask must share a shape")
    if edges_a.bins != edges_b.bins:
        raise ValueError("both axes must use the same bin count")
    nb = edges_a.bins
    av = a[mask].ravel()
    bv = b[mask].ravel()
    flat = bin_indices(av, edges_a) * nb + bin_indices(bv, edges_b)
    counts = np.zeros(nb * nb, dtype=np.int64)
    for part in np.array_split(flat, max(1, chunks)):
        counts += np.bincount(part, minlength=nb * nb)
    return JointHistogram(counts.reshape(nb, nb), int(av.size),
                          edges_a, edges_b)


def _entropy_bits(counts: np.ndarray, total: int) -> float:
    p = counts[counts > 0].astype(np.float64) / total
    # sort so the summation order depends only on the multiset of
    # probabilities; makes entropies of h and h^T bit-identical
    p = np.sort(p, kind="stable")
    return float(-np.sum(p * np.log2(p)))


def entropies(h: JointHistogram) -> tuple[float, float, float]:
    """Marginal and joint Shannon entropies in bits (0 log 0 = 0)."""
    if h.total <= 0:
        raise EmptyHistogramError("histogram has no samples")
    h_a = _entropy_bits(h.counts.sum(axis=1), h.total)
    h_b = _entropy_bits(h.counts.sum(axis=0), h.total)
    h_joint = _entropy_bits(h.counts.ravel(), h.total)
    return h_a, h_b, h_joint


def mutual_information(h: JointHistogram) -> float:
    h_a, h_b, h_joint = entropies(h)
    return h_a + h_b - h_joint


def nid_from_histogram(h: JointHistogram) -> float:
    """(H_joint - MI) / H_joint, clamped to [0, 1].

    A zero joint entropy means both distributions are constant and hence
    perfectly explained by each other; returns 0 by convention.
    """
    h_a, h_b, h_joint = entropies(h)
    if h_joint == 0.0:
        return 0.0
    return float(min(1.0, max(0.0, 2.0 - (h_a + h_b) / h_joint)))


def combined_nid(nid_rgb: float, nid_depth: float, alpha: float) -> float:
    """Weighted sum alpha * nid_rgb + (1 - alpha) * nid_depth."""
    for name, v in (("nid_rgb", nid_rgb), ("nid_depth", nid_depth),
                    ("alpha", alpha)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must be in [0, 1], got {v}")
    return alpha * nid_rgb + (1.0 - alpha) * nid_depth


@dataclass(frozen=True)
class NidConfig:
    bins: int = 64
    alpha: float = 0.5
    depth_min: float = 0.4
    depth_max: float = 8.0
    min_support: float = 0.1  # fraction of pixels needed for a trusted score
    chunks: int = 1

    def intensity_edges(self) -> HistEdges:
        return HistEdges(0.0, 1.0, self.bins)

    def depth_edges(self) -> HistEdges:
        return HistEdges(self.depth_min, self.depth_max, self.bins)


@dataclass(frozen=True)
class NidScore:
    nid_rgb: float
    nid_depth: float
    combined: float
    pixels_used: int
    low_support: bool


def frame_nid(live: Frame, predicted: Frame, config: NidConfig) -> NidScore:
    """Score how poorly the predicted frame explains the live one.

    Only pixels with valid depth in both frames carry co-occurrence
    evidence. When fewer than min_support of all pixels overlap the score is
    flagged low-support (and reported as maximally novel when the overlap is
    empty).
    """
    if live.depth.shape != predicted.depth.shape:
        raise ValueError("live and predicted frames differ in size")
    mask = (live.depth > 0) & (predicted.depth > 0)
    total_px = live.depth.size
    used = int(mask.sum())
    low = used < int(np.floor(config.min_support * total_px))
    if used == 0:
        return NidScore(1.0, 1.0, 1.0, 0, True)
    edges_i = config.intensity_edges()
    edges_d = config.depth_edges()
    h_rgb = build_joint_histogram(live.intensity, predicted.intensity, mask,
                                  edges_i, edges_i, config.chunks)
    h_d = build_joint_histogram(live.depth, predicted.depth, mask,
                                edges_d, edges_d, config.chunks)
    n_rgb = nid_from_histogram(h_rgb)
    n_d = nid_from_histogram(h_d)
    return NidScore(n_rgb, n_d, combined_nid(n_rgb, n_d, config.alpha),
                    used, low)
