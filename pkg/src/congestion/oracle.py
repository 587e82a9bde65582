"""Brute-force reference implementations for testing and validation.

Every function here recomputes its answer directly from the definitions —
per-node loops over all segments, or dense enumeration of witness squares —
independent of the tree-structured fast paths it validates.  The quadratic
oracles refuse inputs above a cap (override only for constructed instances).

Deterministic, embarrassingly parallel in principle, and intended for test
scale only; the CLI exposes them behind --mode oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geom import Segment, SegmentSet, clip_params
from .quadtree import CompressedQuadtree
from .registration import RegistrationResult

DEFAULT_CAP = 2000
_CHUNK = 2_000_000  # (node, segment) pairs per broadcast block


class OracleCapExceeded(ValueError):
    """Raised when an O(n^2)-style oracle is asked for more than its cap."""


@dataclass
class OracleBracket:
    """A certified lower bound on the congestion, with an optional upper bound."""

    lower: float
    upper: float | None = None

    def __post_init__(self):
        if self.upper is not None and self.lower > self.upper + 1e-9:
            raise ValueError("bracket lower bound exceeds upper bound")


def _tree_of(tree_or_reg) -> tuple[CompressedQuadtree, SegmentSet | None]:
    if isinstance(tree_or_reg, RegistrationResult):
        return tree_or_reg.tree, tree_or_reg.segments
    return tree_or_reg, None


def _as_segset(segments) -> SegmentSet:
    return (
        segments
        if isinstance(segments, SegmentSet)
        else SegmentSet.from_segments(segments)
    )


def _check_cap(n: int, cap: int):
    if n > cap:
        raise OracleCapExceeded(
            f"naive oracle refused: {n} segments exceeds cap {cap}"
        )


def _node_segment_tables(tree: CompressedQuadtree, segs: SegmentSet, alpha: int | None):
    """Per-node (clip-length sums, long counts, short clip sums) by brute force."""
    m = tree.node_count
    n = len(segs)
    clip_sum = np.zeros(m)
    long_count = np.zeros(m, dtype=np.int64)
    short_sum = np.zeros(m)
    if n == 0:
        return clip_sum, long_count, short_sum
    chunk = max(1, _CHUNK // max(n, 1))
    for lo in range(0, m, chunk):
        hi = min(lo + chunk, m)
        x0 = tree.x0f[lo:hi, None]
        y0 = tree.y0f[lo:hi, None]
        side = tree.sidef[lo:hi, None]
        t0, t1 = clip_params(
            segs.ax[None, :], segs.ay[None, :], segs.bx[None, :], segs.by[None, :],
            x0, y0, x0 + side, y0 + side,
        )
        span = np.clip(t1 - t0, 0.0, None)
        lens = segs.length[None, :] * span
        clip_sum[lo:hi] = lens.sum(axis=1)
        if alpha is not None:
            inter = t0 <= t1
            is_long = segs.length[None, :] >= alpha * (side * 0.5)
            long_count[lo:hi] = (inter & is_long).sum(axis=1)
            short_sum[lo:hi] = np.where(is_long, 0.0, lens).sum(axis=1)
    return clip_sum, long_count, short_sum


def naive_quadtree_congestion(
    tree_or_reg, segments=None, cap: int = DEFAULT_CAP
) -> np.ndarray:
    """Exact congestion of every node's cell, by full conflict propagation."""
    tree, embedded = _tree_of(tree_or_reg)
    segs = embedded if segments is None else _as_segset(segments)
    _check_cap(len(segs), cap)
    clip_sum, _, _ = _node_segment_tables(tree, segs, None)
    return clip_sum / tree.radiusf


def naive_long_counts(
    tree_or_reg, segments=None, alpha: int | None = None, cap: int = DEFAULT_CAP
) -> np.ndarray:
    """Exact |long(alpha, cell)| for every node."""
    tree, embedded = _tree_of(tree_or_reg)
    segs = embedded if segments is None else _as_segset(segments)
    if alpha is None:
        if not isinstance(tree_or_reg, RegistrationResult):
            raise ValueError("alpha required when not passing a RegistrationResult")
        alpha = tree_or_reg.alpha
    _check_cap(len(segs), cap)
    _, counts, _ = _node_segment_tables(tree, segs, alpha)
    return counts


def naive_max_conflict(
    tree_or_reg, segments=None, alpha: int | None = None, cap: int = DEFAULT_CAP
) -> int:
    """Exact maximum long-conflict count over all cells."""
    counts = naive_long_counts(tree_or_reg, segments, alpha, cap)
    return int(counts.max()) if len(counts) else 0


def naive_short_congestion(
    tree_or_reg, segments=None, alpha: int | None = None, cap: int = DEFAULT_CAP
) -> np.ndarray:
    """Exact short congestion of every node (clip short segments, sum, divide)."""
    tree, embedded = _tree_of(tree_or_reg)
    segs = embedded if segments is None else _as_segset(segments)
    if alpha is None:
        if not isinstance(tree_or_reg, RegistrationResult):
            raise ValueError("alpha required when not passing a RegistrationResult")
        alpha = tree_or_reg.alpha
    _check_cap(len(segs), cap)
    _, _, short_sum = _node_segment_tables(tree, segs, alpha)
    return short_sum / tree.radiusf


def dense_grid_congestion_lower_bound(
    segments: Sequence[Segment] | SegmentSet,
    grid_resolution: int = 256,
    radius_levels: int = 12,
) -> float:
    """Max congestion over a dense family of witness squares (a lower bound).

    Square centers form a grid_resolution^2 lattice over the input bounding
    box; radii run over radius_levels dyadic fractions of the half-span.
    Nested parameter choices (2^k + 1 resolutions, more levels) only grow
    the family, so the bound is monotone under refinement.
    """
    segs = _as_segset(segments)
    if len(segs) == 0:
        return 0.0
    lox = float(np.min(np.minimum(segs.ax, segs.bx)))
    hix = float(np.max(np.maximum(segs.ax, segs.bx)))
    loy = float(np.min(np.minimum(segs.ay, segs.by)))
    hiy = float(np.max(np.maximum(segs.ay, segs.by)))
    span = max(hix - lox, hiy - loy)
    if span <= 0.0:
        return 0.0
    gx = np.linspace(lox, hix, grid_resolution)
    gy = np.linspace(loy, hiy, grid_resolution)
    cx, cy = np.meshgrid(gx, gy)
    cx = cx.ravel()
    cy = cy.ravel()

    n = len(segs)
    best = 0.0
    chunk = max(1, _CHUNK // max(n, 1))
    for j in range(1, radius_levels + 1):
        r = span * 0.5 * 2.0 ** (1 - j)
        for lo in range(0, len(cx), chunk):
            hi = min(lo + chunk, len(cx))
            x0 = cx[lo:hi, None] - r
            y0 = cy[lo:hi, None] - r
            t0, t1 = clip_params(
                segs.ax[None, :], segs.ay[None, :],
                segs.bx[None, :], segs.by[None, :],
                x0, y0, x0 + 2 * r, y0 + 2 * r,
            )
            lens = segs.length[None, :] * np.clip(t1 - t0, 0.0, None)
            best = max(best, float(lens.sum(axis=1).max()) / r)
    return best


def dense_candidate_squares(
    segments: Sequence[Segment] | SegmentSet,
    grid_resolution: int = 64,
    radius_levels: int = 8,
):
    """Test-only second implementation of the candidate-square interface."""
    from .candidates import CandidateSquareSet

    segs = _as_segset(segments)
    if len(segs) == 0:
        return CandidateSquareSet(np.empty((0, 2)), np.empty(0), 0.1)
    lox = float(np.min(np.minimum(segs.ax, segs.bx)))
    hix = float(np.max(np.maximum(segs.ax, segs.bx)))
    loy = float(np.min(np.minimum(segs.ay, segs.by)))
    hiy = float(np.max(np.maximum(segs.ay, segs.by)))
    span = max(hix - lox, hiy - loy, 1e-30)
    gx = np.linspace(lox, hix, grid_resolution)
    gy = np.linspace(loy, hiy, grid_resolution)
    cx, cy = (a.ravel() for a in np.meshgrid(gx, gy))
    centers = []
    radii = []
    for j in range(1, radius_levels + 1):
        r = span * 0.5 * 2.0 ** (1 - j)
        centers.append(np.stack([cx, cy], axis=1))
        radii.append(np.full(len(cx), r))
    return CandidateSquareSet(np.concatenate(centers), np.concatenate(radii), 0.1)
