"""Planar primitives: points, segments, and squares treated as L-infinity balls.

Congestion arithmetic lives here: clipping a segment to a square, and the
congestion of a square with respect to a segment set (total clipped length
divided by the square's radius).  All predicates work on the closed square
with a small absolute slack; grid-cell membership elsewhere in the package is
half-open, which only differs on measure-zero boundary sets and therefore
never changes a length.

Everything in this module is a pure function of its inputs and safe to call
concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Absolute slack for geometric predicates (closed-square intersection tests).
EPS = 1e-12

# A segment clipped to a radius-r square is at most the square's diagonal.
DIAG = math.sqrt(8.0)


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __iter__(self):
        return iter((self.x, self.y))


@dataclass(frozen=True)
class Segment:
    a: Point
    b: Point

    def length(self) -> float:
        return math.hypot(self.b.x - self.a.x, self.b.y - self.a.y)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a.x, self.a.y, self.b.x, self.b.y)


@dataclass(frozen=True)
class Square:
    """Axis-parallel square with side 2*radius: the L-infinity ball B(center, radius)."""

    center: Point
    radius: float

    def __post_init__(self):
        if not (self.radius > 0.0) or not math.isfinite(self.radius):
            raise ValueError(f"square radius must be positive and finite, got {self.radius}")

    @property
    def x0(self) -> float:
        return self.center.x - self.radius

    @property
    def x1(self) -> float:
        return self.center.x + self.radius

    @property
    def y0(self) -> float:
        return self.center.y - self.radius

    @property
    def y1(self) -> float:
        return self.center.y + self.radius

    def contains_point(self, p: Point) -> bool:
        """Half-open membership (grid-cell convention)."""
        return self.x0 <= p.x < self.x1 and self.y0 <= p.y < self.y1


def segment(x1: float, y1: float, x2: float, y2: float) -> Segment:
    return Segment(Point(x1, y1), Point(x2, y2))


class SegmentSet:
    """Struct-of-arrays view of a segment list; the workhorse for bulk geometry."""

    __slots__ = ("ax", "ay", "bx", "by", "length")

    def __init__(self, ax, ay, bx, by):
        self.ax = np.ascontiguousarray(ax, dtype=np.float64)
        self.ay = np.ascontiguousarray(ay, dtype=np.float64)
        self.bx = np.ascontiguousarray(bx, dtype=np.float64)
        self.by = np.ascontiguousarray(by, dtype=np.float64)
        self.length = np.hypot(self.bx - self.ax, self.by - self.ay)

    @classmethod
    def from_segments(cls, segments: Iterable[Segment] | np.ndarray) -> "SegmentSet":
        if isinstance(segments, np.ndarray):
            arr = np.asarray(segments, dtype=np.float64).reshape(-1, 4)
            return cls(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])
        rows = [s.as_tuple() for s in segments]
        if not rows:
            return cls([], [], [], [])
        arr = np.asarray(rows, dtype=np.float64)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])

    def __len__(self) -> int:
        return self.ax.shape[0]

    def take(self, idx) -> "SegmentSet":
        return SegmentSet(self.ax[idx], self.ay[idx], self.bx[idx], self.by[idx])

    def shifted(self, dx: float, dy: float) -> "SegmentSet":
        return SegmentSet(self.ax + dx, self.ay + dy, self.bx + dx, self.by + dy)

    def to_segments(self) -> list[Segment]:
        return [
            segment(self.ax[i], self.ay[i], self.bx[i], self.by[i])
            for i in range(len(self))
        ]


def clip_params(
    ax, ay, bx, by, x0, y0, x1, y1, eps: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Liang-Barsky parameter interval of segment(s) against closed box(es).

    Inputs broadcast.  Returns (t0, t1); the segment meets the box (inflated
    by eps) iff t0 <= t1.  Lengths are computed with eps = 0 so boundary
    slack never inflates a clipped length; intersection predicates pass EPS.
    Degenerate (point) segments are handled: the interval is [0, 0] if the
    point is inside, else empty.
    """
    ax, ay, bx, by, x0, y0, x1, y1 = np.broadcast_arrays(
        *(np.asarray(v, dtype=np.float64) for v in (ax, ay, bx, by, x0, y0, x1, y1))
    )
    dx = bx - ax
    dy = by - ay
    lo_x, hi_x = x0 - eps, x1 + eps
    lo_y, hi_y = y0 - eps, y1 + eps

    t0 = np.zeros(ax.shape, dtype=np.float64)
    t1 = np.ones(ax.shape, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        for d, a, lo, hi in ((dx, ax, lo_x, hi_x), (dy, ay, lo_y, hi_y)):
            t_lo = (lo - a) / d
            t_hi = (hi - a) / d
            enter = np.minimum(t_lo, t_hi)
            exit_ = np.maximum(t_lo, t_hi)
            zero = d == 0.0
            inside = (a >= lo) & (a <= hi)
            enter = np.where(zero, np.where(inside, -np.inf, np.inf), enter)
            exit_ = np.where(zero, np.where(inside, np.inf, -np.inf), exit_)
            t0 = np.maximum(t0, enter)
            t1 = np.minimum(t1, exit_)
    return t0, t1


def clip_lengths(segs: SegmentSet, idx, x0, y0, x1, y1) -> np.ndarray:
    """Lengths of segments idx clipped to the boxes (x0,y0)-(x1,y1); 0 when disjoint."""
    ax, ay = segs.ax[idx], segs.ay[idx]
    t0, t1 = clip_params(ax, ay, segs.bx[idx], segs.by[idx], x0, y0, x1, y1)
    return segs.length[idx] * np.clip(t1 - t0, 0.0, None)


def intersects_box(segs: SegmentSet, idx, x0, y0, x1, y1) -> np.ndarray:
    """Closed-box intersection mask (with EPS slack), consistent with clipping."""
    ax, ay = segs.ax[idx], segs.ay[idx]
    t0, t1 = clip_params(ax, ay, segs.bx[idx], segs.by[idx], x0, y0, x1, y1)
    return t0 <= t1


def clip_segment_to_square(s: Segment, q: Square) -> Segment | None:
    """Sub-segment of s inside the closed square q, or None.

    Intersections that degenerate to a single point are reported as None;
    they contribute no length.
    """
    t0, t1 = clip_params(s.a.x, s.a.y, s.b.x, s.b.y, q.x0, q.y0, q.x1, q.y1)
    t0, t1 = float(t0), float(t1)
    if t0 > t1:
        return None
    dx = s.b.x - s.a.x
    dy = s.b.y - s.a.y
    p = Point(s.a.x + t0 * dx, s.a.y + t0 * dy)
    r = Point(s.a.x + t1 * dx, s.a.y + t1 * dy)
    if p.x == r.x and p.y == r.y:
        return None
    return Segment(p, r)


def square_congestion(segments: Sequence[Segment] | SegmentSet, q: Square) -> float:
    """Total length of the segments clipped to q, divided by q's radius."""
    segs = segments if isinstance(segments, SegmentSet) else SegmentSet.from_segments(segments)
    if len(segs) == 0:
        return 0.0
    lens = clip_lengths(segs, slice(None), q.x0, q.y0, q.x1, q.y1)
    return float(np.sum(lens)) / q.radius


def segments_intersecting_square(
    segments: Sequence[Segment], q: Square
) -> list[Segment]:
    """The segments whose closed intersection with q is nonempty."""
    segments = list(segments)
    if not segments:
        return []
    segs = SegmentSet.from_segments(segments)
    mask = intersects_box(segs, slice(None), q.x0, q.y0, q.x1, q.y1)
    return [s for s, hit in zip(segments, mask) if hit]


def validate_segments(
    segments: Sequence[Segment] | np.ndarray, min_length: float = 0.0
) -> tuple[SegmentSet, int]:
    """Ingestion filter: reject non-finite coordinates, drop degenerate segments.

    Returns the kept segments and the number dropped (callers surface the
    count as a warning).
    """
    segs = (
        SegmentSet.from_segments(segments)
        if not isinstance(segments, SegmentSet)
        else segments
    )
    coords = np.stack([segs.ax, segs.ay, segs.bx, segs.by])
    if not np.all(np.isfinite(coords)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(coords), axis=0))[0])
        raise ValueError(f"non-finite coordinate in segment {bad}")
    keep = segs.length > min_length
    dropped = int(np.sum(~keep))
    if dropped:
        segs = segs.take(keep)
    return segs, dropped
