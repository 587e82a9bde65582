"""Registration of segments at the quadtree cells where they are size-comparable.

A segment of length L is *long* for a square of radius r (half side) when
L >= alpha * r, else *short*.  Each segment is registered "long" at every cell
it meets in the grid whose side w is the largest power of two with
alpha * w / 2 <= L (so those cells are the maximal cells for which the segment
is long), and "short" at the distinct parent cells of those registration
cells (side 2w, where L < alpha * w * ... strictly below the long threshold).
Both lists touch each root-to-leaf path at most once, which is what the
short-congestion dynamic program and the long-count push-down rely on.

The grid side is computed with frexp, so the dyadic classification is exact;
for power-of-two alpha it agrees bit-for-bit with the predicate
`L >= alpha * r`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geom import Segment, SegmentSet
from .quadtree import (
    MAX_DEPTH,
    CanonicalCell,
    CompressedQuadtree,
    build_quadtree_arrays,
    cells_to_arrays,
)

_COORD_BITS = 52
_CHUNK_CELLS = 4_000_000  # cap on (segments x slots) scratch per walk chunk


def max_long_side(length, alpha: int) -> np.ndarray:
    """Largest power-of-two cell side for which a segment of this length is long.

    A segment is alpha-long for a cell of side w iff w <= max_long_side(L);
    clamped to the representable cell range [2^(1-MAX_DEPTH), 2].
    """
    _, e = np.frexp(np.asarray(length, dtype=np.float64) / alpha)
    lv = np.clip(e.astype(np.int64), 1 - MAX_DEPTH, 1)
    return np.ldexp(1.0, lv)


def _crossing_params(a, b, w, width: int):
    """Parameters in (0,1) where the segment crosses grid lines of spacing w.

    Returns an (n, width) array padded with +inf; at most
    floor(extent / w) + 1 <= width entries are finite per row.
    """
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    k_lo = np.floor(lo / w)
    k_hi = np.floor(hi / w)
    cols = k_lo[:, None] + np.arange(1, width + 1, dtype=np.float64)[None, :]
    valid = cols <= k_hi[:, None]
    d = b - a
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (cols * w[:, None] - a[:, None]) / d[:, None]
    return np.where(valid, t, np.inf)


def _walk_cells(segs: SegmentSet, idx: np.ndarray, alpha: int):
    """Grid cells (half-open) traversed by each segment at its registration grid.

    Returns (seg_index, cx, cy, depth) arrays in corner units; cells come out
    in traversal order, at most 2*(alpha+1)+1 per segment.
    """
    ax, ay = segs.ax[idx], segs.ay[idx]
    bx, by = segs.bx[idx], segs.by[idx]
    w = max_long_side(segs.length[idx], alpha)
    depth = (1 - np.log2(w)).astype(np.int64)  # w is an exact power of two

    width = alpha + 1
    tx = _crossing_params(ax, bx, w, width)
    ty = _crossing_params(ay, by, w, width)
    n = len(ax)
    params = np.empty((n, 2 * width + 2), dtype=np.float64)
    params[:, 0] = 0.0
    params[:, 1] = 1.0
    params[:, 2 : 2 + width] = tx
    params[:, 2 + width :] = ty
    params.sort(axis=1)

    t0 = params[:, :-1]
    t1 = params[:, 1:]
    seg_ok = np.isfinite(t1) & (t1 > t0)
    tm = np.where(seg_ok, 0.5 * (t0 + t1), 0.5)
    xm = ax[:, None] + tm * (bx - ax)[:, None]
    ym = ay[:, None] + tm * (by - ay)[:, None]
    ix = np.floor(xm / w[:, None])
    iy = np.floor(ym / w[:, None])
    # consecutive duplicates (grazed corners) collapse
    dup = np.zeros_like(seg_ok)
    dup[:, 1:] = (ix[:, 1:] == ix[:, :-1]) & (iy[:, 1:] == iy[:, :-1]) & seg_ok[:, :-1]
    take = seg_ok & ~dup

    rows, cols = np.nonzero(take)
    shift = _COORD_BITS - depth[rows]
    cx = ix[rows, cols].astype(np.int64) << shift
    cy = iy[rows, cols].astype(np.int64) << shift
    return idx[rows], cx, cy, depth[rows]


def registration_cell_arrays(segs: SegmentSet, alpha: int):
    """Long-registration cells for every segment, chunked to bound scratch memory."""
    if len(segs) == 0:
        e = np.empty(0, np.int64)
        return e, e, e, e
    chunk = max(1, _CHUNK_CELLS // (2 * (alpha + 1) + 2))
    out = []
    for lo in range(0, len(segs), chunk):
        idx = np.arange(lo, min(lo + chunk, len(segs)), dtype=np.int64)
        out.append(_walk_cells(segs, idx, alpha))
    return tuple(np.concatenate(parts) for parts in zip(*out))


def short_parent_cells(seg_id, cx, cy, depth):
    """Distinct immediate parents of each segment's registration cells.

    Cells at the root (depth 0) have no parent: such segments are long for
    the whole domain and are never registered short.
    """
    keep = depth > 0
    seg_id, cx, cy, depth = seg_id[keep], cx[keep], cy[keep], depth[keep]
    pd = depth - 1
    shift = _COORD_BITS - pd
    pcx = (cx >> shift) << shift
    pcy = (cy >> shift) << shift
    # a line meets each parent cell in one run, so traversal-consecutive
    # duplicates are the only duplicates
    if len(seg_id):
        first = np.empty(len(seg_id), dtype=bool)
        first[0] = True
        first[1:] = (
            (seg_id[1:] != seg_id[:-1])
            | (pcx[1:] != pcx[:-1])
            | (pcy[1:] != pcy[:-1])
        )
        seg_id, pcx, pcy, pd = seg_id[first], pcx[first], pcy[first], pd[first]
    return seg_id, pcx, pcy, pd


def registration_cells(s: Segment, alpha: int) -> list[CanonicalCell]:
    """The maximal-grid cells for which segment s is alpha-long (in walk order)."""
    if alpha < 1 or int(alpha) != alpha:
        raise ValueError("alpha must be an integer >= 1")
    segs = SegmentSet.from_segments([s])
    if float(segs.length[0]) <= 0.0:
        raise ValueError("zero-length segments carry no registration cells")
    _, cx, cy, d = registration_cell_arrays(segs, int(alpha))
    shiftbits = _COORD_BITS - d
    return [
        CanonicalCell(1 - int(dd), int(x) >> int(sb), int(y) >> int(sb))
        for x, y, dd, sb in zip(cx, cy, d, shiftbits)
    ]


def _csr_from_pairs(node_ids: np.ndarray, seg_ids: np.ndarray, n_nodes: int):
    order = np.argsort(node_ids, kind="stable")
    node_ids = node_ids[order]
    seg_ids = seg_ids[order]
    counts = np.bincount(node_ids, minlength=n_nodes)
    off = np.zeros(n_nodes + 1, dtype=np.int64)
    np.cumsum(counts, out=off[1:])
    return off, seg_ids.astype(np.int64)


@dataclass
class RegistrationResult:
    """An augmented quadtree plus its per-node long/short registration lists."""

    tree: CompressedQuadtree
    segments: SegmentSet
    alpha: int
    long_off: np.ndarray
    long_idx: np.ndarray
    short_off: np.ndarray
    short_idx: np.ndarray

    @property
    def totals(self) -> int:
        return int(len(self.long_idx) + len(self.short_idx))

    def cl_long(self, node: int) -> np.ndarray:
        return self.long_idx[self.long_off[node] : self.long_off[node + 1]]

    def cl_short(self, node: int) -> np.ndarray:
        return self.short_idx[self.short_off[node] : self.short_off[node + 1]]


def build_registered_tree(
    px: np.ndarray,
    py: np.ndarray,
    extra_cx,
    extra_cy,
    extra_depth,
    segs: SegmentSet,
    alpha: int,
    shift: tuple[float, float] = (0.0, 0.0),
) -> RegistrationResult:
    """Build the augmented tree over points + extra cells and register segments."""
    rseg, rcx, rcy, rd = registration_cell_arrays(segs, alpha)
    sseg, scx, scy, sd = short_parent_cells(rseg, rcx, rcy, rd)
    ecx = np.concatenate([np.asarray(extra_cx, np.int64), rcx, scx])
    ecy = np.concatenate([np.asarray(extra_cy, np.int64), rcy, scy])
    edp = np.concatenate([np.asarray(extra_depth, np.int64), rd, sd])
    tree = build_quadtree_arrays(px, py, ecx, ecy, edp, shift=shift)
    long_nodes = tree.find_cells(rcx, rcy, rd)
    short_nodes = tree.find_cells(scx, scy, sd)
    long_off, long_idx = _csr_from_pairs(long_nodes, rseg, tree.node_count)
    short_off, short_idx = _csr_from_pairs(short_nodes, sseg, tree.node_count)
    return RegistrationResult(tree, segs, alpha, long_off, long_idx, short_off, short_idx)


def build_augmented_quadtree(
    base_cells: Sequence[CanonicalCell],
    segments: Sequence[Segment] | SegmentSet,
    alpha: int,
) -> RegistrationResult:
    """Augment a base cell set with registration cells and populate the lists.

    `base_cells` are the cells of the (shifted) quadtree this augmentation
    extends; `segments` must already live in the same shifted coordinates.
    """
    if alpha < 1 or int(alpha) != alpha:
        raise ValueError("alpha must be an integer >= 1")
    segs = segments if isinstance(segments, SegmentSet) else SegmentSet.from_segments(segments)
    if len(segs) and float(np.min(segs.length)) <= 0.0:
        raise ValueError("zero-length segments must be filtered before registration")
    ecx, ecy, edp = cells_to_arrays(base_cells)
    empty = np.empty(0, np.float64)
    return build_registered_tree(empty, empty, ecx, ecy, edp, segs, int(alpha))
