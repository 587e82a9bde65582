"""Candidate squares whose best congestion sandwiches the true congestion.

The generator emits three families over the segment endpoints:

* one square per segment, centered at its midpoint and sized to its
  L-infinity extent, which pins the single-segment scales;
* one square per distinct endpoint, sized to half the shortest incident
  segment, which pins endpoint clusters;
* one square per well-separated pair of endpoint clusters, centered between
  the representatives and sized to their separation, which pins every
  intermediate scale at which mass can concentrate.

The well-separated pair decomposition runs over a compressed quadtree with
separation max(2, 0.5/eps); pair squares are widened by (1 + 2/separation) to
absorb the drift between a cluster's representative and its members.  Squares
are then snapped (radius up to 1.25x the next power of two, center to a
quarter-radius grid) and deduplicated; every raw square stays contained in
its snapped square, so snapping costs at most a constant factor of quality
and is what keeps the set small on clustered inputs.

Pure functions of their inputs; safe for concurrent use.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .geom import Point, Segment, SegmentSet, Square
from .quadtree import build_quadtree_arrays

# documented bound on |squares| relative to n / eps^2 (measured much smaller)
SIZE_CONSTANT = 48.0


@dataclass
class CandidateSquareSet:
    centers: np.ndarray  # (k, 2)
    radii: np.ndarray  # (k,)
    eps: float

    def __len__(self) -> int:
        return len(self.radii)

    def __iter__(self) -> Iterator[Square]:
        for (cx, cy), r in zip(self.centers, self.radii):
            yield Square(Point(float(cx), float(cy)), float(r))

    @property
    def squares(self) -> list[Square]:
        return list(self)


def _wspd_pairs(px: np.ndarray, py: np.ndarray, separation: float):
    """Index pairs (a, b) of representative points of well-separated clusters."""
    n = len(px)
    if n < 2:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    # domain-local tree: quantize into [0,2)^2 with a cheap affine map
    lox, loy = float(np.min(px)), float(np.min(py))
    span = max(float(np.max(px)) - lox, float(np.max(py)) - loy)
    if span == 0.0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    qx = (px - lox) / span
    qy = (py - loy) / span
    tree = build_quadtree_arrays(qx, qy, materialize_quadrants=False)

    m = tree.node_count
    leaf_of_point = tree.find_cells(*_leaf_cells(tree, qx, qy))
    # representative = lowest point index in the subtree; count for sanity
    rep = np.full(m, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(rep, leaf_of_point, np.arange(n, dtype=np.int64))
    for d in range(52, 0, -1):
        nodes = tree.nodes_at_depth(d)
        if len(nodes):
            np.minimum.at(rep, tree.parent[nodes], rep[nodes])

    x0, y0, side = tree.x0f, tree.y0f, tree.sidef
    out_a: list[np.ndarray] = []
    out_b: list[np.ndarray] = []
    u = np.zeros(1, dtype=np.int64)
    v = np.zeros(1, dtype=np.int64)
    while len(u):
        key = np.minimum(u, v) << np.int64(32) | np.maximum(u, v)
        _, first = np.unique(key, return_index=True)
        u, v = u[first], v[first]

        gapx = np.maximum(x0[u] - (x0[v] + side[v]), x0[v] - (x0[u] + side[u]))
        gapy = np.maximum(y0[u] - (y0[v] + side[v]), y0[v] - (y0[u] + side[u]))
        gap = np.maximum(np.maximum(gapx, gapy), 0.0)
        far = gap >= separation * np.maximum(side[u], side[v])
        distinct = u != v
        emit = far & distinct
        deg_u = tree.child_off[u + 1] - tree.child_off[u]
        deg_v = tree.child_off[v + 1] - tree.child_off[v]
        both_leaf = (deg_u == 0) & (deg_v == 0) & distinct
        take = emit | (both_leaf & ~emit)
        if np.any(take):
            out_a.append(rep[u[take]])
            out_b.append(rep[v[take]])

        rest = ~take
        u, v = u[rest], v[rest]
        if not len(u):
            break
        # split the node with the larger cell (the other if it is a leaf)
        du = tree.child_off[u + 1] - tree.child_off[u]
        dv = tree.child_off[v + 1] - tree.child_off[v]
        split_u = (side[u] > side[v]) | ((side[u] == side[v]) & (du > 0))
        split_u = np.where(du == 0, False, np.where(dv == 0, True, split_u))
        w = np.where(split_u, u, v)
        other = np.where(split_u, v, u)
        dg = tree.child_off[w + 1] - tree.child_off[w]
        total = int(dg.sum())
        ci = np.repeat(tree.child_off[w] - np.cumsum(dg) + dg, dg) + np.arange(total)
        u = tree.child_idx[ci]
        v = np.repeat(other, dg)

    if not out_a:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    return np.concatenate(out_a), np.concatenate(out_b)


def _leaf_cells(tree, qx, qy):
    from .quadtree import MAX_DEPTH, quantize

    ix, iy = quantize(qx, qy)
    return ix, iy, np.full(len(ix), MAX_DEPTH, dtype=np.int64)


def _snap(cx: np.ndarray, cy: np.ndarray, r: np.ndarray):
    """Snap squares to dyadic radii and aligned centers, keeping containment."""
    mant, e = np.frexp(r)
    pow2 = np.where(mant == 0.5, np.ldexp(1.0, e - 1), np.ldexp(1.0, e))
    grid = pow2 * 0.25
    sx = np.round(cx / grid) * grid
    sy = np.round(cy / grid) * grid
    return sx, sy, 1.25 * pow2


def separation_parameter(eps: float) -> float:
    return max(2.0, 0.5 / eps)


def generate_candidate_squares(
    segments: Sequence[Segment] | SegmentSet,
    eps: float = 0.1,
    snap: bool = True,
) -> CandidateSquareSet:
    """The candidate square family G_S for a segment set.

    Empty input yields an empty set (congestion 0).  Output size is bounded
    by SIZE_CONSTANT * n / eps^2 and in practice is a small multiple of n.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    segs = segments if isinstance(segments, SegmentSet) else SegmentSet.from_segments(segments)
    n = len(segs)
    if n == 0:
        return CandidateSquareSet(np.empty((0, 2)), np.empty(0), eps)

    linf = np.maximum(np.abs(segs.bx - segs.ax), np.abs(segs.by - segs.ay))
    linf = np.maximum(linf, 1e-300)  # degenerate inputs are filtered upstream
    seg_cx = 0.5 * (segs.ax + segs.bx)
    seg_cy = 0.5 * (segs.ay + segs.by)
    seg_r = (0.5 + eps) * linf

    # endpoint squares at half the shortest incident segment
    ex = np.concatenate([segs.ax, segs.bx])
    ey = np.concatenate([segs.ay, segs.by])
    elen = np.concatenate([segs.length, segs.length])
    pts = np.stack([ex, ey], axis=1)
    uniq, inv = np.unique(pts, axis=0, return_inverse=True)
    minlen = np.full(len(uniq), np.inf)
    np.minimum.at(minlen, inv, elen)
    end_cx, end_cy = uniq[:, 0], uniq[:, 1]
    end_r = 0.5 * minlen

    # well-separated pair squares between endpoint clusters
    s = separation_parameter(eps)
    ia, ib = _wspd_pairs(uniq[:, 0], uniq[:, 1], s)
    pax, pay = uniq[ia, 0], uniq[ia, 1]
    pbx, pby = uniq[ib, 0], uniq[ib, 1]
    plinf = np.maximum(np.abs(pax - pbx), np.abs(pay - pby))
    keep = plinf > 0.0
    pair_cx = 0.5 * (pax + pbx)[keep]
    pair_cy = 0.5 * (pay + pby)[keep]
    pair_r = ((0.5 + eps) * (1.0 + 2.0 / s)) * plinf[keep]

    cx = np.concatenate([seg_cx, end_cx, pair_cx])
    cy = np.concatenate([seg_cy, end_cy, pair_cy])
    r = np.concatenate([seg_r, end_r, pair_r])
    if snap:
        cx, cy, r = _snap(cx, cy, r)
    rows = np.stack([cx, cy, r], axis=1)
    rows = np.unique(rows, axis=0)

    limit = SIZE_CONSTANT * n / eps**2
    if len(rows) > limit:
        raise AssertionError(f"candidate set larger than documented bound: {len(rows)} > {limit}")
    return CandidateSquareSet(rows[:, :2].copy(), rows[:, 2].copy(), eps)
