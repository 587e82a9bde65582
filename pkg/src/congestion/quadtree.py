"""Canonical grids and compressed quadtrees over [0, 2)^2, with diagonal shifts.

The working domain is the square [0, 2)^2; the root cell has side 2 (level 1)
and cells halve downward to a maximum depth of 52, so every cell corner is an
exact multiple of 2^-51 and fits a 64-bit integer grid.  Coordinates quantize
exactly: x * 2^51 is a power-of-two multiply, so floor() of it is the true
mathematical floor.

Construction is the usual Morton-order recipe: sort the points by Z-order,
take the least common ancestor cell of every consecutive pair, close the
resulting cell set under pairwise LCA, and read parents off the preorder.
Nodes with two or more children get all four quadrant cells materialized so
that children always partition their parent exactly (single-child edges stay
compressed).  Everything is array-backed; `QTNode` is a lightweight view used
by tests and callers that want objects.

Trees are immutable once built and safe to share across threads; the three
shifted trees are independent of each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .geom import Point, Square

MAX_DEPTH = 52
# corner units: integer grid of spacing 2^-51 over [0, 2)
_UNIT_BITS = 51
_COORD_BITS = 52
_M26 = np.int64((1 << 26) - 1)

# The three diagonal shifts guaranteeing a small common cell for any pair of
# points in [0, 1)^2: v_i = (i/3, i/3).
SHIFTS = (0.0, 1.0 / 3.0, 2.0 / 3.0)
SHIFT_CELL_FACTOR = 6.0  # some shift has a common cell of side <= 6 * |p - q|


def _spread32(v: np.ndarray) -> np.ndarray:
    """Spread the low 32 bits of each int64 into the even bit positions."""
    v = v & np.int64(0xFFFFFFFF)
    v = (v | (v << 16)) & np.int64(0x0000FFFF0000FFFF)
    v = (v | (v << 8)) & np.int64(0x00FF00FF00FF00FF)
    v = (v | (v << 4)) & np.int64(0x0F0F0F0F0F0F0F0F)
    v = (v | (v << 2)) & np.int64(0x3333333333333333)
    v = (v | (v << 1)) & np.int64(0x5555555555555555)
    return v


def morton_key(cx: np.ndarray, cy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """104-bit Z-order key of corner-unit coordinates, as (hi, lo) int64 words."""
    cx = np.asarray(cx, dtype=np.int64)
    cy = np.asarray(cy, dtype=np.int64)
    hi = (_spread32(cx >> 26) << 1) | _spread32(cy >> 26)
    lo = (_spread32(cx & _M26) << 1) | _spread32(cy & _M26)
    return hi, lo


def _bit_length(v: np.ndarray) -> np.ndarray:
    # exact for 0 <= v < 2^53: the float conversion is lossless there
    _, e = np.frexp(v.astype(np.float64))
    return e.astype(np.int64)


def quantize(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map [0,2)^2 coordinates onto the depth-52 corner grid (exact floor)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size and (
        float(np.min(x)) < 0.0
        or float(np.min(y)) < 0.0
        or float(np.max(x)) >= 2.0
        or float(np.max(y)) >= 2.0
    ):
        raise ValueError("point outside the [0,2)^2 quadtree domain")
    scale = float(1 << _UNIT_BITS)
    return (x * scale).astype(np.int64), (y * scale).astype(np.int64)


def lca_depth(ix1, iy1, ix2, iy2) -> np.ndarray:
    """Depth of the smallest canonical cell containing both grid points."""
    bx = _bit_length(np.asarray(ix1) ^ np.asarray(ix2))
    by = _bit_length(np.asarray(iy1) ^ np.asarray(iy2))
    return np.minimum(_COORD_BITS - bx, _COORD_BITS - by)


def _truncate(c: np.ndarray, depth: np.ndarray) -> np.ndarray:
    shift = _COORD_BITS - depth
    return (c >> shift) << shift


@dataclass(frozen=True)
class CanonicalCell:
    """Cell (i, j) of the power-of-two grid with side 2^level; root is level 1."""

    level: int
    i: int
    j: int

    def __post_init__(self):
        depth = 1 - self.level
        if not 0 <= depth <= MAX_DEPTH:
            raise ValueError(f"level {self.level} outside [{1 - MAX_DEPTH}, 1]")
        if not (0 <= self.i < (1 << depth) and 0 <= self.j < (1 << depth)):
            raise ValueError(f"cell ({self.i},{self.j}) outside [0,2)^2 at level {self.level}")

    @property
    def depth(self) -> int:
        return 1 - self.level

    @property
    def side(self) -> float:
        return 2.0**self.level

    @property
    def x0(self) -> float:
        return self.i * self.side

    @property
    def y0(self) -> float:
        return self.j * self.side

    def square(self) -> Square:
        r = self.side / 2.0
        return Square(Point(self.x0 + r, self.y0 + r), r)

    def contains_point(self, x: float, y: float) -> bool:
        """Half-open membership, the grid-partition convention."""
        return self.x0 <= x < self.x0 + self.side and self.y0 <= y < self.y0 + self.side

    def parent(self) -> CanonicalCell:
        if self.level >= 1:
            raise ValueError("root cell has no parent")
        return CanonicalCell(self.level + 1, self.i >> 1, self.j >> 1)

    def contains_cell(self, other: CanonicalCell) -> bool:
        if other.depth < self.depth:
            return False
        gap = other.depth - self.depth
        return (other.i >> gap) == self.i and (other.j >> gap) == self.j


ROOT_CELL = CanonicalCell(1, 0, 0)


def cells_to_arrays(cells: Iterable[CanonicalCell]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    cells = list(cells)
    cx = np.empty(len(cells), dtype=np.int64)
    cy = np.empty(len(cells), dtype=np.int64)
    dp = np.empty(len(cells), dtype=np.int64)
    for k, c in enumerate(cells):
        d = c.depth
        cx[k] = c.i << (_COORD_BITS - d)
        cy[k] = c.j << (_COORD_BITS - d)
        dp[k] = d
    return cx, cy, dp


def _cell_from_arrays(cx: int, cy: int, depth: int) -> CanonicalCell:
    shift = _COORD_BITS - depth
    return CanonicalCell(1 - depth, int(cx) >> shift, int(cy) >> shift)


def smallest_containing_cell(p: Point, q: Point) -> CanonicalCell:
    """Minimal canonical cell of the [0,2)^2 quadtree containing both points.

    Coincident (or nearly coincident) points resolve to the max-depth cell
    containing p; the tree is never refined past MAX_DEPTH.
    """
    ix, iy = quantize(np.array([p.x, q.x]), np.array([p.y, q.y]))
    d = int(lca_depth(ix[0], iy[0], ix[1], iy[1]))
    return _cell_from_arrays(_truncate(ix[0], d), _truncate(iy[0], d), d)


def _pack_keys(hi: np.ndarray, lo: np.ndarray, depth: np.ndarray) -> np.ndarray:
    """16-byte big-endian keys ordered like (hi, lo, depth); usable with searchsorted."""
    out = np.empty((hi.shape[0], 2), dtype=">i8")
    out[:, 0] = hi
    out[:, 1] = (lo << 6) | depth
    return out.view("S16").reshape(-1)


def _sort_dedup(cx, cy, depth):
    hi, lo = morton_key(cx, cy)
    order = np.lexsort((depth, lo, hi))
    cx, cy, depth, hi, lo = cx[order], cy[order], depth[order], hi[order], lo[order]
    if len(cx):
        keep = np.empty(len(cx), dtype=bool)
        keep[0] = True
        keep[1:] = (hi[1:] != hi[:-1]) | (lo[1:] != lo[:-1]) | (depth[1:] != depth[:-1])
        cx, cy, depth, hi, lo = cx[keep], cy[keep], depth[keep], hi[keep], lo[keep]
    return cx, cy, depth, hi, lo


def _consecutive_point_lcas(px, py):
    """LCA cells of Z-order-consecutive grid points (points must be Z-sorted)."""
    if len(px) < 2:
        return (np.empty(0, np.int64),) * 3
    d = lca_depth(px[:-1], py[:-1], px[1:], py[1:])
    return _truncate(px[1:], d), _truncate(py[1:], d), d


def _assign_parents(cx, cy, depth, hi, lo):
    """Parents in the compressed tree: cell-LCA with the preorder predecessor."""
    n = len(cx)
    parent = np.full(n, -1, dtype=np.int64)
    if n <= 1:
        return parent
    pd = lca_depth(cx[:-1], cy[:-1], cx[1:], cy[1:])
    pd = np.minimum(pd, np.minimum(depth[:-1], depth[1:]))
    pcx = _truncate(cx[1:], pd)
    pcy = _truncate(cy[1:], pd)
    keys = _pack_keys(hi, lo, depth)
    phi, plo = morton_key(pcx, pcy)
    idx = np.searchsorted(keys, _pack_keys(phi, plo, pd))
    if not (
        np.all(idx < n)
        and np.array_equal(cx[idx], pcx)
        and np.array_equal(cy[idx], pcy)
        and np.array_equal(depth[idx], pd)
    ):
        raise AssertionError("cell set not closed under LCA")
    parent[1:] = idx
    return parent


def _build_cells(points_ix, points_iy, extra_cx, extra_cy, extra_depth, materialize: bool):
    # point leaf cells at max depth, deduplicated in Z-order
    hi, lo = morton_key(points_ix, points_iy)
    order = np.lexsort((lo, hi))
    px, py = points_ix[order], points_iy[order]
    if len(px):
        keep = np.empty(len(px), dtype=bool)
        keep[0] = True
        keep[1:] = (px[1:] != px[:-1]) | (py[1:] != py[:-1])
        px, py = px[keep], py[keep]
    lx, ly, ld = _consecutive_point_lcas(px, py)

    cx = np.concatenate(
        [np.zeros(1, np.int64), px, lx, np.asarray(extra_cx, np.int64)]
    )
    cy = np.concatenate(
        [np.zeros(1, np.int64), py, ly, np.asarray(extra_cy, np.int64)]
    )
    dp = np.concatenate(
        [
            np.zeros(1, np.int64),
            np.full(len(px), MAX_DEPTH, np.int64),
            ld,
            np.asarray(extra_depth, np.int64),
        ]
    )

    # close under pairwise LCA via the corner set
    cx, cy, dp, hi, lo = _sort_dedup(cx, cy, dp)
    ux, uy = cx.copy(), cy.copy()
    corner_keep = np.empty(len(ux), dtype=bool)
    if len(ux):
        corner_keep[0] = True
        corner_keep[1:] = (ux[1:] != ux[:-1]) | (uy[1:] != uy[:-1])
        ux, uy = ux[corner_keep], uy[corner_keep]
    ccx, ccy, ccd = _consecutive_point_lcas(ux, uy)
    cx = np.concatenate([cx, ccx])
    cy = np.concatenate([cy, ccy])
    dp = np.concatenate([dp, ccd])

    cx, cy, dp, hi, lo = _sort_dedup(cx, cy, dp)
    parent = _assign_parents(cx, cy, dp, hi, lo)

    if materialize:
        counts = np.bincount(parent[parent >= 0], minlength=len(cx))
        branch = np.flatnonzero(counts >= 2)
        if len(branch):
            bd = dp[branch]
            half = np.int64(1) << (_UNIT_BITS - bd)
            qx = np.concatenate([cx[branch], cx[branch] + half, cx[branch], cx[branch] + half])
            qy = np.concatenate([cy[branch], cy[branch], cy[branch] + half, cy[branch] + half])
            qd = np.tile(bd + 1, 4)
            cx = np.concatenate([cx, qx])
            cy = np.concatenate([cy, qy])
            dp = np.concatenate([dp, qd])
            cx, cy, dp, hi, lo = _sort_dedup(cx, cy, dp)
            parent = _assign_parents(cx, cy, dp, hi, lo)

    return cx, cy, dp, hi, lo, parent


class CompressedQuadtree:
    """Array-backed compressed quadtree; nodes are indices in preorder."""

    def __init__(self, cx, cy, depth, hi, lo, parent, shift: tuple[float, float]):
        self.cx = cx
        self.cy = cy
        self.depth = depth
        self.parent = parent
        self.shift = shift
        self._keys = _pack_keys(hi, lo, depth)
        # children in CSR form
        n = len(cx)
        counts = np.bincount(parent[parent >= 0], minlength=n)
        self.child_off = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=self.child_off[1:])
        order = np.argsort(parent[1:], kind="stable") + 1
        self.child_idx = order.astype(np.int64)
        # float geometry per node
        unit = 2.0**-_UNIT_BITS
        self.x0f = cx * unit
        self.y0f = cy * unit
        self.sidef = np.ldexp(1.0, (1 - depth).astype(np.int64))
        self.radiusf = self.sidef * 0.5
        # nodes grouped by cell depth, shallow to deep
        self._depth_order = np.argsort(depth, kind="stable").astype(np.int64)
        sorted_depth = depth[self._depth_order]
        self._depth_bounds = np.searchsorted(sorted_depth, np.arange(MAX_DEPTH + 2))

    @property
    def node_count(self) -> int:
        return len(self.cx)

    @property
    def root(self) -> "QTNode":
        return QTNode(self, 0)

    def nodes_at_depth(self, d: int) -> np.ndarray:
        return self._depth_order[self._depth_bounds[d] : self._depth_bounds[d + 1]]

    def cell(self, index: int) -> CanonicalCell:
        return _cell_from_arrays(self.cx[index], self.cy[index], int(self.depth[index]))

    def node(self, index: int) -> "QTNode":
        return QTNode(self, int(index))

    def children_of(self, index: int) -> np.ndarray:
        return self.child_idx[self.child_off[index] : self.child_off[index + 1]]

    def find_cells(self, cx, cy, depth) -> np.ndarray:
        """Node indices of the given cells; raises if any cell is absent."""
        hi, lo = morton_key(cx, cy)
        idx = np.searchsorted(self._keys, _pack_keys(hi, lo, np.asarray(depth, np.int64)))
        idx = np.minimum(idx, self.node_count - 1)
        ok = (
            (self.cx[idx] == cx) & (self.cy[idx] == cy) & (self.depth[idx] == depth)
        )
        if not np.all(ok):
            raise KeyError("cell not materialized in this quadtree")
        return idx

    def find_cell(self, cell: CanonicalCell) -> int:
        cx, cy, dp = cells_to_arrays([cell])
        return int(self.find_cells(cx, cy, dp)[0])

    def has_cell(self, cell: CanonicalCell) -> bool:
        try:
            self.find_cell(cell)
            return True
        except KeyError:
            return False

    def locate(self, x: float, y: float) -> int:
        """Deepest node whose cell contains (x, y), by descent from the root."""
        node = 0
        if not self.cell(0).contains_point(x, y):
            raise ValueError("point outside the root cell")
        while True:
            nxt = -1
            for c in self.children_of(node):
                if self.cell(int(c)).contains_point(x, y):
                    nxt = int(c)
                    break
            if nxt < 0:
                return node
            node = nxt

    def leaves(self) -> np.ndarray:
        counts = self.child_off[1:] - self.child_off[:-1]
        return np.flatnonzero(counts == 0)

    def cells(self) -> list[CanonicalCell]:
        return [self.cell(i) for i in range(self.node_count)]


class QTNode:
    """View of one quadtree node; attribute access reads the tree arrays."""

    __slots__ = ("tree", "index")

    def __init__(self, tree: CompressedQuadtree, index: int):
        self.tree = tree
        self.index = index

    @property
    def cell(self) -> CanonicalCell:
        return self.tree.cell(self.index)

    @property
    def parent(self) -> "QTNode | None":
        p = int(self.tree.parent[self.index])
        return None if p < 0 else QTNode(self.tree, p)

    @property
    def children(self) -> list["QTNode"]:
        return [QTNode(self.tree, int(i)) for i in self.tree.children_of(self.index)]

    @property
    def radius(self) -> float:
        return float(self.tree.radiusf[self.index])

    def __repr__(self) -> str:
        c = self.cell
        return f"QTNode(level={c.level}, i={c.i}, j={c.j})"


def _points_to_arrays(points: Sequence[Point] | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(points, np.ndarray):
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        return pts[:, 0].copy(), pts[:, 1].copy()
    xs = np.array([p.x for p in points], dtype=np.float64)
    ys = np.array([p.y for p in points], dtype=np.float64)
    return xs, ys


def build_quadtree_arrays(
    px: np.ndarray,
    py: np.ndarray,
    extra_cx=None,
    extra_cy=None,
    extra_depth=None,
    shift: tuple[float, float] = (0.0, 0.0),
    materialize_quadrants: bool = True,
) -> CompressedQuadtree:
    """Array-level builder over already-shifted coordinates in [0,2)^2."""
    ix, iy = quantize(px, py)
    empty = np.empty(0, np.int64)
    arrs = _build_cells(
        ix,
        iy,
        extra_cx if extra_cx is not None else empty,
        extra_cy if extra_cy is not None else empty,
        extra_depth if extra_depth is not None else empty,
        materialize_quadrants,
    )
    return CompressedQuadtree(*arrs, shift=shift)


def build_compressed_quadtree(
    points: Sequence[Point] | np.ndarray,
    extra_cells: Iterable[CanonicalCell] = (),
) -> CompressedQuadtree:
    """Compressed quadtree over points in [0,2)^2 plus explicitly requested cells.

    The tree materializes: a max-depth leaf cell per distinct point, the LCA
    cell of every Z-order-consecutive pair, every cell in extra_cells, and the
    root.  Size is linear in the input counts.
    """
    px, py = _points_to_arrays(points)
    ecx, ecy, edp = cells_to_arrays(extra_cells)
    return build_quadtree_arrays(px, py, ecx, ecy, edp)


def shifted_quadtrees(
    points: Sequence[Point] | np.ndarray,
    extra_cells_per_shift: Sequence[Iterable[CanonicalCell]] | None = None,
) -> list[CompressedQuadtree]:
    """The three diagonally shifted quadtrees over points in [0,1)^2.

    Tree i is built over the points translated by (i/3, i/3); extra cells, if
    given, are interpreted in the shifted coordinates of their tree.
    """
    px, py = _points_to_arrays(points)
    if px.size and (
        float(np.min(px)) < 0.0
        or float(np.min(py)) < 0.0
        or float(np.max(px)) >= 1.0
        or float(np.max(py)) >= 1.0
    ):
        raise ValueError("shifted_quadtrees expects points in [0,1)^2")
    trees = []
    for t, s in enumerate(SHIFTS):
        extras = (
            cells_to_arrays(extra_cells_per_shift[t])
            if extra_cells_per_shift is not None
            else (None, None, None)
        )
        trees.append(
            build_quadtree_arrays(
                px + s, py + s, *extras, shift=(s, s), materialize_quadrants=True
            )
        )
    return trees


def shift_cell_side_bound(p: Point, q: Point) -> float:
    """Smallest common-cell side over the three shifts (for the shift guarantee).

    For any p, q in [0,1)^2 at Euclidean distance L, the returned side is at
    most SHIFT_CELL_FACTOR * L.
    """
    best = math.inf
    for s in SHIFTS:
        c = smallest_containing_cell(Point(p.x + s, p.y + s), Point(q.x + s, q.y + s))
        best = min(best, c.side)
    return best
