"""Exact short congestion of every quadtree node, by one bottom-up pass.

Each short-registered segment is clipped to its own registration node's cell;
summing those clips over a subtree gives exactly the clipped length of all
short segments inside the subtree root's cell, because registration cells
tile the plane at a grid no coarser than any cell for which the segment is
short.  One real per node, linear work in list sizes plus node count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geom import clip_lengths
from .registration import RegistrationResult


@dataclass
class ShortCongestionTable:
    len_short_subtree: np.ndarray  # per node: clipped short length in the subtree
    short_cong: np.ndarray  # per node: len_short_subtree / radius
    max_short_cong: float
    argmax_node: int


def short_congestion_all(reg: RegistrationResult) -> ShortCongestionTable:
    """Short congestion of every node of the registered tree, exactly."""
    tree = reg.tree
    n = tree.node_count
    own = np.zeros(n, dtype=np.float64)

    if len(reg.short_idx):
        # node of each (node, segment) short registration pair
        nodes = np.repeat(
            np.arange(n, dtype=np.int64), np.diff(reg.short_off)
        )
        lens = clip_lengths(
            reg.segments,
            reg.short_idx,
            tree.x0f[nodes],
            tree.y0f[nodes],
            tree.x0f[nodes] + tree.sidef[nodes],
            tree.y0f[nodes] + tree.sidef[nodes],
        )
        # reduceat sums contiguous per-node runs (pairwise summation inside numpy)
        has = np.flatnonzero(np.diff(reg.short_off) > 0)
        own[has] = np.add.reduceat(lens, reg.short_off[has])

    subtree = own.copy()
    for d in range(52, 0, -1):
        nodes = tree.nodes_at_depth(d)
        if len(nodes) == 0:
            continue
        np.add.at(subtree, tree.parent[nodes], subtree[nodes])

    short_cong = subtree / tree.radiusf
    arg = int(np.argmax(short_cong)) if n else 0
    return ShortCongestionTable(subtree, short_cong, float(short_cong[arg]) if n else 0.0, arg)
