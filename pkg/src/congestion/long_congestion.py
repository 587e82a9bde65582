"""Approximate the maximum number of long segments meeting any quadtree cell.

The exact per-cell counts come from a top-down push-down of the registered
long lists: each node filters its parent's list by cell intersection and adds
its own registrations.  The push-down aborts as soon as any list exceeds a
threshold, which makes one pass cost O(n log n + t n).

The estimator wraps the push-down in an exponential search.  Round 0 runs the
full segment set at threshold t = C * ln(m); if it completes the maximum is
exact.  Otherwise each later round draws a Bernoulli sample with probability
p = C * ln(m) / t, pushes it down with threshold (1+delta) * t * p, and on
success reports t / (1+delta).  C is chosen so both Chernoff tails are
polynomially small; natural log throughout (the base folds into C).

Sampling is reproducible: round r of tree k under master seed s uses the
PCG64 stream seeded with the sequence [s, k, r].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geom import SegmentSet, clip_params
from .registration import RegistrationResult

_FILTER_CHUNK = 2_000_000  # pairs per geometry-filter block


def chernoff_constant(delta: float) -> float:
    """Smallest valid C for a given delta: both tail exponents reach m^-C'."""
    return max(
        2.0 * (2.0 + delta) / delta**2,
        2.0 * (1.0 - delta) / ((1.0 + delta) * delta**2),
    )


@dataclass(frozen=True)
class SamplingParams:
    delta: float = 0.25
    c_const: float | None = None  # defaults to chernoff_constant(delta)
    m: int | None = None  # cell count; defaults to the tree's node count
    seed: int = 0
    tree_index: int = 0

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.c_const is not None and self.c_const < chernoff_constant(self.delta) - 1e-9:
            raise ValueError(
                f"C={self.c_const} below the Chernoff floor "
                f"{chernoff_constant(self.delta):.4f} for delta={self.delta}"
            )

    def resolved_c(self) -> float:
        return self.c_const if self.c_const is not None else chernoff_constant(self.delta)


@dataclass
class RoundRecord:
    round: int
    t: float
    p: float
    threshold: float
    sample_size: int
    outcome: str  # "pass" or "exceeded"


@dataclass
class PushdownResult:
    exceeded: bool
    counts: np.ndarray | None  # per-node conflict sizes when the pass completed
    max_count: int


@dataclass
class LongEstimate:
    sz_estimate: float
    rounds: int  # index of the final round (0 = exact first round)
    exact_first_round: bool
    history: list[RoundRecord] = field(default_factory=list)

    def long_congestion(self, alpha: int) -> float:
        return long_congestion_estimate(self, alpha)


def _intersect_filter(segs: SegmentSet, seg_ids, x0, y0, x1, y1) -> np.ndarray:
    """Chunked closed-box intersection mask for (segment, box) pairs."""
    n = len(seg_ids)
    mask = np.empty(n, dtype=bool)
    for lo in range(0, n, _FILTER_CHUNK):
        sl = slice(lo, min(lo + _FILTER_CHUNK, n))
        ids = seg_ids[sl]
        t0, t1 = clip_params(
            segs.ax[ids], segs.ay[ids], segs.bx[ids], segs.by[ids],
            x0[sl], y0[sl], x1[sl], y1[sl],
        )
        mask[sl] = t0 <= t1
    return mask


def pushdown_threshold(
    reg: RegistrationResult,
    t: float,
    sample: np.ndarray | None = None,
) -> PushdownResult:
    """Exact per-node counts of sampled long segments, or "exceeded".

    `sample` may be None (all segments), a boolean mask, or an index array.
    The pass walks the tree by cell depth; a node's conflict list is its
    parent's list filtered to segments meeting the node's cell, plus its own
    registered-long list.  The pass aborts once any list exceeds t.
    """
    tree = reg.tree
    segs = reg.segments
    n_nodes = tree.node_count

    if sample is None:
        smask = None
    elif sample.dtype == np.bool_:
        smask = sample
    else:
        smask = np.zeros(len(segs), dtype=bool)
        smask[sample] = True

    def own_list(nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        sizes = reg.long_off[nodes + 1] - reg.long_off[nodes]
        starts = reg.long_off[nodes]
        total = int(sizes.sum())
        idx = np.repeat(starts - np.cumsum(sizes) + sizes, sizes) + np.arange(total)
        segs_out = reg.long_idx[idx]
        nodes_out = np.repeat(nodes, sizes)
        if smask is not None:
            keep = smask[segs_out]
            segs_out, nodes_out = segs_out[keep], nodes_out[keep]
        return nodes_out, segs_out

    counts = np.zeros(n_nodes, dtype=np.int64)
    max_count = 0
    # lists awaiting their level, bucketed by cell depth
    buckets: list[list[tuple[np.ndarray, np.ndarray]]] = [[] for _ in range(54)]
    rn, rs = own_list(np.zeros(1, dtype=np.int64))
    buckets[0].append((rn, rs))

    empty_i = np.empty(0, dtype=np.int64)
    for d in range(0, 53):
        chunks = buckets[d]
        buckets[d] = []
        lvl_nodes = tree.nodes_at_depth(d)
        if not chunks and len(lvl_nodes) == 0:
            continue
        if chunks:
            node_arr = np.concatenate([c[0] for c in chunks])
            seg_arr = np.concatenate([c[1] for c in chunks])
        else:
            node_arr, seg_arr = empty_i, empty_i
        del chunks

        if len(node_arr):
            level_counts = np.bincount(node_arr, minlength=n_nodes)
            counts[lvl_nodes] = level_counts[lvl_nodes]
            level_max = int(level_counts[lvl_nodes].max())
            max_count = max(max_count, level_max)
            if level_max > t:
                return PushdownResult(True, None, max_count)

        # push to children: replicate each node's list per child, filter by
        # the child's cell, and splice in the child's own registrations
        order = np.argsort(node_arr, kind="stable")
        node_arr = node_arr[order]
        seg_arr = seg_arr[order]
        uniq_nodes, starts_u = np.unique(node_arr, return_index=True)
        sizes_u = np.diff(np.append(starts_u, len(node_arr)))

        deg = tree.child_off[uniq_nodes + 1] - tree.child_off[uniq_nodes]
        has = deg > 0
        out_children = []
        out_segs = []
        if np.any(has):
            un, st, sz, dg = uniq_nodes[has], starts_u[has], sizes_u[has], deg[has]
            ch_total = int(dg.sum())
            ch_idx = np.repeat(tree.child_off[un] - np.cumsum(dg) + dg, dg) + np.arange(ch_total)
            child_nodes = tree.child_idx[ch_idx]
            rep = np.repeat(sz, dg)
            block_start = np.repeat(st, dg)
            total = int(rep.sum())
            gather = np.repeat(block_start - np.cumsum(rep) + rep, rep) + np.arange(total)
            pair_child = np.repeat(child_nodes, rep)
            pair_seg = seg_arr[gather]
            keep = _intersect_filter(
                segs,
                pair_seg,
                tree.x0f[pair_child],
                tree.y0f[pair_child],
                tree.x0f[pair_child] + tree.sidef[pair_child],
                tree.y0f[pair_child] + tree.sidef[pair_child],
            )
            out_children.append(pair_child[keep])
            out_segs.append(pair_seg[keep])

        # registrations of every child at this level, sampled
        lvl_child_lo = tree.child_off[lvl_nodes]
        lvl_child_hi = tree.child_off[lvl_nodes + 1]
        dg_all = lvl_child_hi - lvl_child_lo
        tot_children = int(dg_all.sum())
        if tot_children:
            ci = np.repeat(lvl_child_lo - np.cumsum(dg_all) + dg_all, dg_all) + np.arange(
                tot_children
            )
            all_children = tree.child_idx[ci]
            on, os_ = own_list(all_children)
            out_children.append(on)
            out_segs.append(os_)

        if out_children:
            oc = np.concatenate(out_children)
            og = np.concatenate(out_segs)
            cd = tree.depth[oc]
            d_order = np.argsort(cd, kind="stable")
            oc, og, cd = oc[d_order], og[d_order], cd[d_order]
            bounds = np.searchsorted(cd, np.arange(54))
            for dd in range(d + 1, 53):
                lo, hi = bounds[dd], bounds[dd + 1]
                if hi > lo:
                    buckets[dd].append((oc[lo:hi], og[lo:hi]))

    return PushdownResult(False, counts, max_count)


def estimate_max_conflict(reg: RegistrationResult, params: SamplingParams) -> LongEstimate:
    """Exponential search for the maximum long-conflict count, with verification.

    Returns sz_estimate with (w.h.p.) sz_estimate <= N <= (1+d)^2/(1-d) * it.
    Deterministic for a fixed (inputs, params.seed).
    """
    n_seg = len(reg.segments)
    m = params.m if params.m is not None else reg.tree.node_count
    c = params.resolved_c()
    delta = params.delta
    t0 = c * math.log(max(m, 2))

    history: list[RoundRecord] = []
    res = pushdown_threshold(reg, t0, None)
    history.append(
        RoundRecord(0, t0, 1.0, t0, n_seg, "pass" if not res.exceeded else "exceeded")
    )
    if not res.exceeded:
        return LongEstimate(float(res.max_count), 0, True, history)

    t = t0
    r = 0
    # beyond this no count can plausibly reach the threshold; finish exactly
    t_cap = 16.0 * max(n_seg, 1)
    while True:
        r += 1
        t = max(math.ceil((1.0 + delta) * t), math.floor(t) + 1)
        if t > t_cap:
            res = pushdown_threshold(reg, math.inf, None)
            history.append(RoundRecord(r, float(t), 1.0, math.inf, n_seg, "pass"))
            return LongEstimate(float(res.max_count), r, False, history)
        p = min(1.0, t0 / t)
        rng = np.random.default_rng([params.seed, params.tree_index, r])
        mask = rng.random(n_seg) < p
        threshold = (1.0 + delta) * t * p
        res = pushdown_threshold(reg, threshold, mask)
        outcome = "exceeded" if res.exceeded else "pass"
        history.append(RoundRecord(r, float(t), p, threshold, int(mask.sum()), outcome))
        if not res.exceeded:
            return LongEstimate(t / (1.0 + delta), r, False, history)


def long_congestion_estimate(est: LongEstimate, alpha: int) -> float:
    """Convert a max-conflict estimate into a long-congestion estimate."""
    return est.sz_estimate * alpha / (1.0 + alpha)
