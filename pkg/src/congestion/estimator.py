"""End-to-end congestion estimation: candidates, three shifted trees, combine.

The estimate is feasible (a lower bound on the true congestion, w.h.p.) and
within a constant factor of it.  The factor chain, asserted at import time:

* candidate squares lose 6 + eps,
* rounding candidate squares to shifted quadtree cells loses 6 * sqrt(2),
* estimating one tree's congestion from its exact short congestion and the
  sampled long-count estimate loses 2 * gamma, where
  gamma = (1+alpha)/alpha * sqrt(8) * (1+delta)^2 / (1-delta).

With delta -> 0 and alpha -> infinity the product approaches 288 + eps; the
report carries the honest default-parameter product, which is what the
implied upper bound uses.

Input segments are translated and scaled by a power of two into the core box
[0.375, 0.625)^2, so every candidate-square corner stays inside the unit
square before shifting and the estimate is exactly invariant under
power-of-two rescaling of the input.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .candidates import CandidateSquareSet, generate_candidate_squares
from .geom import Segment, SegmentSet, validate_segments
from .long_congestion import (
    LongEstimate,
    SamplingParams,
    estimate_max_conflict,
    long_congestion_estimate,
)
from .quadtree import MAX_DEPTH, SHIFTS, lca_depth, quantize, _truncate
from .registration import RegistrationResult, build_registered_tree
from .short_congestion import short_congestion_all

DEFAULT_EPS = 0.1
DEFAULT_DELTA = 0.25
DEFAULT_ALPHA = 8

_CORE_LO = 0.375
_CORE_SPAN = 0.25


def per_tree_gamma(alpha: int, delta: float) -> float:
    """Loss of the long-congestion estimate against one tree's congestion."""
    return (1.0 + alpha) / alpha * math.sqrt(8.0) * (1.0 + delta) ** 2 / (1.0 - delta)


def tree_factor(alpha: int, delta: float) -> float:
    """One tree's estimate is within this factor of the tree's congestion."""
    return 2.0 * per_tree_gamma(alpha, delta)


def end_to_end_factor(eps: float, alpha: int, delta: float) -> float:
    """The honest approximation factor at the given parameters."""
    return (6.0 + eps) * 6.0 * math.sqrt(2.0) * tree_factor(alpha, delta)


def asymptotic_factor(eps: float) -> float:
    """Limit factor as delta -> 0, alpha -> inf (6 * 6 * 4 * 2 = 288)."""
    return 288.0 + eps


# the factor chain must multiply out as documented
assert abs(tree_factor(DEFAULT_ALPHA, DEFAULT_DELTA) - 13.258252147) < 1e-6
assert (
    abs(
        end_to_end_factor(DEFAULT_EPS, DEFAULT_ALPHA, DEFAULT_DELTA)
        - (6.0 + DEFAULT_EPS) * 6.0 * math.sqrt(2.0) * 13.258252147
    )
    < 1e-4
)
assert abs(6 * 6 * 4 * 2 - (asymptotic_factor(0.0))) < 1e-12


@dataclass
class Normalization:
    offset_x: float
    offset_y: float
    scale: float  # power of two; normalized = lo + (x - offset) / scale

    def apply(self, segs: SegmentSet) -> SegmentSet:
        return SegmentSet(
            _CORE_LO + (segs.ax - self.offset_x) / self.scale,
            _CORE_LO + (segs.ay - self.offset_y) / self.scale,
            _CORE_LO + (segs.bx - self.offset_x) / self.scale,
            _CORE_LO + (segs.by - self.offset_y) / self.scale,
        )


def normalization_for(segs: SegmentSet) -> Normalization:
    lox = float(np.min(np.minimum(segs.ax, segs.bx)))
    loy = float(np.min(np.minimum(segs.ay, segs.by)))
    hix = float(np.max(np.maximum(segs.ax, segs.bx)))
    hiy = float(np.max(np.maximum(segs.ay, segs.by)))
    span = max(hix - lox, hiy - loy)
    if span <= 0.0:
        span = 1.0
    # smallest power of two >= span / _CORE_SPAN, computed exactly
    mant, e = np.frexp(span / _CORE_SPAN)
    scale = math.ldexp(1.0, int(e) - 1 if mant == 0.5 else int(e))
    return Normalization(lox, loy, scale)


@dataclass
class TreeEstimate:
    shift: float
    short_congestion: float
    long_congestion_estimate: float
    tree_estimate: float
    rounds: int
    exact_first_round: bool
    node_count: int
    sz_estimate: float


@dataclass
class EstimateReport:
    congestion_estimate: float
    implied_upper_bound: float
    per_tree: list[TreeEstimate]
    eps: float
    delta: float
    alpha: int
    c_const: float
    seed: int
    factor: float  # default-parameter end-to-end factor used in the bound
    factor_asymptotic: float
    n_segments: int
    warnings: list[str] = field(default_factory=list)
    timings_ms: dict = field(default_factory=dict)

    def to_json_dict(self, include_timings: bool = True) -> dict:
        out = {
            "congestion_estimate": self.congestion_estimate,
            "implied_upper_bound": self.implied_upper_bound,
            "per_tree": [
                {
                    "short_congestion": t.short_congestion,
                    "long_congestion_estimate": t.long_congestion_estimate,
                    "tree_estimate": t.tree_estimate,
                    "rounds": t.rounds,
                }
                for t in self.per_tree
            ],
            "params": {
                "eps": self.eps,
                "delta": self.delta,
                "alpha": self.alpha,
                "C": self.c_const,
                "seed": self.seed,
            },
            "factors": {
                "per_tree": tree_factor(self.alpha, self.delta),
                "end_to_end": self.factor,
                "asymptotic": self.factor_asymptotic,
            },
            "n_segments": self.n_segments,
            "warnings": list(self.warnings),
        }
        if include_timings:
            out["timings_ms"] = dict(self.timings_ms)
        return out


def _candidate_lca_cells(cands: CandidateSquareSet, shift: float):
    """LCA cell of each candidate square's opposite corners, in shifted coords."""
    if len(cands) == 0:
        e = np.empty(0, np.int64)
        return e, e, e
    hi_cap = 1.0 - 2.0**-50
    ax = np.clip(cands.centers[:, 0] - cands.radii, 0.0, hi_cap) + shift
    ay = np.clip(cands.centers[:, 1] - cands.radii, 0.0, hi_cap) + shift
    bx = np.clip(cands.centers[:, 0] + cands.radii, 0.0, hi_cap) + shift
    by = np.clip(cands.centers[:, 1] + cands.radii, 0.0, hi_cap) + shift
    iax, iay = quantize(ax, ay)
    ibx, iby = quantize(bx, by)
    d = lca_depth(iax, iay, ibx, iby)
    return _truncate(iax, d), _truncate(iay, d), d


def build_shifted_registered_tree(
    norm_segs: SegmentSet,
    cands: CandidateSquareSet,
    alpha: int,
    shift: float,
) -> RegistrationResult:
    """One shifted augmented tree: endpoints as points, candidate LCAs as cells."""
    px = np.concatenate([norm_segs.ax, norm_segs.bx]) + shift
    py = np.concatenate([norm_segs.ay, norm_segs.by]) + shift
    ecx, ecy, edp = _candidate_lca_cells(cands, shift)
    shifted = norm_segs.shifted(shift, shift)
    return build_registered_tree(
        px, py, ecx, ecy, edp, shifted, alpha, shift=(shift, shift)
    )


def quadtree_congestion_estimate(
    reg: RegistrationResult, params: SamplingParams
) -> TreeEstimate:
    """max(exact short congestion, long-congestion estimate) for one tree."""
    table = short_congestion_all(reg)
    est: LongEstimate = estimate_max_conflict(reg, params)
    long_hat = long_congestion_estimate(est, reg.alpha)
    return TreeEstimate(
        shift=reg.tree.shift[0],
        short_congestion=table.max_short_cong,
        long_congestion_estimate=long_hat,
        tree_estimate=max(table.max_short_cong, long_hat),
        rounds=est.rounds,
        exact_first_round=est.exact_first_round,
        node_count=reg.tree.node_count,
        sz_estimate=est.sz_estimate,
    )


def congestion_estimate(
    segments: Sequence[Segment] | SegmentSet | np.ndarray,
    eps: float = DEFAULT_EPS,
    delta: float = DEFAULT_DELTA,
    alpha: int = DEFAULT_ALPHA,
    seed: int = 0,
    c_const: float | None = None,
) -> EstimateReport:
    """Feasible congestion estimate with an implied constant-factor upper bound.

    W.h.p. the true congestion lies in [estimate, factor * estimate] where
    factor = end_to_end_factor(eps, alpha, delta).  Deterministic for fixed
    (input, parameters, seed).
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if alpha < 1 or int(alpha) != alpha:
        raise ValueError("alpha must be an integer >= 1")
    alpha = int(alpha)
    factor = end_to_end_factor(eps, alpha, delta)
    c_value = SamplingParams(delta=delta, c_const=c_const).resolved_c()

    timings: dict = {}
    t_start = time.perf_counter()
    warnings: list[str] = []

    segs, dropped = validate_segments(segments)
    # a registration grid below the depth cap needs length >= alpha * 2^-50
    if len(segs):
        norm0 = normalization_for(segs)
        tiny = alpha * 2.0**-50 * norm0.scale
        segs, tiny_dropped = validate_segments(segs, min_length=tiny)
        dropped += tiny_dropped
    if dropped:
        warnings.append(f"dropped {dropped} zero-length or degenerate segment(s)")

    def finish(report: EstimateReport) -> EstimateReport:
        report.timings_ms["total"] = (time.perf_counter() - t_start) * 1e3
        return report

    base = EstimateReport(
        congestion_estimate=0.0,
        implied_upper_bound=0.0,
        per_tree=[
            TreeEstimate(s, 0.0, 0.0, 0.0, 0, True, 0, 0.0) for s in SHIFTS
        ],
        eps=eps,
        delta=delta,
        alpha=alpha,
        c_const=c_value,
        seed=seed,
        factor=factor,
        factor_asymptotic=asymptotic_factor(eps),
        n_segments=len(segs),
        warnings=warnings,
        timings_ms=timings,
    )
    if len(segs) == 0:
        return finish(base)

    t0 = time.perf_counter()
    norm = normalization_for(segs)
    nsegs = norm.apply(segs)
    timings["normalize"] = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    cands = generate_candidate_squares(nsegs, eps)
    timings["candidates"] = (time.perf_counter() - t0) * 1e3

    per_tree: list[TreeEstimate] = []
    for t_idx, shift in enumerate(SHIFTS):
        t0 = time.perf_counter()
        reg = build_shifted_registered_tree(nsegs, cands, alpha, shift)
        timings[f"tree{t_idx}_build"] = (time.perf_counter() - t0) * 1e3
        t0 = time.perf_counter()
        params = SamplingParams(
            delta=delta,
            c_const=c_value,
            m=reg.tree.node_count,
            seed=seed,
            tree_index=t_idx,
        )
        per_tree.append(quadtree_congestion_estimate(reg, params))
        timings[f"tree{t_idx}_estimate"] = (time.perf_counter() - t0) * 1e3
        del reg

    base.per_tree = per_tree
    base.congestion_estimate = max(t.tree_estimate for t in per_tree)
    base.implied_upper_bound = factor * base.congestion_estimate
    return finish(base)
