"""Constant-factor congestion (c-packedness) estimation for planar segment sets.

The main entry point is congestion_estimate; the submodules expose the
pipeline stages (candidate squares, shifted quadtrees, registration, short
congestion, sampled long-congestion estimation) and brute-force oracles.
"""

from .geom import (
    Point,
    Segment,
    SegmentSet,
    Square,
    clip_segment_to_square,
    segment,
    segments_intersecting_square,
    square_congestion,
)
from .quadtree import (
    CanonicalCell,
    CompressedQuadtree,
    QTNode,
    build_compressed_quadtree,
    shifted_quadtrees,
    smallest_containing_cell,
)
from .candidates import CandidateSquareSet, generate_candidate_squares
from .registration import (
    RegistrationResult,
    build_augmented_quadtree,
    registration_cells,
)
from .short_congestion import ShortCongestionTable, short_congestion_all
from .long_congestion import (
    LongEstimate,
    SamplingParams,
    estimate_max_conflict,
    long_congestion_estimate,
    pushdown_threshold,
)
from .estimator import (
    EstimateReport,
    TreeEstimate,
    congestion_estimate,
    end_to_end_factor,
    quadtree_congestion_estimate,
)
from .oracle import (
    OracleBracket,
    dense_grid_congestion_lower_bound,
    naive_max_conflict,
    naive_quadtree_congestion,
)

__version__ = "0.1.0"

__all__ = [
    "Point",
    "Segment",
    "SegmentSet",
    "Square",
    "segment",
    "clip_segment_to_square",
    "square_congestion",
    "segments_intersecting_square",
    "CanonicalCell",
    "CompressedQuadtree",
    "QTNode",
    "smallest_containing_cell",
    "build_compressed_quadtree",
    "shifted_quadtrees",
    "CandidateSquareSet",
    "generate_candidate_squares",
    "RegistrationResult",
    "registration_cells",
    "build_augmented_quadtree",
    "ShortCongestionTable",
    "short_congestion_all",
    "SamplingParams",
    "LongEstimate",
    "pushdown_threshold",
    "estimate_max_conflict",
    "long_congestion_estimate",
    "EstimateReport",
    "TreeEstimate",
    "congestion_estimate",
    "quadtree_congestion_estimate",
    "end_to_end_factor",
    "OracleBracket",
    "naive_quadtree_congestion",
    "naive_max_conflict",
    "dense_grid_congestion_lower_bound",
    "__version__",
]
