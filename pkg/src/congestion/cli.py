"""Command-line front end: ingest segments, estimate or cross-check, report JSON.

Input formats (text, '#' starts a comment, blank lines ignored):
  segments mode   one "x1 y1 x2 y2" row per line
  polyline mode   one "x y" vertex per line; consecutive vertices form segments

Modes:
  estimate  run the full estimator; JSON report (written to --out if given,
            else printed), human summary on stdout when --out is given
  oracle    brute-force reference values for small inputs (--oracle-cap)
  bench     time the estimator on doubling random-walk sizes; CSV of n,seconds
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .estimator import (
    DEFAULT_ALPHA,
    DEFAULT_DELTA,
    DEFAULT_EPS,
    congestion_estimate,
)
from .generators import random_walk
from .geom import SegmentSet

BENCH_SIZES = (10_000, 20_000, 40_000, 80_000)


class InputError(ValueError):
    pass


def parse_input(path: str, mode: str = "segments") -> tuple[np.ndarray, list[str]]:
    """Parse a segment or polyline file; returns (rows, warnings).

    Zero-length segments are dropped and counted in the warnings.  Malformed
    lines raise InputError with the 1-based line number.
    """
    rows: list[tuple[float, float, float, float]] = []
    vertices: list[tuple[float, float]] = []
    expected = 2 if mode == "polyline" else 4
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) != expected:
                raise InputError(
                    f"{path}:{lineno}: expected {expected} numbers, got {len(parts)}"
                )
            try:
                vals = [float(p) for p in parts]
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
            if not all(np.isfinite(vals)):
                raise InputError(f"{path}:{lineno}: non-finite coordinate")
            if mode == "polyline":
                vertices.append((vals[0], vals[1]))
            else:
                rows.append(tuple(vals))
    if mode == "polyline":
        rows = [
            (*vertices[i], *vertices[i + 1]) for i in range(len(vertices) - 1)
        ]
    arr = np.asarray(rows, dtype=np.float64).reshape(-1, 4)
    keep = np.hypot(arr[:, 2] - arr[:, 0], arr[:, 3] - arr[:, 1]) > 0.0
    warnings = []
    dropped = int((~keep).sum())
    if dropped:
        warnings.append(f"dropped {dropped} zero-length segment(s)")
        arr = arr[keep]
    return arr, warnings


def _summary(report_dict: dict) -> str:
    est = report_dict["congestion_estimate"]
    ub = report_dict["implied_upper_bound"]
    return (
        f"congestion estimate: {est:.6g} "
        f"(true congestion <= {ub:.6g} w.h.p., factor "
        f"{report_dict['factors']['end_to_end']:.4g})"
    )


def _run_estimate(args, rows: np.ndarray, warnings: list[str]) -> dict:
    report = congestion_estimate(
        rows, eps=args.eps, delta=args.delta, alpha=args.alpha, seed=args.seed
    )
    report.warnings = warnings + report.warnings
    return report.to_json_dict()


def _run_oracle(args, rows: np.ndarray, warnings: list[str]) -> dict:
    from .estimator import build_shifted_registered_tree, normalization_for
    from .candidates import generate_candidate_squares
    from .oracle import (
        dense_grid_congestion_lower_bound,
        naive_max_conflict,
        naive_quadtree_congestion,
    )

    segs = SegmentSet.from_segments(rows)
    out: dict = {"n_segments": len(segs), "warnings": warnings}
    out["dense_grid_lower_bound"] = dense_grid_congestion_lower_bound(segs)
    if len(segs) and len(segs) <= args.oracle_cap:
        norm = normalization_for(segs)
        nsegs = norm.apply(segs)
        cands = generate_candidate_squares(nsegs, args.eps)
        reg = build_shifted_registered_tree(nsegs, cands, args.alpha, 0.0)
        cong = naive_quadtree_congestion(reg, cap=args.oracle_cap)
        out["naive_tree_congestion"] = float(cong.max()) if len(cong) else 0.0
        out["naive_max_long_count"] = naive_max_conflict(reg, cap=args.oracle_cap)
        out["tree_node_count"] = reg.tree.node_count
    return out


def _run_bench(args) -> tuple[dict, str]:
    lines = ["n,seconds"]
    results = []
    for n in BENCH_SIZES:
        rows = random_walk(n, seed=args.seed)
        t0 = time.perf_counter()
        congestion_estimate(
            rows, eps=args.eps, delta=args.delta, alpha=args.alpha, seed=args.seed
        )
        dt = time.perf_counter() - t0
        lines.append(f"{n},{dt:.3f}")
        results.append({"n": n, "seconds": dt})
    return {"bench": results}, "\n".join(lines) + "\n"


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(
        prog="congestion",
        description="Constant-factor congestion (c-packedness) estimation for planar segments",
    )
    ap.add_argument("--input", metavar="PATH", help="segment or polyline file")
    ap.add_argument(
        "--polyline", action="store_true", help="treat input as one vertex per line"
    )
    ap.add_argument("--eps", type=float, default=DEFAULT_EPS)
    ap.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    ap.add_argument("--alpha", type=int, default=DEFAULT_ALPHA)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument(
        "--mode", choices=("estimate", "oracle", "bench"), default="estimate"
    )
    ap.add_argument("--out", metavar="PATH", help="write the report here")
    ap.add_argument(
        "--oracle-cap",
        type=int,
        default=2000,
        dest="oracle_cap",
        help="refuse quadratic oracles above this many segments",
    )
    args = ap.parse_args(argv)

    try:
        if args.mode == "bench":
            payload, csv_text = _run_bench(args)
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write(csv_text)
                print(csv_text, end="")
            else:
                print(csv_text, end="")
            return 0

        if not args.input:
            ap.error("--input is required for estimate/oracle modes")
        rows, warnings = parse_input(
            args.input, "polyline" if args.polyline else "segments"
        )
        if args.mode == "estimate":
            payload = _run_estimate(args, rows, warnings)
        else:
            payload = _run_oracle(args, rows, warnings)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        if args.mode == "estimate":
            print(_summary(payload))
        else:
            print(f"oracle report written to {args.out}")
    else:
        print(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
