"""Seed-deterministic instance generators for the CLI bench mode and tests.

All generators return (n, 4) float arrays of (x1, y1, x2, y2) rows; wrap with
SegmentSet.from_segments or feed them straight to congestion_estimate.
"""

from __future__ import annotations

import math

import numpy as np


def random_walk(n: int, seed: int = 0, step: float = 1.0) -> np.ndarray:
    """Unit-step random walk with uniform headings: n segments, n+1 vertices."""
    rng = np.random.default_rng([seed, 1])
    theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
    dx = np.cos(theta) * step
    dy = np.sin(theta) * step
    x = np.concatenate([[0.0], np.cumsum(dx)])
    y = np.concatenate([[0.0], np.cumsum(dy)])
    return np.stack([x[:-1], y[:-1], x[1:], y[1:]], axis=1)


def uniform_segments(n: int, seed: int = 0, max_len: float = 0.2) -> np.ndarray:
    """Segments with a uniform endpoint and a uniform offset of bounded length."""
    rng = np.random.default_rng([seed, 2])
    a = rng.random((n, 2))
    ang = rng.uniform(0.0, 2.0 * math.pi, size=n)
    ln = rng.uniform(0.0, max_len, size=n) + 1e-9
    b = a + np.stack([np.cos(ang), np.sin(ang)], axis=1) * ln[:, None]
    return np.concatenate([a, b], axis=1)


def k_star(k: int, center: tuple[float, float] = (0.0, 0.0)) -> np.ndarray:
    """k axis-parallel unit segments crossing at one point; congestion 2k.

    Alternating horizontal/vertical copies through the common midpoint: every
    square centered there sees k full-width chords, and no square does better.
    """
    cx, cy = center
    rows = []
    for i in range(k):
        if i % 2 == 0:
            rows.append((cx - 0.5, cy, cx + 0.5, cy))
        else:
            rows.append((cx, cy - 0.5, cx, cy + 0.5))
    return np.asarray(rows, dtype=np.float64)


def rotated_star(k: int, center: tuple[float, float] = (0.0, 0.0)) -> np.ndarray:
    """k unit segments through one point at evenly spread angles.

    Every cell around the center meets all k segments, so the maximum
    long-conflict count is exactly k (plus nothing anywhere else).  Two tiny
    anchor segments skew the bounding box so the center never lands on a
    dyadic grid line after normalization.
    """
    cx, cy = center
    ang = math.pi * np.arange(k) / k + 0.05  # avoid axis-exact headings
    dx = 0.5 * np.cos(ang)
    dy = 0.5 * np.sin(ang)
    rows = np.stack([cx - dx, cy - dy, cx + dx, cy + dy], axis=1)
    a1 = cx + 0.83650417295, cy + 0.7155417527999
    anchors = np.asarray(
        [
            [a1[0], a1[1], a1[0] + 1e-3, a1[1]],
            [cx - 0.700317521, cy - 0.61923877, cx - 0.700317521 + 1e-3, cy - 0.61923877],
        ]
    )
    return np.concatenate([rows, anchors])


def zigzag_comb(k_teeth: int, height: float = 1.0, spacing: float | None = None) -> np.ndarray:
    """Zigzag with k teeth: 2k steep legs across a narrow band.

    With spacing << height the congestion is exactly
    4k * sqrt(1 + (spacing / (2 * height))^2): each leg's chord in a square of
    radius r is at most 2r times that slant factor, and the square of radius
    height/4 over the comb's middle attains it for all 2k legs at once.
    """
    if spacing is None:
        spacing = min(1e-3 * height, height / (4.0 * max(k_teeth, 1)))
    m = 2 * k_teeth + 1
    x = np.arange(m) * (spacing / 2.0)
    y = np.where(np.arange(m) % 2 == 0, 0.0, height)
    return np.stack([x[:-1], y[:-1], x[1:], y[1:]], axis=1)


def zigzag_comb_congestion(k_teeth: int, height: float = 1.0, spacing: float | None = None) -> float:
    """Closed-form congestion of zigzag_comb with the same parameters."""
    if spacing is None:
        spacing = min(1e-3 * height, height / (4.0 * max(k_teeth, 1)))
    return 4.0 * k_teeth * math.sqrt(1.0 + (spacing / (2.0 * height)) ** 2)
