"""Piecewise-constant synthetic images with exact ground truth.

These drive the self-contained quality checks and the scaling benchmark;
no external dataset is required to exercise the pipelines.
"""

from __future__ import annotations

import numpy as np

from .image_io import GrayImage


def _noisy(base: np.ndarray, noise: float, seed: int) -> np.ndarray:
    if noise > 0:
        rng = np.random.default_rng(seed)
        base = base + rng.normal(0.0, noise, base.shape)
    return np.clip(base, 0.0, 1.0)


def two_region(side: int, boundary: float = 0.5, lo: float = 0.2, hi: float = 0.8,
               noise: float = 0.0, seed: int = 0):
    """Vertical two-region image; returns (GrayImage, ground-truth labels)."""
    cut = int(round(boundary * side))
    base = np.full((side, side), lo)
    base[:, cut:] = hi
    gt = np.zeros((side, side), dtype=np.int64)
    gt[:, cut:] = 1
    return GrayImage(_noisy(base, noise, seed)), gt


def four_region(side: int, noise: float = 0.0, seed: int = 0):
    """Four constant quadrants with distinct intensities."""
    half = side // 2
    base = np.empty((side, side))
    gt = np.empty((side, side), dtype=np.int64)
    for idx, (ys, xs) in enumerate(
        [(slice(0, half), slice(0, half)), (slice(0, half), slice(half, side)),
         (slice(half, side), slice(0, half)), (slice(half, side), slice(half, side))]
    ):
        base[ys, xs] = 0.2 + 0.2 * idx
        gt[ys, xs] = idx
    return GrayImage(_noisy(base, noise, seed)), gt


def stripes(side: int, width: int = 16, lo: float = 0.2, hi: float = 0.8,
            noise: float = 0.0, seed: int = 0):
    """Vertical stripes of fixed pixel width, alternating two intensities.

    The number of regions grows with the side, so the benchmark workload
    keeps structure at every scale instead of collapsing into a handful of
    giant blocks.
    """
    cols = np.arange(side) // width
    base = np.where(cols % 2 == 0, lo, hi)[None, :] * np.ones((side, 1))
    gt = (cols % 2).astype(np.int64)[None, :] * np.ones((side, 1), dtype=np.int64)
    return GrayImage(_noisy(base, noise, seed)), gt
