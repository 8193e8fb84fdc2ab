"""Segmentation-quality metrics: clustering accuracy, Rand index, Dice.

All three are invariant under a global relabeling of the prediction. ACC
and Dice resolve the labeling ambiguity through the optimal assignment on
the contingency table; the Rand index needs no mapping at all.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ArgumentError


def _flat_pair(pred, gt):
    p = np.asarray(pred)
    g = np.asarray(gt)
    if p.shape != g.shape:
        raise ArgumentError(f"grid mismatch: pred {p.shape} vs gt {g.shape}")
    return p.ravel(), g.ravel()


def contingency(pred, gt):
    """Counts matrix C[i, j] = |pred == label_i and gt == label_j|."""
    p, g = _flat_pair(pred, gt)
    pl, pi = np.unique(p, return_inverse=True)
    gl, gi = np.unique(g, return_inverse=True)
    C = np.zeros((len(pl), len(gl)), dtype=np.int64)
    np.add.at(C, (pi, gi), 1)
    return C, pl, gl


def _best_assignment(C):
    """Row->column pairs maximizing the matched count.

    Small tables (both sides at most 2 labels) enumerate the mappings
    outright; larger ones go through the Hungarian solver.
    """
    nr, nc = C.shape
    if nr <= 2 and nc <= 2:
        best, best_pairs = -1, []
        cols = range(nc)
        for perm in itertools.permutations(cols, min(nr, nc)):
            rows = range(len(perm))
            total = int(sum(C[r, c] for r, c in zip(rows, perm)))
            if total > best:
                best = total
                best_pairs = list(zip(rows, perm))
        return best_pairs
    rows, cols = linear_sum_assignment(-C)
    return list(zip(rows.tolist(), cols.tolist()))


def acc(pred, gt) -> float:
    """Fraction of pixels correct under the best label bijection."""
    C, _, _ = contingency(pred, gt)
    pairs = _best_assignment(C)
    matched = sum(int(C[r, c]) for r, c in pairs)
    return matched / int(C.sum())


def rand_index(pred, gt) -> float:
    """Pairwise agreement rate between the two labelings.

    Computed from the contingency counts in exact integer arithmetic:
    with N the number of pixel pairs, T the co-clustered agreements,
    P and Q the same-cluster pair counts of each labeling, the index is
    (N + 2T - P - Q) / N.
    """
    C, _, _ = contingency(pred, gt)
    n = int(C.sum())
    N = n * (n - 1) // 2

    def pairs2(v):
        return int(sum(int(x) * (int(x) - 1) // 2 for x in v))

    T = pairs2(C.ravel())
    P = pairs2(C.sum(axis=1))
    Q = pairs2(C.sum(axis=0))
    if N == 0:
        return 1.0
    return (N + 2 * T - P - Q) / N


def dice(pred, gt, literal: bool = False) -> float:
    """Overlap between predicted and true foreground.

    Ground truth uses 0 for background and positive ids for objects. The
    prediction is first mapped onto ground-truth classes by the same
    optimal assignment ACC uses; unassigned clusters count as background.
    With several objects the per-object coefficients are averaged.

    The standard form 2|o and s| / (|o| + |s|) is returned by default;
    `literal` drops the factor 2 (that variant cannot reach 1 even on a
    perfect match and exists for replication only).
    """
    p, g = _flat_pair(pred, gt)
    if g.min() < 0:
        raise ArgumentError("ground truth labels must be >= 0")
    objects = [v for v in np.unique(g) if v > 0]
    if not objects:
        raise ArgumentError("ground truth has no foreground object")

    C, pl, gl = contingency(p, g)
    pairs = _best_assignment(C)
    mapping = {int(pl[r]): int(gl[c]) for r, c in pairs}
    mapped = np.array([mapping.get(int(v), 0) for v in pl], dtype=np.int64)
    pm = mapped[np.searchsorted(pl, p)]

    scores = []
    for o in objects:
        po = pm == o
        go = g == o
        inter = int(np.count_nonzero(po & go))
        denom = int(po.sum()) + int(go.sum())
        num = inter if literal else 2 * inter
        scores.append(num / denom)
    return float(np.mean(scores))
