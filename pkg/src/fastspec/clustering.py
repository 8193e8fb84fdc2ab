"""k-means and Fuzzy C-means over embedded row-points.

Both take an (n, dim) array of points, one row per pixel or superpixel,
and explicit seeds so runs are reproducible end to end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError

_TINY = 1e-12


@dataclass
class FuzzyResult:
    memberships: np.ndarray  # (n, k), rows sum to 1
    centers: np.ndarray      # (k, dim)
    labels: np.ndarray       # argmax memberships, ties to the lowest index


def _check_points(X, k):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if not np.isfinite(X).all():
        raise ArgumentError("points contain non-finite values")
    if k < 1:
        raise ArgumentError(f"k must be >= 1, got {k}")
    if X.shape[0] < k:
        raise ArgumentError(f"need at least k = {k} points, got {X.shape[0]}")
    return X


def _sq_dists(X, C):
    # ||x - c||^2 via the expansion; clamp tiny negatives from cancellation
    d2 = (
        np.einsum("ij,ij->i", X, X)[:, None]
        - 2.0 * (X @ C.T)
        + np.einsum("ij,ij->i", C, C)[None, :]
    )
    np.maximum(d2, 0.0, out=d2)
    return d2


def _kpp_init(X, k, rng):
    """k-means++ seeding."""
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = _sq_dists(X, centers[:1]).ravel()
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[c] = X[rng.integers(n)]
        else:
            centers[c] = X[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, _sq_dists(X, centers[c : c + 1]).ravel())
    return centers


def kmeans(points, k: int, seed: int = 42, tol: float = 1e-6,
           max_iter: int = 300) -> np.ndarray:
    """Lloyd iterations from a k-means++ start; returns integer labels.

    Stops when the largest center shift drops below `tol` or after
    `max_iter` rounds. An emptied cluster is reseeded from the point
    farthest from its assigned center.
    """
    X = _check_points(points, k)
    rng = np.random.default_rng(seed)
    centers = _kpp_init(X, k, rng)
    labels = np.zeros(X.shape[0], dtype=np.int64)
    for _ in range(max_iter):
        d2 = _sq_dists(X, centers)
        labels = np.argmin(d2, axis=1)
        new_centers = centers.copy()
        for c in range(k):
            sel = labels == c
            if sel.any():
                new_centers[c] = X[sel].mean(axis=0)
            else:
                far = int(np.argmax(d2[np.arange(len(labels)), labels]))
                new_centers[c] = X[far]
                labels[far] = c
        shift = np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max()
        centers = new_centers
        if shift < tol:
            break
    return np.argmin(_sq_dists(X, centers), axis=1)


def fuzzy_cmeans(points, k: int, fuzzifier: float = 2.0, seed: int = 42,
                 tol: float = 1e-5, max_iter: int = 300,
                 check_objective: bool = False) -> FuzzyResult:
    """Standard Fuzzy C-means; centers start from a k-means++ draw.

    Convergence is declared when the largest membership change falls below
    `tol`. A point coinciding with a center gets full membership in the
    nearest center. With `check_objective` the objective is asserted to be
    non-increasing every iteration (debugging aid).
    """
    X = _check_points(points, k)
    if fuzzifier <= 1:
        raise ArgumentError(f"fuzzifier must be > 1, got {fuzzifier}")
    rng = np.random.default_rng(seed)
    centers = _kpp_init(X, k, rng)
    expo = 1.0 / (fuzzifier - 1.0)
    U = None
    prev_obj = np.inf
    for _ in range(max_iter):
        d2 = _sq_dists(X, centers)
        coincident = d2 < _TINY
        inv = (d2 + _TINY) ** (-expo)
        new_U = inv / inv.sum(axis=1, keepdims=True)
        hit = coincident.any(axis=1)
        if hit.any():
            new_U[hit] = 0.0
            new_U[hit, np.argmax(coincident[hit], axis=1)] = 1.0
        if check_objective:
            obj = float((new_U ** fuzzifier * d2).sum())
            assert obj <= prev_obj + 1e-9, "objective increased"
            prev_obj = obj
        if U is not None and np.abs(new_U - U).max() < tol:
            U = new_U
            break
        U = new_U
        Um = U ** fuzzifier
        centers = (Um.T @ X) / np.maximum(Um.sum(axis=0)[:, None], _TINY)
    labels = np.argmax(U, axis=1)
    return FuzzyResult(memberships=U, centers=centers, labels=labels)
