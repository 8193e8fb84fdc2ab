"""Pixel-level normalized spectral clustering (the comparison baseline).

Solves the relaxed normalized-cut problem L u = lambda D u on the pixel
graph by the substitution y = D^{1/2} u: the smallest eigenvectors of
D^{-1/2} (D - W) D^{-1/2} are computed and mapped back with
u = D^{-1/2} y, then the rows of the embedding are clustered.
"""

from __future__ import annotations

import time

import numpy as np

from .affinity import AffinityParams, degree_and_laplacian, edge_map, pixel_W
from .clustering import fuzzy_cmeans, kmeans
from .errors import CapacityError
from .image_io import GrayImage, LabelMap

NCUT_CAP_DEFAULT = 128 * 128


def ncut(img: GrayImage, p: AffinityParams, k: int, seed: int = 42,
         cap: int = NCUT_CAP_DEFAULT, regularize: bool = False,
         clusterer: str = "kmeans", keep_matrices: bool = False) -> LabelMap:
    """Segment `img` into k clusters on the full pixel graph.

    Deliberately capped: the pixel graph costs O(n * r^2) memory and the
    eigensolve dominates quickly. Larger images belong to fsc/mfsc.
    """
    h, w = img.data.shape
    n = h * w
    if n > cap:
        raise CapacityError(
            f"ncut is capped at {cap} pixels (got {n}); use fsc or mfsc"
        )
    timings = {"decompose": 0.0, "merge": 0.0}
    t0 = time.perf_counter()
    edges = edge_map(img)
    W = pixel_W(img, edges, p, cap=cap)
    d, L = degree_and_laplacian(W, regularize=regularize)
    timings["affinity"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    from .eigen import smallest_k_auto

    eig = smallest_k_auto(L, k, seed=seed)
    # back-substitution to the generalized eigenvectors
    U = eig.vectors / np.sqrt(d)[:, None]
    timings["eigen"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if clusterer == "fcm":
        labels = fuzzy_cmeans(U, k, seed=seed).labels
    else:
        labels = kmeans(U, k, seed=seed)
    timings["fcm"] = time.perf_counter() - t0

    meta = {"algorithm": "ncut", "n": n, "eigenvalues": eig.values.tolist()}
    if keep_matrices:
        meta["W"] = W
    return LabelMap(
        labels=labels.reshape(h, w).astype(np.int64),
        k=k,
        width=img.orig_width,
        height=img.orig_height,
        timings=timings,
        meta=meta,
    )
