"""Multiscale Fast Spectral Clustering: bottom-up merging along the quad-tree.

Every node at the start level begins with an identity clustering indicator
over its own superpixels. The merge right above the start level therefore
sees an unprojected principal submatrix of the similarity, and its small
eigenproblem is that submatrix's own normalized Laplacian: each region is
summarized against its internal connectivity. Every later merge stacks the
four child indicators block-diagonally and projects the corresponding
principal submatrix of the global normalized Laplacian through the stack.
The stacked indicator keeps orthonormal columns through the whole recursion
(identity blocks at the start, orthonormal eigenvector factors after), so
the projected step is plain Rayleigh-Ritz and its spectrum stays inside
[0, 2]. No defuzzification happens at interior levels; indicators stay
continuous until the root, where the usual pixel-level fuzzy clustering
runs once.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .affinity import (
    AffinityParams,
    PIXEL_CAP_DEFAULT,
    build_H,
    degree_and_laplacian,
    edge_map,
    superpixel_W_approx,
    superpixel_W_exact,
)
from .clustering import fuzzy_cmeans, kmeans
from .eigen import smallest_k_auto
from .errors import ArgumentError
from .image_io import GrayImage, LabelMap
from .quadtree import QuadNode, QuadTree, decompose, leaf_label_map, nodes_at_level, superpixel_stats


@dataclass
class NodeClustering:
    """Continuous clustering indicator for the superpixels under one node."""

    node: QuadNode
    Q: np.ndarray               # (superpixels under node, retained components)
    superpixel_ids: np.ndarray  # global leaf ids of the rows, in order
    identity: bool = False      # Q is the identity (start-level state)


def init_level(tree: QuadTree, l_init: int) -> list:
    """Identity indicators for every node at the start level.

    Leaves sitting above l_init stand in for their missing subtrees
    (single-superpixel nodes with a 1x1 identity).
    """
    out = []
    for node in nodes_at_level(tree, l_init):  # validates the range
        count = node.leaf_hi - node.leaf_lo
        out.append(
            NodeClustering(
                node=node,
                Q=np.eye(count),
                superpixel_ids=np.arange(node.leaf_lo, node.leaf_hi),
                identity=True,
            )
        )
    return out


def _reduce(parent: QuadNode, children: list, Wt: sp.spmatrix, Ln: sp.spmatrix,
            k_out: int, seed: int, tol: float, record: list | None = None,
            regularize: bool = False):
    """Shared merge step: assemble, restrict, project, eigendecompose.

    Wt and Ln are the global superpixel similarity and its normalized
    Laplacian. With identity children (the merge right after the start
    level) the projected similarity is just the parent's principal
    submatrix of Wt, so its own degrees are positive and the small problem
    is that submatrix's normalized Laplacian: within-block structure is
    measured against within-block connectivity. Once the indicators carry
    signed eigenvector entries those projected degrees stop being degrees,
    so later merges project the principal submatrix of Ln through the
    stacked indicator instead and keep the Ritz directions.

    Returns (NodeClustering, seconds spent in the eigensolver).
    """
    ids = np.concatenate([c.superpixel_ids for c in children])
    expected = np.arange(parent.leaf_lo, parent.leaf_hi)
    if len(ids) != len(expected) or not np.array_equal(np.sort(ids), expected):
        raise ArgumentError("children do not tile the parent's superpixels")
    lo, hi = parent.leaf_lo, parent.leaf_hi
    whole = lo == 0 and hi == Ln.shape[0]

    all_identity = all(c.identity for c in children)
    if all_identity:
        # block-diagonal of identities is the identity: no projection, and
        # the degrees of the restricted similarity are honest local degrees
        if whole:
            L_red = Ln
        else:
            W_sub = Wt[lo:hi, lo:hi].tocsr()
            _, L_red = degree_and_laplacian(W_sub, regularize=regularize)
        e = hi - lo
        Q_asm = None
    else:
        L_sub = Ln if whole else Ln[lo:hi, lo:hi]
        sizes = [(c.Q.shape[0], c.Q.shape[1]) for c in children]
        s = sum(a for a, _ in sizes)
        e = sum(b for _, b in sizes)
        Q_asm = np.zeros((s, e))
        ro = co = 0
        for c in children:
            a, b = c.Q.shape
            Q_asm[ro : ro + a, co : co + b] = c.Q
            ro += a
            co += b
        L_red = Q_asm.T @ (L_sub @ Q_asm)
        L_red = (L_red + L_red.T) * 0.5

    k_eff = min(k_out, e)  # degenerate merges keep every available column
    t0 = time.perf_counter()
    eig = smallest_k_auto(L_red, k_eff, tol=tol, seed=seed)
    eigen_s = time.perf_counter() - t0
    Qt = eig.vectors
    Q_new = Qt if Q_asm is None else Q_asm @ Qt

    if record is not None:
        record.append(
            {
                "level": parent.level,
                "x0": parent.x0,
                "y0": parent.y0,
                "side": parent.side,
                "e": int(e),
                "k_out": int(k_eff),
                "deficit": int(k_out - k_eff),
                "eigenvalues": eig.values.tolist(),
            }
        )
    return (
        NodeClustering(node=parent, Q=np.asarray(Q_new), superpixel_ids=expected, identity=False),
        eigen_s,
    )


def merge_children(parent: QuadNode, children: list, Wt: sp.spmatrix,
                   k_out: int, seed: int = 42, tol: float = 1e-8,
                   regularize: bool = False, record: list | None = None) -> NodeClustering:
    """Merge exactly four child clusterings into the parent's.

    Takes the global superpixel similarity; the normalized Laplacian is
    built here. mfsc() shares the inner step and builds it once instead.
    """
    if len(children) != 4:
        raise ArgumentError(f"a merge takes exactly 4 children, got {len(children)}")
    _, Ln = degree_and_laplacian(Wt, regularize=regularize)
    nc, _ = _reduce(parent, children, Wt, Ln, k_out, seed, tol, record,
                    regularize=regularize)
    return nc


def mfsc(img: GrayImage, p: AffinityParams, t: float, k: int,
         l_init: int = 3, k_int: int = 4, mode: str = "exact",
         seed: int = 42, min_block_side: int = 2, clusterer: str = "fcm",
         cluster_superpixels: bool = False, regularize: bool = False,
         cap: int = PIXEL_CAP_DEFAULT, tol: float = 1e-8,
         collect_merges: bool = False, keep_matrices: bool = False) -> LabelMap:
    """Multiscale pipeline: quad-tree, bottom-up merges, one final clustering.

    Interior merges retain k_int components; the root merge retains k. With
    l_init = 1 the walk starts at the root and the single reduction is
    exactly the plain superpixel pipeline (fsc). A start level deeper than
    the tree is clamped to the deepest level.
    """
    if mode not in ("exact", "approx"):
        raise ArgumentError(f"mode must be 'exact' or 'approx', got {mode!r}")
    h, w = img.data.shape

    t0 = time.perf_counter()
    tree = decompose(img, t, min_block_side=min_block_side)
    m = tree.m
    timings = {"decompose": time.perf_counter() - t0}
    if k > m:
        raise ArgumentError(f"k = {k} exceeds the superpixel count m = {m}; lower t")

    l_eff = min(l_init, tree.depth)
    if l_eff >= 3 and k_int < k:
        # interior levels would hand the root fewer components than clusters
        raise ArgumentError(
            f"k_int = {k_int} must be >= k = {k} when interior merges run"
        )

    t0 = time.perf_counter()
    edges = edge_map(img)
    if mode == "exact":
        Wt = superpixel_W_exact(img, edges, p, tree, cap=cap)
    else:
        Wt = superpixel_W_approx(superpixel_stats(tree, img), edges, p)
    H = build_H(tree)
    d, Ln = degree_and_laplacian(Wt, regularize=regularize)
    timings["affinity"] = time.perf_counter() - t0

    merges: list | None = [] if collect_merges else None
    eigen_total = 0.0
    t0 = time.perf_counter()
    cur = {nc.node: nc for nc in init_level(tree, l_eff)}
    for level in range(l_eff, 1, -1):
        nxt = {}
        k_out = k if level - 1 == 1 else k_int
        for node in nodes_at_level(tree, level - 1):
            if node.is_leaf:
                nxt[node] = cur[node]  # passthrough: carried up unchanged
            else:
                children = [cur[c] for c in node.children]
                nc, es = _reduce(node, children, Wt, Ln, k_out, seed, tol,
                                 merges, regularize=regularize)
                eigen_total += es
                nxt[node] = nc
        cur = nxt
    root_nc = cur[tree.root]
    if root_nc.identity:
        # start level was the root: the reduction still runs, which is what
        # makes this degenerate exactly to the plain pipeline
        root_nc, es = _reduce(tree.root, [root_nc], Wt, Ln, k, seed, tol,
                              merges, regularize=regularize)
        eigen_total += es
    merge_total = time.perf_counter() - t0
    timings["eigen"] = eigen_total
    timings["merge"] = max(merge_total - eigen_total, 0.0)

    t0 = time.perf_counter()
    C_sup = root_nc.Q / np.sqrt(d)[:, None]  # global degrees, not the local ones
    if cluster_superpixels:
        sup_labels = (
            kmeans(C_sup, k, seed=seed)
            if clusterer == "kmeans"
            else fuzzy_cmeans(C_sup, k, seed=seed).labels
        )
        labels = sup_labels[leaf_label_map(tree)]
    else:
        C_p = np.asarray(H @ C_sup)
        labels = (
            kmeans(C_p, k, seed=seed)
            if clusterer == "kmeans"
            else fuzzy_cmeans(C_p, k, seed=seed).labels
        ).reshape(h, w)
    timings["fcm"] = time.perf_counter() - t0

    meta = {
        "algorithm": "mfsc",
        "m": m,
        "depth": tree.depth,
        "l_init": l_eff,
        "k_int": k_int,
        "mode": mode,
        "root_columns": int(root_nc.Q.shape[1]),
    }
    if collect_merges:
        meta["merges"] = merges
    if keep_matrices:
        meta["Wt"] = Wt
    return LabelMap(
        labels=np.asarray(labels, dtype=np.int64).reshape(h, w),
        k=k,
        width=img.orig_width,
        height=img.orig_height,
        timings=timings,
        meta=meta,
    )
