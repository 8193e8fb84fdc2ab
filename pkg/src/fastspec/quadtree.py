"""Quad-tree decomposition of a square image by the block-variance criterion.

A block splits into its four quadrants while its intensity variance is at
least t and its side exceeds min_block_side. Leaves are the superpixels.
The full hierarchy is kept because the multiscale pipeline walks it
bottom-up.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError
from .image_io import GrayImage


@dataclass(eq=False)
class QuadNode:
    level: int          # 1 = root
    x0: int
    y0: int
    side: int
    children: tuple | None = None            # None or exactly (ul, ur, dl, dr)
    superpixel_id: int | None = None         # set iff leaf
    # contiguous range of leaf ids under this node (DFS order makes it a range)
    leaf_lo: int = -1
    leaf_hi: int = -1

    @property
    def is_leaf(self) -> bool:
        return self.children is None


@dataclass
class QuadTree:
    root: QuadNode
    leaves: list
    depth: int
    image_side: int

    @property
    def m(self) -> int:
        return len(self.leaves)


def _is_pow2(v: int) -> bool:
    return v >= 1 and (v & (v - 1)) == 0


class _Integral:
    """Summed-area tables for O(1) block sums of x and x^2."""

    def __init__(self, data: np.ndarray):
        h, w = data.shape
        self.s1 = np.zeros((h + 1, w + 1))
        self.s2 = np.zeros((h + 1, w + 1))
        np.cumsum(np.cumsum(data, axis=0), axis=1, out=self.s1[1:, 1:])
        np.cumsum(np.cumsum(data * data, axis=0), axis=1, out=self.s2[1:, 1:])

    def block_sum(self, table, x0, y0, side):
        x1, y1 = x0 + side, y0 + side
        return table[y1, x1] - table[y0, x1] - table[y1, x0] + table[y0, x0]

    def var(self, x0, y0, side):
        cnt = side * side
        s = self.block_sum(self.s1, x0, y0, side)
        q = self.block_sum(self.s2, x0, y0, side)
        mean = s / cnt
        # population variance; clamp tiny negative values from cancellation
        return max(q / cnt - mean * mean, 0.0)

    def mean(self, x0, y0, side):
        return self.block_sum(self.s1, x0, y0, side) / (side * side)


def decompose(img: GrayImage, t: float, min_block_side: int = 2) -> QuadTree:
    """Build the quad-tree of `img` for variance threshold `t`.

    `t` is expressed in the squared internal intensity unit (intensities
    live in [0, 1]; thresholds quoted for 0-255 data divide by 255**2).
    """
    h, w = img.data.shape
    if h != w or not _is_pow2(w):
        raise ArgumentError(f"decompose needs a square power-of-two image, got {w}x{h}")
    if t < 0:
        raise ArgumentError(f"variance threshold must be >= 0, got {t}")
    if not _is_pow2(min_block_side):
        raise ArgumentError(f"min_block_side must be a power of two >= 1, got {min_block_side}")

    integral = _Integral(img.data)
    leaves: list = []

    def build(level, x0, y0, side):
        node = QuadNode(level, x0, y0, side)
        if side > min_block_side and integral.var(x0, y0, side) >= t:
            half = side // 2
            node.children = (
                build(level + 1, x0, y0, half),          # ul
                build(level + 1, x0 + half, y0, half),   # ur
                build(level + 1, x0, y0 + half, half),   # dl
                build(level + 1, x0 + half, y0 + half, half),  # dr
            )
            node.leaf_lo = node.children[0].leaf_lo
            node.leaf_hi = node.children[3].leaf_hi
        else:
            node.superpixel_id = len(leaves)
            node.leaf_lo = node.superpixel_id
            node.leaf_hi = node.superpixel_id + 1
            leaves.append(node)
        return node

    root = build(1, 0, 0, w)
    depth = max(leaf.level for leaf in leaves)
    return QuadTree(root=root, leaves=leaves, depth=depth, image_side=w)


@dataclass
class SuperpixelStats:
    """Per-leaf geometry and intensity summaries, in leaf-id order."""

    centroid_x: np.ndarray
    centroid_y: np.ndarray
    mean_intensity: np.ndarray
    size: np.ndarray

    def __len__(self) -> int:
        return len(self.size)


def superpixel_stats(tree: QuadTree, img: GrayImage) -> SuperpixelStats:
    """Centroid, mean intensity, and pixel count for every leaf."""
    integral = _Integral(img.data)
    m = tree.m
    cx = np.empty(m)
    cy = np.empty(m)
    mean = np.empty(m)
    size = np.empty(m, dtype=np.int64)
    for i, leaf in enumerate(tree.leaves):
        cx[i] = leaf.x0 + leaf.side / 2 - 0.5
        cy[i] = leaf.y0 + leaf.side / 2 - 0.5
        mean[i] = integral.mean(leaf.x0, leaf.y0, leaf.side)
        size[i] = leaf.side * leaf.side
    return SuperpixelStats(cx, cy, mean, size)


def nodes_at_level(tree: QuadTree, l: int) -> list:
    """All nodes whose level is l, in row-major (y0, x0) order.

    A leaf that sits above l (its subtree ended early) stands in for the
    missing level-l nodes: it appears in the list as itself.
    """
    if l < 1 or l > tree.depth:
        raise ArgumentError(f"level {l} out of range [1, {tree.depth}]")
    found: list = []

    def visit(node):
        if node.level == l or (node.is_leaf and node.level < l):
            found.append(node)
            return
        if not node.is_leaf:
            for child in node.children:
                visit(child)

    visit(tree.root)
    found.sort(key=lambda nd: (nd.y0, nd.x0))
    return found


def leaf_label_map(tree: QuadTree) -> np.ndarray:
    """(side, side) array mapping each pixel to its superpixel id."""
    out = np.empty((tree.image_side, tree.image_side), dtype=np.int64)
    for leaf in tree.leaves:
        out[leaf.y0 : leaf.y0 + leaf.side, leaf.x0 : leaf.x0 + leaf.side] = leaf.superpixel_id
    return out


def tree_to_dict(tree: QuadTree, img: GrayImage | None = None) -> dict:
    """JSON-friendly nested dump of the hierarchy (for --dump-tree)."""
    integral = _Integral(img.data) if img is not None else None

    def node_dict(node):
        d = {"level": node.level, "x0": node.x0, "y0": node.y0, "side": node.side}
        if node.is_leaf:
            d["superpixel_id"] = node.superpixel_id
            if integral is not None:
                d["mean"] = integral.mean(node.x0, node.y0, node.side)
                d["var"] = integral.var(node.x0, node.y0, node.side)
        else:
            d["children"] = [node_dict(c) for c in node.children]
        return d

    return {
        "image_side": tree.image_side,
        "depth": tree.depth,
        "m": tree.m,
        "root": node_dict(tree.root),
    }
