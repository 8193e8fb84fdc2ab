"""Similarity graphs: pixel-level W, the indicator matrix H, and the
superpixel-level matrices (projection W~, degrees D~, normalized Laplacian).

The pairwise weight combines a spatial-intensity Gaussian with an
intervening-contour term:

    w(i, j) = sqrt(w_I * w_C) + alpha * w_C          if ||X_i - X_j||^2 <= r^2
    w_I     = exp(-||X_i - X_j||^2 / sigma_x - |Z_i - Z_j|^2 / sigma_i)
    w_C     = exp(-max_{x on line(i,j)} Edge(x)^2 / sigma_c)

where line(i, j) is the midpoint-rasterized segment between the two pixels,
endpoints included. Note the scales divide directly (no 2*sigma^2).

All produced matrices are scipy.sparse CSR and exactly symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy import ndimage
from scipy.spatial import cKDTree

from .errors import ArgumentError, CapacityError, IsolatedVertexError
from .image_io import GrayImage
from .quadtree import QuadTree, SuperpixelStats, leaf_label_map

PIXEL_CAP_DEFAULT = 2 ** 16


@dataclass
class AffinityParams:
    """Scales of the pairwise weight.

    r is the pixel graph radius, R the superpixel connection radius (between
    block centroids). All values are in the internal unit system: intensities
    in [0, 1], distances in pixels.
    """

    r: float = 20.0
    R: float = 40.0
    sigma_x: float = 4.0
    sigma_i: float = 8.0 / 255.0
    sigma_c: float = 0.2
    alpha: float = 0.45

    def __post_init__(self):
        for name in ("sigma_x", "sigma_i", "sigma_c"):
            if getattr(self, name) <= 0:
                raise ArgumentError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.r < 1:
            raise ArgumentError(f"r must be >= 1, got {self.r}")
        if self.R < 1:
            raise ArgumentError(f"R must be >= 1, got {self.R}")
        if self.alpha < 0:
            raise ArgumentError(f"alpha must be >= 0, got {self.alpha}")


def edge_map(img: GrayImage) -> np.ndarray:
    """Gradient magnitude via the 3x3 Sobel kernels, borders edge-replicated."""
    gx = ndimage.sobel(img.data, axis=1, mode="nearest")
    gy = ndimage.sobel(img.data, axis=0, mode="nearest")
    return np.hypot(gx, gy)


@lru_cache(maxsize=None)
def _line_cells(dx: int, dy: int):
    """Integer cells of the midpoint-rasterized segment (0,0) -> (dx,dy).

    One cell per step of the major axis, rounding half away from the origin
    side via exact integer arithmetic, endpoints included.
    """
    steps = max(abs(dx), abs(dy))
    if steps == 0:
        return np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64)
    i = np.arange(steps + 1, dtype=np.int64)
    xs = (2 * i * dx + steps) // (2 * steps)
    ys = (2 * i * dy + steps) // (2 * steps)
    return xs, ys


def pixel_affinity(img: GrayImage, edges: np.ndarray, p: AffinityParams,
                   i: tuple, j: tuple) -> float:
    """Pairwise weight between pixels i = (x, y) and j = (x, y).

    Scalar reference implementation; pixel_W assembles the same quantity
    vectorized. Contour walks run in scan order of (y, x) so the weight is
    exactly symmetric in i and j.
    """
    xi, yi = i
    xj, yj = j
    dx = xj - xi
    dy = yj - yi
    d2 = dx * dx + dy * dy
    if d2 > p.r * p.r:
        return 0.0
    if (yi, xi) <= (yj, xj):
        bx, by, ddx, ddy = xi, yi, dx, dy
    else:
        bx, by, ddx, ddy = xj, yj, -dx, -dy
    xs, ys = _line_cells(ddx, ddy)
    e = edges[by + ys, bx + xs]
    wc = np.exp(-np.max(e * e) / p.sigma_c)
    dz = img.data[yi, xi] - img.data[yj, xj]
    wi = np.exp(-(d2 / p.sigma_x) - (dz * dz) / p.sigma_i)
    return float(np.sqrt(wi * wc) + p.alpha * wc)


def _radius_offsets(r: float):
    """Unique half-plane offsets (dx, dy) with 0 < dx^2+dy^2 <= r^2.

    Only dy > 0 or (dy == 0, dx > 0) is enumerated; the mirrored entry is
    added during assembly.
    """
    rad = int(np.floor(r))
    r2 = r * r
    out = []
    for dy in range(0, rad + 1):
        for dx in range(-rad, rad + 1):
            if dy == 0 and dx <= 0:
                continue
            if dx * dx + dy * dy <= r2:
                out.append((dx, dy))
    return out


def pixel_W(img: GrayImage, edges: np.ndarray, p: AffinityParams,
            cap: int = PIXEL_CAP_DEFAULT) -> sp.csr_matrix:
    """Assemble the full pixel affinity matrix (n x n, CSR, symmetric).

    Guarded by `cap` on the pixel count: the dense pixel graph is meant for
    small images; larger inputs should go through the superpixel pipelines
    (fsc / mfsc), which never build it.
    """
    h, w = img.data.shape
    n = h * w
    if n > cap:
        raise CapacityError(
            f"pixel graph of {n} pixels exceeds the cap of {cap}; "
            f"use the fsc or mfsc pipeline for images this large"
        )
    data = img.data
    e2 = edges * edges

    rows_parts = []
    cols_parts = []
    vals_parts = []

    # diagonal: zero distances, w_I = 1
    wc_d = np.exp(-e2 / p.sigma_c)
    diag = np.sqrt(wc_d) + p.alpha * wc_d
    idx = np.arange(n, dtype=np.int64)
    rows_parts.append(idx)
    cols_parts.append(idx)
    vals_parts.append(diag.ravel())

    for dx, dy in _radius_offsets(p.r):
        y0, y1 = 0, h - dy
        x0, x1 = max(0, -dx), min(w, w - dx)
        if y0 >= y1 or x0 >= x1:
            continue
        zi = data[y0:y1, x0:x1]
        zj = data[y0 + dy : y1 + dy, x0 + dx : x1 + dx]
        dz = zi - zj
        d2 = float(dx * dx + dy * dy)
        wi = np.exp(-(d2 / p.sigma_x) - (dz * dz) / p.sigma_i)
        pxs, pys = _line_cells(dx, dy)
        e2max = e2[y0 + pys[0] : y1 + pys[0], x0 + pxs[0] : x1 + pxs[0]]
        for px, py in zip(pxs[1:], pys[1:]):
            e2max = np.maximum(e2max, e2[y0 + py : y1 + py, x0 + px : x1 + px])
        wc = np.exp(-e2max / p.sigma_c)
        wgt = (np.sqrt(wi * wc) + p.alpha * wc).ravel()
        yy, xx = np.meshgrid(
            np.arange(y0, y1, dtype=np.int64),
            np.arange(x0, x1, dtype=np.int64),
            indexing="ij",
        )
        pid_i = (yy * w + xx).ravel()
        pid_j = pid_i + dy * w + dx
        rows_parts.extend((pid_i, pid_j))
        cols_parts.extend((pid_j, pid_i))
        vals_parts.extend((wgt, wgt))

    W = sp.coo_matrix(
        (np.concatenate(vals_parts), (np.concatenate(rows_parts), np.concatenate(cols_parts))),
        shape=(n, n),
    )
    return W.tocsr()


def build_H(tree: QuadTree) -> sp.csr_matrix:
    """Pixel-to-superpixel indicator H (n x m), columns orthonormal.

    Row i has a single nonzero 1/sqrt(|A_j|) in the column of the leaf
    containing pixel i, so H^T H is the identity by construction.
    """
    lbl = leaf_label_map(tree).ravel()
    n = lbl.size
    sizes = np.array([leaf.side * leaf.side for leaf in tree.leaves], dtype=np.float64)
    vals = 1.0 / np.sqrt(sizes[lbl])
    return sp.csr_matrix((vals, (np.arange(n, dtype=np.int64), lbl)), shape=(n, tree.m))


def _sym(M: sp.spmatrix) -> sp.csr_matrix:
    # exact symmetry: float addition is commutative, so (M + M^T)/2 mirrors
    M = (M + M.T) * 0.5
    return M.tocsr()


def superpixel_W_exact(img: GrayImage, edges: np.ndarray, p: AffinityParams,
                       tree: QuadTree, cap: int = PIXEL_CAP_DEFAULT) -> sp.csr_matrix:
    """Project the pixel graph onto superpixels: W~ = H^T W H.

    Entry (i, j) aggregates the exact cut weight between leaves i and j,
    scaled by 1/sqrt(|A_i| |A_j|). The pixel matrix stays sparse and is
    subject to the same capacity cap as pixel_W.
    """
    W = pixel_W(img, edges, p, cap=cap)
    H = build_H(tree)
    Wt = H.T @ W @ H
    return _sym(Wt)


def superpixel_W_approx(stats: SuperpixelStats, edges: np.ndarray,
                        p: AffinityParams) -> sp.csr_matrix:
    """O(m)-style superpixel affinity from block centroids and means.

    Superpixels connect iff their centroids are within distance R. The
    stored entry is sqrt(|A_i| |A_j|) * w(c_i, c_j) with the pairwise kernel
    evaluated at centroid positions and mean intensities; the contour term
    walks the segment between the rounded centroids. With unit leaves this
    reproduces pixel_W exactly when R = r.
    """
    m = len(stats)
    cx, cy = stats.centroid_x, stats.centroid_y
    rx = np.rint(cx).astype(np.int64)
    ry = np.rint(cy).astype(np.int64)
    sizes = stats.size.astype(np.float64)
    means = stats.mean_intensity
    e2 = edges * edges

    # diagonal: the kernel at zero distance, scaled by the block size
    wc_d = np.exp(-e2[ry, rx] / p.sigma_c)
    diag = sizes * (np.sqrt(wc_d) + p.alpha * wc_d)

    rows = [np.arange(m, dtype=np.int64)]
    cols = [np.arange(m, dtype=np.int64)]
    vals = [diag]

    if m > 1:
        kd = cKDTree(np.column_stack([cx, cy]))
        pairs = kd.query_pairs(p.R, output_type="ndarray")
    else:
        pairs = np.empty((0, 2), dtype=np.int64)

    if len(pairs):
        a = pairs[:, 0]
        b = pairs[:, 1]
        # walk contours in scan order of the rounded centroids
        swap = (ry[a] > ry[b]) | ((ry[a] == ry[b]) & (rx[a] > rx[b]))
        a, b = np.where(swap, b, a), np.where(swap, a, b)

        dxf = cx[b] - cx[a]
        dyf = cy[b] - cy[a]
        d2 = dxf * dxf + dyf * dyf
        dz = means[a] - means[b]
        wi = np.exp(-(d2 / p.sigma_x) - (dz * dz) / p.sigma_i)

        ddx = rx[b] - rx[a]
        ddy = ry[b] - ry[a]
        steps = np.maximum(np.abs(ddx), np.abs(ddy))
        e2max = e2[ry[a], rx[a]]
        if steps.max() > 0:
            for s in range(1, int(steps.max()) + 1):
                act = steps >= s
                st = steps[act]
                lx = rx[a][act] + (2 * s * ddx[act] + st) // (2 * st)
                ly = ry[a][act] + (2 * s * ddy[act] + st) // (2 * st)
                e2max[act] = np.maximum(e2max[act], e2[ly, lx])
        wc = np.exp(-e2max / p.sigma_c)
        wgt = np.sqrt(sizes[a] * sizes[b]) * (np.sqrt(wi * wc) + p.alpha * wc)
        rows.extend((a, b))
        cols.extend((b, a))
        vals.extend((wgt, wgt))

    Wt = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(m, m)
    )
    return Wt.tocsr()


def degree_and_laplacian(Wt: sp.spmatrix, regularize: bool = False):
    """Degrees d_i = sum_j W~_ij and the normalized Laplacian.

    L_N = D^{-1/2} (D - W~) D^{-1/2}, returned exactly symmetric with its
    spectrum in [0, 2]. A zero degree raises IsolatedVertexError unless
    `regularize` is set, in which case 1e-12 is added to every degree.
    """
    if not sp.issparse(Wt):
        Wt = sp.csr_matrix(Wt)
    d = np.asarray(Wt.sum(axis=1)).ravel()
    if regularize:
        d = d + 1e-12
    elif (d <= 0).any():
        raise IsolatedVertexError(int(np.argmax(d <= 0)))
    s = 1.0 / np.sqrt(d)
    S = sp.diags(s)
    L = sp.eye(Wt.shape[0], format="csr") - S @ Wt @ S
    return d, _sym(L)


def dump_matrix(M, path) -> None:
    """Write a matrix in MatrixMarket coordinate format (debug aid)."""
    from scipy.io import mmwrite

    mmwrite(str(path), sp.coo_matrix(M))
