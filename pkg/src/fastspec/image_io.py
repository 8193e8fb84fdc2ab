"""Grayscale image loading, scaling, padding, and label-map output.

Supported inputs are PGM (P2/P5) and PNG. All intensities are normalized
to [0, 1] on load; everything downstream works in that unit system.
"""

from __future__ import annotations

import io
import os
import colorsys
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .errors import ArgumentError, FormatError

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@dataclass
class GrayImage:
    """A 2-D grid of intensities in [0, 1].

    Attributes:
        data: (height, width) float64 array.
        pad_right: columns appended on the right by pad_to_pow2.
        pad_bottom: rows appended at the bottom by pad_to_pow2.
    """

    data: np.ndarray
    pad_right: int = 0
    pad_bottom: int = 0

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def orig_width(self) -> int:
        return self.width - self.pad_right

    @property
    def orig_height(self) -> int:
        return self.height - self.pad_bottom


@dataclass
class LabelMap:
    """Per-pixel cluster labels plus run bookkeeping.

    `labels` covers the full processed grid (possibly padded); `width` and
    `height` give the region of interest that output writers keep.
    """

    labels: np.ndarray
    k: int
    width: int
    height: int
    timings: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def cropped(self) -> np.ndarray:
        return self.labels[: self.height, : self.width]

    @property
    def empty_clusters(self) -> list:
        present = set(np.unique(self.cropped()).tolist())
        return [c for c in range(self.k) if c not in present]


def _pgm_tokens(raw: bytes, count: int):
    """Yield the first `count` header tokens of a PGM, honoring # comments.

    Returns (tokens, offset of the byte right after the last token).
    """
    tokens = []
    pos = 0
    while len(tokens) < count:
        if pos >= len(raw):
            raise FormatError("truncated PGM data")
        c = raw[pos : pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            nl = raw.find(b"\n", pos)
            pos = len(raw) if nl < 0 else nl + 1
        else:
            end = pos
            while end < len(raw) and not raw[end : end + 1].isspace():
                end += 1
            tokens.append(raw[pos:end])
            pos = end
    return tokens, pos


def _load_pgm(raw: bytes) -> np.ndarray:
    tokens, pos = _pgm_tokens(raw, 4)
    magic = tokens[0]
    try:
        w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise FormatError(f"bad PGM header: {exc}") from exc
    if w < 1 or h < 1 or maxval < 1 or maxval > 65535:
        raise FormatError("bad PGM dimensions or maxval")
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        dtype = ">u2" if maxval > 255 else "u1"
        need = w * h * (2 if maxval > 255 else 1)
        body = raw[pos : pos + need]
        if len(body) < need:
            raise FormatError("truncated PGM pixel data")
        px = np.frombuffer(body, dtype=dtype).astype(np.int64)
    else:  # P2
        vals, _ = _pgm_tokens(raw[pos:], w * h)  # comments allowed in the raster too
        try:
            px = np.array([int(v) for v in vals], dtype=np.int64)
        except ValueError as exc:
            raise FormatError(f"bad PGM sample: {exc}") from exc
    if px.min() < 0 or px.max() > maxval:
        raise FormatError("PGM sample out of range")
    return px.reshape(h, w).astype(np.float64) / float(maxval)


def _load_png(raw: bytes) -> np.ndarray:
    im = Image.open(io.BytesIO(raw))
    if im.mode == "P":
        im = im.convert("RGB")
    if im.mode in ("RGB", "RGBA"):
        arr = np.asarray(im, dtype=np.float64)
        r, g, b = arr[..., 0], arr[..., 1], arr[..., 2]
        # luma in float before normalizing, so pure red maps to exactly 0.299
        return (0.299 * r + 0.587 * g + 0.114 * b) / 255.0
    if im.mode == "LA":
        return np.asarray(im, dtype=np.float64)[..., 0] / 255.0
    if im.mode == "L":
        return np.asarray(im, dtype=np.float64) / 255.0
    if im.mode == "1":
        return np.asarray(im, dtype=np.float64)
    if im.mode in ("I", "I;16", "I;16B"):
        return np.asarray(im, dtype=np.float64) / 65535.0
    raise FormatError(f"unsupported PNG mode {im.mode!r}")


def load_gray(path) -> GrayImage:
    """Load a PGM (P2/P5) or PNG file as a GrayImage.

    RGB PNGs are converted with the 0.299/0.587/0.114 luma weights.
    Raises OSError for unreadable files and FormatError for anything that
    is not PGM or PNG.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] in (b"P2", b"P5"):
        data = _load_pgm(raw)
    elif raw[: len(_PNG_MAGIC)] == _PNG_MAGIC:
        data = _load_png(raw)
    else:
        raise FormatError(f"{path}: not a PGM or PNG file")
    return GrayImage(np.ascontiguousarray(data, dtype=np.float64))


def load_mask(path) -> np.ndarray:
    """Load a ground-truth mask as integer labels (0 = background)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] in (b"P2", b"P5"):
        tokens, _ = _pgm_tokens(raw, 4)
        maxval = int(tokens[3])
        arr = np.rint(_load_pgm(raw) * maxval).astype(np.int64)
    elif raw[: len(_PNG_MAGIC)] == _PNG_MAGIC:
        im = Image.open(io.BytesIO(raw))
        if im.mode in ("RGB", "RGBA"):
            a = np.asarray(im, dtype=np.float64)
            arr = np.rint(
                0.299 * a[..., 0] + 0.587 * a[..., 1] + 0.114 * a[..., 2]
            ).astype(np.int64)
        else:
            arr = np.asarray(im).astype(np.int64)
    else:
        raise FormatError(f"{path}: not a PGM or PNG file")
    if arr.min() < 0:
        raise FormatError(f"{path}: negative mask values")
    return arr


def resize_bilinear(img: GrayImage, side: int) -> GrayImage:
    """Resize to side x side with bilinear interpolation (half-pixel centers).

    Output values never leave [min(input), max(input)]; resizing to the
    current side of a square image is an exact no-op.
    """
    if side < 2:
        raise ArgumentError(f"resize side must be >= 2, got {side}")
    src = img.data
    h, w = src.shape
    ys = np.clip((np.arange(side) + 0.5) * (h / side) - 0.5, 0.0, h - 1.0)
    xs = np.clip((np.arange(side) + 0.5) * (w / side) - 0.5, 0.0, w - 1.0)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    ty = (ys - y0)[:, None]
    tx = (xs - x0)[None, :]
    out = (
        src[np.ix_(y0, x0)] * (1.0 - ty) * (1.0 - tx)
        + src[np.ix_(y0, x1)] * (1.0 - ty) * tx
        + src[np.ix_(y1, x0)] * ty * (1.0 - tx)
        + src[np.ix_(y1, x1)] * ty * tx
    )
    np.clip(out, src.min(), src.max(), out=out)
    return GrayImage(out)


def resize_nearest_labels(mask: np.ndarray, side: int) -> np.ndarray:
    """Nearest-neighbor resize for integer label grids (ground truths)."""
    h, w = mask.shape
    ys = np.minimum(((np.arange(side) + 0.5) * (h / side)).astype(np.int64), h - 1)
    xs = np.minimum(((np.arange(side) + 0.5) * (w / side)).astype(np.int64), w - 1)
    return mask[np.ix_(ys, xs)]


def next_pow2(v: int) -> int:
    p = 1
    while p < v:
        p *= 2
    return p


def pad_to_pow2(img: GrayImage) -> GrayImage:
    """Pad to the next square power-of-two side by edge replication."""
    h, w = img.data.shape
    side = next_pow2(max(h, w))
    if side == h == w:
        return GrayImage(img.data, 0, 0)
    out = np.pad(img.data, ((0, side - h), (0, side - w)), mode="edge")
    return GrayImage(out, pad_right=side - w, pad_bottom=side - h)


def atomic_write_bytes(path, payload: bytes) -> None:
    """Write a file atomically (temp file + rename in the same directory)."""
    path = os.fspath(path)
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def _palette(k: int) -> list:
    # k maximally spaced hues around the HSV wheel
    pal = []
    for i in range(k):
        rgb = colorsys.hsv_to_rgb(i / k, 0.75, 0.95)
        pal.extend(int(round(255 * c)) for c in rgb)
    return pal


def write_labels(labels: LabelMap, path, format: str = "png-palette") -> None:
    """Write a label map; padded regions are cropped away first.

    Args:
        labels: the LabelMap to write.
        path: destination file path.
        format: "png-palette" (k spaced hues) or "csv" (rows of integers).
    """
    grid = labels.cropped()
    if format == "csv":
        text = "\n".join(",".join(str(int(v)) for v in row) for row in grid) + "\n"
        atomic_write_bytes(path, text.encode("ascii"))
    elif format == "png-palette":
        if labels.k > 256:
            raise ArgumentError(f"png-palette output supports k <= 256, got {labels.k}")
        im = Image.fromarray(grid.astype(np.uint8), mode="P")
        im.putpalette(_palette(max(labels.k, 1)))
        buf = io.BytesIO()
        im.save(buf, format="PNG")
        atomic_write_bytes(path, buf.getvalue())
    else:
        raise ArgumentError(f"unknown label format {format!r}")
