"""Visual observations over a volume: slices, projections, montages,
orthogonal views, body cropping, and deterministic PNG encoding.

Plane conventions (fixed across every view):
  axial    k fixed -> image x=i, y=j
  coronal  j fixed -> image x=i, y=k
  sagittal i fixed -> image x=j, y=k
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np
import scipy.ndimage as ndi

from .errors import EmptyBody, InvalidImage, PointOutOfRange, SliceOutOfRange
from .volume import Volume, apply_window

AXIS_INDEX = {"axial": 2, "coronal": 1, "sagittal": 0}
BODY_THRESHOLD_HU = -500.0
BODY_MARGIN_VOXELS = 2


@dataclass(frozen=True)
class Image2D:
    """8-bit grayscale image; ``pixels`` has shape (height, width), row-major."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.pixels.shape != (self.height, self.width):
            raise ValueError("pixel buffer does not match width x height")
        if self.pixels.dtype != np.uint8:
            raise ValueError("pixels must be uint8")


@dataclass(frozen=True)
class BoundingBox:
    """Inclusive voxel bounds."""

    lo: tuple[int, int, int]
    hi: tuple[int, int, int]

    def __post_init__(self):
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise ValueError(f"lo {self.lo} exceeds hi {self.hi}")

    def as_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}


def _axis_num(axis: str) -> int:
    if axis not in AXIS_INDEX:
        raise ValueError(f"unknown axis {axis!r}")
    return AXIS_INDEX[axis]


def _to_image(plane: np.ndarray) -> Image2D:
    h, w = plane.shape
    return Image2D(width=w, height=h, pixels=plane)


def _plane(voxels: np.ndarray, axis: str, index: int) -> np.ndarray:
    # Returned as (in-plane second axis, in-plane first axis) = (rows, cols).
    a = _axis_num(axis)
    sel = [slice(None)] * 3
    sel[a] = index
    return voxels[tuple(sel)].T


def extract_slice(volume: Volume, axis: str, index: int, window: tuple[float, float]) -> Image2D:
    """One windowed 2D plane at ``index`` along the named axis."""
    a = _axis_num(axis)
    if not 0 <= index < volume.dims[a]:
        raise SliceOutOfRange(f"{axis} index {index} outside [0, {volume.dims[a] - 1}]")
    return _to_image(apply_window(_plane(volume.voxels, axis, index), *window))


def project(volume: Volume, axis: str, mode: str, window: tuple[float, float]) -> Image2D:
    """Reduce the volume along an axis by max, min, or mean, then window.

    Averages accumulate in float64 before windowing.
    """
    a = _axis_num(axis)
    if mode == "max":
        reduced = volume.voxels.max(axis=a)
    elif mode == "min":
        reduced = volume.voxels.min(axis=a)
    elif mode == "avg":
        reduced = volume.voxels.mean(axis=a, dtype=np.float64)
    else:
        raise ValueError(f"unknown projection mode {mode!r}")
    return _to_image(apply_window(reduced.T, *window))


def montage_indices(n_slices: int, tiles: int) -> list[int]:
    """Evenly spaced slice indices for a montage; a single tile takes the middle."""
    if tiles == 1:
        return [(n_slices - 1) // 2]
    return [t * (n_slices - 1) // (tiles - 1) for t in range(tiles)]


def montage(volume: Volume, axis: str, rows: int, cols: int, window: tuple[float, float]) -> Image2D:
    """Grid of evenly sampled slices with 1-pixel black separators."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be at least 1")
    a = _axis_num(axis)
    indices = montage_indices(volume.dims[a], rows * cols)
    tiles = [extract_slice(volume, axis, idx, window) for idx in indices]
    th, tw = tiles[0].pixels.shape
    out = np.zeros((rows * th + rows - 1, cols * tw + cols - 1), dtype=np.uint8)
    for t, tile in enumerate(tiles):
        r, c = divmod(t, cols)
        y, x = r * (th + 1), c * (tw + 1)
        out[y : y + th, x : x + tw] = tile.pixels
    return _to_image(out)


def ortho_views(volume: Volume, point: tuple[int, int, int], window: tuple[float, float]) -> Image2D:
    """Axial, coronal, sagittal slices through one point, composited side by
    side with 1-pixel separators and a 255-valued crosshair in each view."""
    if any(not 0 <= point[a] < volume.dims[a] for a in range(3)):
        raise PointOutOfRange(f"point {point} outside dims {volume.dims}")
    i, j, k = point
    views = []
    for axis, index, xy in (
        ("axial", k, (i, j)),
        ("coronal", j, (i, k)),
        ("sagittal", i, (j, k)),
    ):
        px = extract_slice(volume, axis, index, window).pixels.copy()
        px[xy[1], :] = 255
        px[:, xy[0]] = 255
        views.append(px)
    height = max(v.shape[0] for v in views)
    width = sum(v.shape[1] for v in views) + len(views) - 1
    out = np.zeros((height, width), dtype=np.uint8)
    x = 0
    for v in views:
        out[: v.shape[0], x : x + v.shape[1]] = v
        x += v.shape[1] + 1
    return _to_image(out)


def auto_crop_body(volume: Volume) -> BoundingBox:
    """Bounding box of the largest 6-connected component above the body
    threshold, expanded by a fixed margin and clipped to the volume."""
    body = volume.voxels > BODY_THRESHOLD_HU
    if not body.any():
        raise EmptyBody(f"no voxel above {BODY_THRESHOLD_HU} HU")
    labels, n = ndi.label(body, structure=ndi.generate_binary_structure(3, 1))
    counts = np.bincount(labels.ravel())
    counts[0] = 0
    coords = np.argwhere(labels == int(counts.argmax()))
    lo = np.maximum(coords.min(axis=0) - BODY_MARGIN_VOXELS, 0)
    hi = np.minimum(coords.max(axis=0) + BODY_MARGIN_VOXELS, np.array(volume.dims) - 1)
    return BoundingBox(lo=tuple(int(v) for v in lo), hi=tuple(int(v) for v in hi))


def _png_chunk(kind: bytes, payload: bytes) -> bytes:
    crc = zlib.crc32(payload, zlib.crc32(kind))
    return struct.pack(">I", len(payload)) + kind + payload + struct.pack(">I", crc)


def encode_png(image: Image2D) -> bytes:
    """Deterministic 8-bit grayscale PNG: filter 0 on every scanline and a
    fixed zlib level, so equal images give equal bytes."""
    if image.width == 0 or image.height == 0:
        raise InvalidImage("zero-dimension image")
    sig = b"\x89PNG\r\n\x1a\n"
    ihdr = struct.pack(">IIBBBBB", image.width, image.height, 8, 0, 0, 0, 0)
    raw = b"".join(b"\x00" + row.tobytes() for row in image.pixels)
    return (
        sig
        + _png_chunk(b"IHDR", ihdr)
        + _png_chunk(b"IDAT", zlib.compress(raw, 9))
        + _png_chunk(b"IEND", b"")
    )
