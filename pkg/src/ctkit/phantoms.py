"""Synthetic volume and mask generators.

Everything here is deterministic given its arguments (and seed, where one
exists), so fixtures built from these generators can be regenerated
byte-identically.
"""

from __future__ import annotations

import numpy as np

AIR_HU = -1000.0


def constant_volume(dims, value: float = AIR_HU) -> np.ndarray:
    return np.full(dims, value, dtype=np.float64)


def ramp_volume(dims) -> np.ndarray:
    """Voxel value equals the linear index (i fastest), handy for slicing oracles."""
    n = dims[0] * dims[1] * dims[2]
    return np.arange(n, dtype=np.float64).reshape(dims, order="F")


def block_volume(dims, block_lo, block_size, block_value: float = 0.0,
                 background: float = AIR_HU) -> np.ndarray:
    vox = np.full(dims, background, dtype=np.float64)
    lo = tuple(block_lo)
    hi = tuple(lo[a] + block_size[a] for a in range(3))
    vox[lo[0]:hi[0], lo[1]:hi[1], lo[2]:hi[2]] = block_value
    return vox


def random_volume(dims, seed: int, hu_range=(-1000.0, 1000.0)) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(hu_range[0], hu_range[1], size=dims).astype(np.float64)


def ball_mask(dims, center, radius: float) -> np.ndarray:
    """Digital ball: voxels whose center lies within radius of the given center."""
    ii, jj, kk = np.indices(dims)
    d2 = (ii - center[0]) ** 2 + (jj - center[1]) ** 2 + (kk - center[2]) ** 2
    return d2 <= radius * radius


def tube_mask(dims, axis: int, start: int, stop: int, cross_center, thickness: int = 1) -> np.ndarray:
    """Straight tube along an axis with a square cross-section of odd thickness."""
    mask = np.zeros(dims, dtype=bool)
    half = thickness // 2
    sel = [slice(cross_center[a] - half, cross_center[a] + half + 1) for a in range(3)]
    sel[axis] = slice(start, stop + 1)
    mask[tuple(sel)] = True
    return mask


def l_tube_mask(dims, corner, arm_a: int, arm_b: int) -> np.ndarray:
    """Two 1-voxel-thick arms along i and j meeting at ``corner``."""
    mask = np.zeros(dims, dtype=bool)
    i0, j0, k0 = corner
    mask[i0 : i0 + arm_a, j0, k0] = True
    mask[i0, j0 : j0 + arm_b, k0] = True
    return mask


def labeled_lesion_volume(dims=(24, 24, 16), seed: int = 7, lesion_label: int = 1):
    """A soft-tissue volume with one dense ellipsoidal lesion and its mask.

    Returns (voxels, labels).  The lesion sits off-center with a small HU
    texture so first-order and texture features are non-degenerate.
    """
    rng = np.random.default_rng(seed)
    vox = rng.normal(40.0, 12.0, size=dims)
    ii, jj, kk = np.indices(dims)
    c = (dims[0] // 2 + 2, dims[1] // 2 - 2, dims[2] // 2)
    d2 = ((ii - c[0]) / 4.0) ** 2 + ((jj - c[1]) / 3.0) ** 2 + ((kk - c[2]) / 2.5) ** 2
    lesion = d2 <= 1.0
    vox[lesion] = rng.normal(95.0, 18.0, size=int(lesion.sum()))
    labels = np.zeros(dims, dtype=np.int16)
    labels[lesion] = lesion_label
    return vox.astype(np.float64), labels
