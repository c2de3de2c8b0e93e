"""Quantitative biomarkers over a region of interest: first-order HU
statistics, shape descriptors, GLCM texture, combined signatures, and a
deterministic SVG chart renderer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.ndimage as ndi
from skimage.measure import marching_cubes, mesh_surface_area

from .errors import EmptyRoi, EmptySignature, InvalidBins, LabelNotFound, PointOutOfRange
from .morphometry import MaskVolume
from .render import BoundingBox
from .volume import Volume

HISTOGRAM_BINS = 16
DEFAULT_GLCM_BINS = 32

# the 13 unique unit offsets of the 26-neighborhood (one per +/- pair:
# first nonzero component positive)
GLCM_OFFSETS = tuple(
    (di, dj, dk)
    for di in (0, 1)
    for dj in (-1, 0, 1)
    for dk in (-1, 0, 1)
    if (di, dj, dk) > (0, 0, 0)
)
assert len(GLCM_OFFSETS) == 13

SIGNATURE_KEYS = (
    "firstorder.count",
    "firstorder.mean",
    "firstorder.std",
    "firstorder.min",
    "firstorder.max",
    "firstorder.median",
    "firstorder.p10",
    "firstorder.p90",
    "shape.volume_mm3",
    "shape.surface_area_mm2",
    "shape.sphericity",
    "shape.elongation",
    "shape.flatness",
    "glcm.contrast",
    "glcm.energy",
    "glcm.homogeneity",
    "glcm.correlation",
    "glcm.entropy",
)


@dataclass(frozen=True)
class RoiSelector:
    """Region argument shared by the biomarker tools: exactly one of a mask
    label or a voxel bounding box."""

    label: int | None = None
    box: BoundingBox | None = None

    def __post_init__(self):
        if (self.label is None) == (self.box is None):
            raise ValueError("exactly one of label or box must be set")

    @classmethod
    def from_label(cls, label: int) -> "RoiSelector":
        return cls(label=label)

    @classmethod
    def from_box(cls, box: BoundingBox) -> "RoiSelector":
        return cls(box=box)

    def resolve(self, volume: Volume, mask: MaskVolume | None) -> np.ndarray:
        """Boolean voxel selection over the volume grid."""
        if self.label is not None:
            if mask is None:
                raise EmptyRoi("label roi requires a loaded mask")
            return mask.labels == self.label
        lo, hi = self.box.lo, self.box.hi
        if any(lo[a] < 0 or hi[a] >= volume.dims[a] for a in range(3)):
            raise PointOutOfRange(f"box {self.box} outside dims {volume.dims}")
        sel = np.zeros(volume.dims, dtype=bool)
        sel[lo[0] : hi[0] + 1, lo[1] : hi[1] + 1, lo[2] : hi[2] + 1] = True
        return sel


@dataclass(frozen=True)
class FirstOrderStats:
    count: int
    mean: float
    std: float
    min: float
    max: float
    median: float
    p10: float
    p90: float
    histogram: tuple[int, ...]

    def as_dict(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "std": self.std,
            "min": self.min,
            "max": self.max,
            "median": self.median,
            "p10": self.p10,
            "p90": self.p90,
            "histogram": list(self.histogram),
        }


def analyze_hu_distribution(volume: Volume, roi: RoiSelector, mask: MaskVolume | None = None) -> FirstOrderStats:
    """Exact first-order statistics over the selected voxels.

    Percentiles interpolate linearly between order statistics; std is the
    population value.  The histogram has 16 equal-width bins over the roi's
    own [min, max]; a constant roi collapses into bin 0.
    """
    values = volume.voxels[roi.resolve(volume, mask)]
    if values.size == 0:
        raise EmptyRoi("roi selects no voxels")
    vmin, vmax = float(values.min()), float(values.max())
    if vmax > vmin:
        hist, _ = np.histogram(values, bins=HISTOGRAM_BINS, range=(vmin, vmax))
    else:
        hist = np.zeros(HISTOGRAM_BINS, dtype=np.int64)
        hist[0] = values.size
    p10, median, p90 = (float(v) for v in np.percentile(values, [10, 50, 90], method="linear"))
    return FirstOrderStats(
        count=int(values.size),
        mean=float(values.mean()),
        std=float(values.std()),
        min=vmin,
        max=vmax,
        median=median,
        p10=p10,
        p90=p90,
        histogram=tuple(int(c) for c in hist),
    )


@dataclass(frozen=True)
class ShapeReport:
    volume_mm3: float
    surface_area_mm2: float
    sphericity: float
    elongation: float
    flatness: float
    bounding_box: BoundingBox

    def as_dict(self) -> dict:
        return {
            "volume_mm3": self.volume_mm3,
            "surface_area_mm2": self.surface_area_mm2,
            "sphericity": self.sphericity,
            "elongation": self.elongation,
            "flatness": self.flatness,
            "bounding_box": self.bounding_box.as_dict(),
        }


MESH_SMOOTHING_SIGMA = 0.8  # voxels; tames the staircase bias of binary meshes


def analyze_shape_properties(mask: MaskVolume, label: int, spacing: tuple | None = None) -> ShapeReport:
    """Volume, marching-cubes surface area, sphericity, and the covariance
    axis ratios of one label.

    The iso-0.5 mesh is taken over a lightly smoothed indicator, which
    removes most of the voxelization bias on curved surfaces; structures
    thin enough to vanish under smoothing fall back to the raw indicator.
    Eigenvalue ratios of a degenerate (single-voxel) label default to 1.
    """
    spacing = tuple(spacing) if spacing is not None else mask.spacing
    binary = mask.require_label(label)
    count = int(binary.sum())
    volume_mm3 = count * float(np.prod(spacing))

    # padding keeps the smoothing support and the mesh inside the grid
    padded = np.pad(binary, 4).astype(np.float32)
    field = ndi.gaussian_filter(padded, MESH_SMOOTHING_SIGMA, mode="constant")
    if field.max() <= 0.5:
        field = padded
    verts, faces, _, _ = marching_cubes(field, level=0.5, spacing=spacing)
    area = float(mesh_surface_area(verts, faces))
    sphericity = float(np.pi ** (1.0 / 3.0) * (6.0 * volume_mm3) ** (2.0 / 3.0) / area)

    coords = np.argwhere(binary).astype(np.float64) * np.asarray(spacing)
    centered = coords - coords.mean(axis=0)
    cov = centered.T @ centered / len(coords)
    eigs = np.sort(np.linalg.eigvalsh(cov))[::-1]
    eigs = np.clip(eigs, 0.0, None)
    if eigs[0] > 0:
        elongation = float(np.sqrt(eigs[1] / eigs[0]))
        flatness = float(np.sqrt(eigs[2] / eigs[0]))
    else:
        elongation = flatness = 1.0

    idx = np.argwhere(binary)
    box = BoundingBox(
        lo=tuple(int(v) for v in idx.min(axis=0)),
        hi=tuple(int(v) for v in idx.max(axis=0)),
    )
    return ShapeReport(volume_mm3, area, sphericity, elongation, flatness, box)


@dataclass(frozen=True)
class GLCMFeatures:
    bins: int
    contrast: float
    energy: float
    homogeneity: float
    correlation: float
    entropy: float

    def as_dict(self) -> dict:
        return {
            "bins": self.bins,
            "contrast": self.contrast,
            "energy": self.energy,
            "homogeneity": self.homogeneity,
            "correlation": self.correlation,
            "entropy": self.entropy,
        }


_DEGENERATE_GLCM = {"contrast": 0.0, "energy": 1.0, "homogeneity": 1.0, "correlation": 1.0, "entropy": 0.0}


def quantize_roi(values: np.ndarray, bins: int) -> np.ndarray:
    """Equal-width quantization over the roi's own [min, max]; a constant
    roi lands entirely in bin 0."""
    vmin, vmax = values.min(), values.max()
    if vmax == vmin:
        return np.zeros(values.shape, dtype=np.int64)
    q = np.floor((values - vmin) / (vmax - vmin) * bins).astype(np.int64)
    return np.minimum(q, bins - 1)


def glcm_matrix(quantized: np.ndarray, roi: np.ndarray, bins: int) -> np.ndarray:
    """Symmetric co-occurrence counts over the 13 unit offsets, restricted
    to voxel pairs that are both inside the roi."""
    counts = np.zeros((bins, bins), dtype=np.float64)
    dims = roi.shape
    for off in GLCM_OFFSETS:
        src = tuple(slice(max(0, -o), dims[a] - max(0, o)) for a, o in enumerate(off))
        dst = tuple(slice(max(0, o), dims[a] + min(0, o)) for a, o in enumerate(off))
        both = roi[src] & roi[dst]
        a = quantized[src][both]
        b = quantized[dst][both]
        np.add.at(counts, (a, b), 1.0)
        np.add.at(counts, (b, a), 1.0)
    return counts


def glcm_features_from_matrix(p: np.ndarray, bins: int) -> GLCMFeatures:
    i, j = np.indices((bins, bins))
    contrast = float((p * (i - j) ** 2).sum())
    energy = float((p * p).sum())
    homogeneity = float((p / (1.0 + np.abs(i - j))).sum())
    nz = p[p > 0]
    entropy = float(-(nz * np.log2(nz)).sum())
    px = p.sum(axis=1)
    mu = float((np.arange(bins) * px).sum())
    sigma2 = float(((np.arange(bins) - mu) ** 2 * px).sum())
    if sigma2 > 0:
        correlation = float((p * (i - mu) * (j - mu)).sum() / sigma2)
    else:
        correlation = 1.0
    return GLCMFeatures(bins, contrast, energy, homogeneity, correlation, entropy)


def analyze_lesion_texture(
    volume: Volume,
    roi: RoiSelector,
    bins: int = DEFAULT_GLCM_BINS,
    mask: MaskVolume | None = None,
) -> GLCMFeatures:
    """GLCM texture features of the roi at the given gray-level count.

    The matrix is symmetric, accumulated over the 13 unique 3D unit
    offsets, and normalized to probabilities.  Regions with no interior
    voxel pair (or constant intensity) report the degenerate single-cell
    values.
    """
    if bins < 2:
        raise InvalidBins(f"bins must be at least 2, got {bins}")
    selection = roi.resolve(volume, mask)
    if int(selection.sum()) < 2:
        raise EmptyRoi("texture roi needs at least 2 voxels")
    quantized = np.zeros(volume.dims, dtype=np.int64)
    quantized[selection] = quantize_roi(volume.voxels[selection], bins)
    counts = glcm_matrix(quantized, selection, bins)
    total = counts.sum()
    if total == 0:
        return GLCMFeatures(bins=bins, **_DEGENERATE_GLCM)
    return glcm_features_from_matrix(counts / total, bins)


@dataclass(frozen=True)
class RadiomicsSignature:
    """Ordered feature-name -> value map; key set documented in SIGNATURE_KEYS."""

    values: dict[str, float]

    def __post_init__(self):
        if tuple(self.values) != SIGNATURE_KEYS:
            raise ValueError("signature keys must match the documented schema")

    def canonical_json(self) -> str:
        return json.dumps(self.values, sort_keys=True, separators=(",", ":"))

    def as_dict(self) -> dict:
        return dict(self.values)


def extract_radiomics_signature(
    volume: Volume,
    mask: MaskVolume,
    label: int,
    bins: int = DEFAULT_GLCM_BINS,
) -> RadiomicsSignature:
    """Concatenated first-order, shape, and texture features for one label,
    under fixed namespaced keys."""
    if not (mask.labels == label).any():
        raise LabelNotFound(f"label {label} has no voxels")
    roi = RoiSelector.from_label(label)
    first = analyze_hu_distribution(volume, roi, mask)
    shape = analyze_shape_properties(mask, label)
    texture = analyze_lesion_texture(volume, roi, bins, mask)
    values = {
        "firstorder.count": float(first.count),
        "firstorder.mean": first.mean,
        "firstorder.std": first.std,
        "firstorder.min": first.min,
        "firstorder.max": first.max,
        "firstorder.median": first.median,
        "firstorder.p10": first.p10,
        "firstorder.p90": first.p90,
        "shape.volume_mm3": shape.volume_mm3,
        "shape.surface_area_mm2": shape.surface_area_mm2,
        "shape.sphericity": shape.sphericity,
        "shape.elongation": shape.elongation,
        "shape.flatness": shape.flatness,
        "glcm.contrast": texture.contrast,
        "glcm.energy": texture.energy,
        "glcm.homogeneity": texture.homogeneity,
        "glcm.correlation": texture.correlation,
        "glcm.entropy": texture.entropy,
    }
    return RadiomicsSignature(values)


# chart layout constants (fixed canvas contract)
_CHART_WIDTH = 640
_ROW_HEIGHT = 22
_LABEL_COLUMN = 230
_BAR_MAX = 320
_MARGIN = 10


def chart_size(n_features: int) -> tuple[int, int]:
    """Canvas (width, height) the chart renderer uses for n features."""
    return _CHART_WIDTH, 2 * _MARGIN + _ROW_HEIGHT * n_features


def visualize_radiomics_chart(signature: RadiomicsSignature | dict) -> bytes:
    """Deterministic horizontal bar chart of a signature as SVG bytes.

    One bar per feature in the signature's own order; bar lengths scale to
    the largest absolute value; labels carry 4 significant digits.
    """
    values = signature.values if isinstance(signature, RadiomicsSignature) else dict(signature)
    if not values:
        raise EmptySignature("signature has no features")
    height = 2 * _MARGIN + _ROW_HEIGHT * len(values)
    scale = max(abs(v) for v in values.values())
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_CHART_WIDTH}" height="{height}" '
        f'font-family="monospace" font-size="12">',
        f'<rect width="{_CHART_WIDTH}" height="{height}" fill="white"/>',
    ]
    for row, (name, value) in enumerate(values.items()):
        y = _MARGIN + row * _ROW_HEIGHT
        bar = 0.0 if scale == 0 else abs(value) / scale * _BAR_MAX
        parts.append(f'<text x="{_MARGIN}" y="{y + 15}">{name}</text>')
        parts.append(
            f'<rect class="bar" x="{_LABEL_COLUMN}" y="{y + 4}" '
            f'width="{bar:.2f}" height="{_ROW_HEIGHT - 8}" fill="#4878a8"/>'
        )
        parts.append(f'<text x="{_LABEL_COLUMN + _BAR_MAX + 8}" y="{y + 15}">{value:.4g}</text>')
    parts.append("</svg>")
    return "\n".join(parts).encode("utf-8")
