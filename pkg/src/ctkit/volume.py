"""NIfTI-1 volume ingestion, HU calibration, and intensity windowing.

The parser handles the classic single-file layout: a little-endian 348-byte
header with magic ``n+1``, an optional gzip wrapper, and a dense voxel
payload at ``vox_offset``.  Voxels are stored with the first axis fastest,
so arrays here are indexed ``voxels[i, j, k]`` with i=sagittal(x),
j=coronal(y), k=axial(z).  The qform/sform affine is deliberately ignored.
"""

from __future__ import annotations

import gzip
import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .errors import InvalidWindow, MalformedHeader, TruncatedPayload, UnsupportedDatatype

HEADER_SIZE = 348
GZIP_MAGIC = b"\x1f\x8b"

# datatype code -> (little-endian numpy dtype, canonical name)
DATATYPES = {
    2: ("u1", "uint8"),
    4: ("<i2", "int16"),
    8: ("<i4", "int32"),
    16: ("<f4", "float32"),
    64: ("<f8", "float64"),
}
INTEGER_DATATYPE_CODES = (2, 4, 8)
_BITPIX = {2: 8, 4: 16, 8: 32, 16: 32, 64: 64}


@dataclass(frozen=True)
class Volume:
    """A calibrated CT volume.

    ``voxels`` holds HU values as float64, shape ``dims``, read-only.
    ``source_digest`` is the SHA-256 of the bytes the volume was parsed
    from, so identical inputs are recognizable downstream.
    """

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    voxels: np.ndarray
    source_digest: str
    datatype_name: str = "float64"

    def __post_init__(self):
        if self.voxels.shape != tuple(self.dims):
            raise ValueError(f"voxel shape {self.voxels.shape} does not match dims {self.dims}")
        if any(d <= 0 for d in self.dims):
            raise ValueError(f"dims must be positive, got {self.dims}")
        if any(s <= 0 for s in self.spacing):
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        if not np.all(np.isfinite(self.voxels)):
            raise ValueError("voxels contain non-finite HU values")
        self.voxels.setflags(write=False)

    @property
    def voxel_volume_mm3(self) -> float:
        return float(self.spacing[0] * self.spacing[1] * self.spacing[2])


@dataclass(frozen=True)
class WindowPreset:
    name: str
    center: float
    width: float


# Standard clinical window presets, fixed order.
WINDOW_PRESETS = (
    WindowPreset("lung", -600.0, 1500.0),
    WindowPreset("soft_tissue", 40.0, 400.0),
    WindowPreset("bone", 300.0, 1500.0),
    WindowPreset("brain", 40.0, 80.0),
    WindowPreset("liver", 60.0, 150.0),
)
PRESETS_BY_NAME = {p.name: p for p in WINDOW_PRESETS}


@dataclass(frozen=True)
class MetadataReport:
    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    datatype: str
    hu_min: float
    hu_max: float
    window_presets: tuple[str, ...]

    def as_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "spacing": list(self.spacing),
            "datatype": self.datatype,
            "hu_min": self.hu_min,
            "hu_max": self.hu_max,
            "window_presets": list(self.window_presets),
        }


def _decompress(data: bytes) -> bytes:
    if data[:2] == GZIP_MAGIC:
        return gzip.decompress(data)
    return data


def read_nifti_raw(data: bytes) -> tuple[np.ndarray, tuple[float, float, float], int, float, float]:
    """Decode header and payload of a NIfTI-1 byte string.

    Returns (raw voxel array shaped (i, j, k), spacing, datatype code,
    scl_slope, scl_inter).  No intensity scaling is applied here.
    """
    data = _decompress(data)
    if len(data) < HEADER_SIZE:
        raise MalformedHeader(f"file shorter than the {HEADER_SIZE}-byte header")
    magic = data[344:348]
    if magic[:3] != b"n+1":
        raise MalformedHeader(f"bad magic {magic[:3]!r}, expected b'n+1'")
    sizeof_hdr = struct.unpack_from("<i", data, 0)[0]
    if sizeof_hdr != HEADER_SIZE:
        raise MalformedHeader(f"sizeof_hdr is {sizeof_hdr}, expected {HEADER_SIZE}")

    dim = struct.unpack_from("<8h", data, 40)
    datatype = struct.unpack_from("<h", data, 70)[0]
    pixdim = struct.unpack_from("<8f", data, 76)
    vox_offset = int(struct.unpack_from("<f", data, 108)[0])
    scl_slope, scl_inter = struct.unpack_from("<2f", data, 112)

    ndim = dim[0]
    if ndim < 1 or ndim > 7:
        raise MalformedHeader(f"dim[0]={ndim} out of range")
    if ndim > 3 and any(d > 1 for d in dim[4 : ndim + 1]):
        raise MalformedHeader("only 3D volumes are supported")
    dims = tuple(int(dim[a]) if a <= ndim else 1 for a in (1, 2, 3))
    if any(d < 1 for d in dims):
        raise MalformedHeader(f"non-positive dimension in {dims}")
    spacing = tuple(float(pixdim[a]) for a in (1, 2, 3))
    if any(s <= 0 for s in spacing):
        raise MalformedHeader(f"non-positive spacing in {spacing}")

    if datatype not in DATATYPES:
        raise UnsupportedDatatype(f"datatype code {datatype} not supported")
    dtype, _ = DATATYPES[datatype]
    if vox_offset < HEADER_SIZE:
        raise MalformedHeader(f"vox_offset {vox_offset} overlaps the header")

    count = dims[0] * dims[1] * dims[2]
    need = count * np.dtype(dtype).itemsize
    if len(data) < vox_offset + need:
        raise TruncatedPayload(
            f"payload needs {need} bytes at offset {vox_offset}, file has {len(data)}"
        )
    raw = np.frombuffer(data, dtype=dtype, count=count, offset=vox_offset)
    return raw.reshape(dims, order="F"), spacing, datatype, float(scl_slope), float(scl_inter)


def parse_nifti(data: bytes) -> Volume:
    """Parse NIfTI-1 bytes (optionally gzipped) into a calibrated Volume.

    HU values are ``raw * scl_slope + scl_inter``; a slope of 0 is treated
    as identity per the format convention.
    """
    digest = hashlib.sha256(data).hexdigest()
    raw, spacing, datatype, slope, inter = read_nifti_raw(data)
    if slope == 0.0:
        slope = 1.0
    voxels = raw.astype(np.float64) * slope + inter
    if not np.all(np.isfinite(voxels)):
        raise MalformedHeader("non-finite voxel values after HU scaling")
    return Volume(
        dims=raw.shape,
        spacing=spacing,
        voxels=voxels,
        source_digest=digest,
        datatype_name=DATATYPES[datatype][1],
    )


def write_nifti(
    voxels: np.ndarray,
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0),
    datatype: int = 4,
    scl_slope: float = 1.0,
    scl_inter: float = 0.0,
    compress: bool = False,
) -> bytes:
    """Serialize an (i, j, k)-indexed array to single-file NIfTI-1 bytes.

    The array is cast to the requested datatype code without range checks;
    callers pick a code wide enough for their values.
    """
    if voxels.ndim != 3:
        raise ValueError("expected a 3D array")
    if datatype not in DATATYPES:
        raise UnsupportedDatatype(f"datatype code {datatype} not supported")
    dtype, _ = DATATYPES[datatype]

    header = bytearray(HEADER_SIZE)
    struct.pack_into("<i", header, 0, HEADER_SIZE)
    struct.pack_into("<8h", header, 40, 3, *voxels.shape, 1, 1, 1, 1)
    struct.pack_into("<2h", header, 70, datatype, _BITPIX[datatype])
    struct.pack_into("<8f", header, 76, 1.0, *spacing, 1.0, 1.0, 1.0, 1.0)
    struct.pack_into("<f", header, 108, float(HEADER_SIZE + 4))
    struct.pack_into("<2f", header, 112, scl_slope, scl_inter)
    header[344:348] = b"n+1\x00"

    payload = np.asarray(voxels).astype(dtype).tobytes(order="F")
    out = bytes(header) + b"\x00\x00\x00\x00" + payload
    if compress:
        # mtime pinned so equal volumes produce equal bytes
        out = gzip.compress(out, mtime=0)
    return out


def inspect_metadata(volume: Volume) -> MetadataReport:
    """Report dims, spacing, datatype, and the exact HU range of a volume."""
    return MetadataReport(
        dims=volume.dims,
        spacing=volume.spacing,
        datatype=volume.datatype_name,
        hu_min=float(volume.voxels.min()),
        hu_max=float(volume.voxels.max()),
        window_presets=tuple(p.name for p in WINDOW_PRESETS),
    )


def list_window_presets() -> list[WindowPreset]:
    """Return the fixed window preset table, deterministic order."""
    return list(WINDOW_PRESETS)


def apply_window(values, center: float, width: float) -> np.ndarray:
    """Map HU values to 8-bit display gray levels.

    The interval [center - width/2, center + width/2] maps linearly onto
    [0, 255]; values outside clamp.  Rounding is half-up for cross-run
    determinism.
    """
    if width <= 0:
        raise InvalidWindow(f"window width must be positive, got {width}")
    v = np.asarray(values, dtype=np.float64)
    scaled = (v - (center - width / 2.0)) / width * 255.0
    return np.clip(np.floor(scaled + 0.5), 0.0, 255.0).astype(np.uint8)
