"""Shared fixtures: hand-built NIfTI bytes (independent of the package's
own writer) and ready-made workspaces over phantom files."""

from __future__ import annotations

import struct

import numpy as np
import pytest

from ctkit import phantoms
from ctkit.server import Toolbox
from ctkit.volume import write_nifti

DTYPE_TABLE = {2: ("u1", 8), 4: ("<i2", 16), 8: ("<i4", 32), 16: ("<f4", 32), 64: ("<f8", 64)}


def handmade_nifti(values: np.ndarray, spacing=(1.0, 1.0, 1.0), datatype=4,
                   scl_slope=1.0, scl_inter=0.0, magic=b"n+1\x00") -> bytes:
    """Oracle NIfTI writer: packs the 348-byte header field by field,
    independent of ctkit.volume.write_nifti."""
    dtype, bitpix = DTYPE_TABLE[datatype]
    hdr = bytearray(348)
    struct.pack_into("<i", hdr, 0, 348)                       # sizeof_hdr
    struct.pack_into("<8h", hdr, 40, 3, *values.shape, 1, 1, 1, 1)   # dim
    struct.pack_into("<h", hdr, 70, datatype)                 # datatype
    struct.pack_into("<h", hdr, 72, bitpix)                   # bitpix
    struct.pack_into("<8f", hdr, 76, 1.0, *spacing, 0, 0, 0, 0)      # pixdim
    struct.pack_into("<f", hdr, 108, 352.0)                   # vox_offset
    struct.pack_into("<f", hdr, 112, scl_slope)
    struct.pack_into("<f", hdr, 116, scl_inter)
    hdr[344:348] = magic
    return bytes(hdr) + b"\x00" * 4 + np.asarray(values).astype(dtype).tobytes(order="F")


@pytest.fixture
def lesion_root(tmp_path):
    """Data root with one lesion phantom volume and its mask (label 99)."""
    vox, labels = phantoms.labeled_lesion_volume(lesion_label=99)
    (tmp_path / "vol.nii").write_bytes(write_nifti(np.round(vox), datatype=4))
    (tmp_path / "mask.nii").write_bytes(write_nifti(labels, datatype=4))
    return tmp_path


@pytest.fixture
def loaded_toolbox(lesion_root):
    toolbox = Toolbox(lesion_root)
    assert not toolbox.call_tool("load_data", {"path": "vol.nii"}).is_error
    assert not toolbox.call_tool("load_mask", {"path": "mask.nii"}).is_error
    return toolbox
