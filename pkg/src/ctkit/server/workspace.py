"""Per-session state: at most one volume and one mask at a time."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from ..morphometry import MaskVolume
from ..volume import Volume


@dataclass
class Workspace:
    """Mutable session state owned by a single toolbox instance.

    Reloading a volume drops any mask, preserving the invariant that a
    mask is always registered to the current volume.
    """

    session_id: str = "local"
    volume: Volume | None = None
    mask: MaskVolume | None = None
    history: list[tuple[str, str]] = field(default_factory=list)

    def install_volume(self, volume: Volume) -> None:
        self.volume = volume
        self.mask = None

    def install_mask(self, mask: MaskVolume) -> None:
        if self.volume is None or tuple(mask.dims) != tuple(self.volume.dims):
            raise ValueError("mask must be registered to the loaded volume")
        self.mask = mask

    def digest(self) -> str:
        """Content hash of the loaded state, used to check that in-band
        tool errors leave the workspace untouched."""
        h = hashlib.sha256()
        h.update((self.volume.source_digest if self.volume else "no-volume").encode())
        h.update((self.mask.digest() if self.mask else "no-mask").encode())
        return h.hexdigest()
