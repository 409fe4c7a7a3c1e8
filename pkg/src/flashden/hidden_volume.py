"""Hidden-volume deniable encryption on top of the FTL block device.

The whole disk is first filled with random bytes. The public volume spans the
disk and is encrypted under the decoy key; the hidden volume lives at a secret
offset in the second half and is encrypted under the true key. Without the
true key, hidden sectors look like the initial random fill.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .crypto import SectorCipher, derive_key, prf
from .errors import HiddenTooLarge, OutOfRange
from .fs import HIDDEN_MAGIC, PUBLIC_MAGIC
from .ftl import Ftl

__all__ = [
    "VolumeLayout",
    "VolumeView",
    "create_volume",
    "derive_key",
    "hidden_offset",
    "hidden_read",
    "hidden_write",
    "public_read",
    "public_write",
]


@dataclass(frozen=True)
class VolumeLayout:
    logical_sectors: int
    hidden_size_sectors: int
    hidden_offset_sector: int
    decoy_key: bytes = field(repr=False)
    true_key: bytes = field(repr=False)

    def __post_init__(self):
        if self.decoy_key == self.true_key:
            raise ValueError("decoy and true keys must differ")
        if self.hidden_offset_sector < self.logical_sectors // 2:
            raise ValueError("hidden volume must start in the second half")
        if self.hidden_offset_sector + self.hidden_size_sectors > self.logical_sectors:
            raise ValueError("hidden volume runs past the end of the disk")


def hidden_offset(true_key: bytes, logical_sectors: int, hidden_size_sectors: int) -> int:
    if hidden_size_sectors < 1:
        raise ValueError("hidden volume needs at least one sector")
    half = logical_sectors // 2
    room = logical_sectors - half - hidden_size_sectors
    if room < 0:
        raise HiddenTooLarge(f"{hidden_size_sectors} sectors do not fit in the second half ({logical_sectors - half})")
    return half + prf(true_key, "hidden-offset") % max(room, 1)


def create_volume(
    ftl: Ftl,
    decoy_pass: str,
    true_pass: str,
    hidden_size_sectors: int | None = None,
    rng: random.Random | None = None,
) -> VolumeLayout:
    """Random-fill every logical sector through the FTL and lay out both volumes.

    ``rng`` defaults to the OS entropy source; pass a seeded ``random.Random``
    for reproducible runs.
    """
    n = ftl.logical_sectors
    if hidden_size_sectors is None:
        hidden_size_sectors = max(1, n // 8)
    decoy_key = derive_key(decoy_pass)
    true_key = derive_key(true_pass)
    offset = hidden_offset(true_key, n, hidden_size_sectors)
    layout = VolumeLayout(n, hidden_size_sectors, offset, decoy_key, true_key)
    random_fill(ftl, rng)
    return layout


def random_fill(ftl: Ftl, rng: random.Random | None = None):
    rng = rng or random.SystemRandom()
    size = ftl.geometry.page_data_bytes
    for lba in range(ftl.logical_sectors):
        ftl.write(lba, rng.randbytes(size))


def _check_sector(plaintext: bytes, ftl: Ftl):
    if len(plaintext) != ftl.geometry.page_data_bytes:
        raise ValueError("plaintext must be exactly one sector")


def public_write(layout: VolumeLayout, ftl: Ftl, sector: int, plaintext: bytes):
    if not 0 <= sector < layout.logical_sectors:
        raise OutOfRange(f"public sector {sector} outside the disk")
    _check_sector(plaintext, ftl)
    ftl.write(sector, SectorCipher(layout.decoy_key).encrypt(sector, plaintext))


def public_read(layout: VolumeLayout, ftl: Ftl, sector: int) -> bytes:
    if not 0 <= sector < layout.logical_sectors:
        raise OutOfRange(f"public sector {sector} outside the disk")
    return SectorCipher(layout.decoy_key).decrypt(sector, ftl.read(sector))


def _hidden_abs(layout: VolumeLayout, rel_sector: int) -> int:
    if not 0 <= rel_sector < layout.hidden_size_sectors:
        raise OutOfRange(f"hidden sector {rel_sector} outside 0..{layout.hidden_size_sectors - 1}")
    return layout.hidden_offset_sector + rel_sector


def hidden_write(layout: VolumeLayout, ftl: Ftl, rel_sector: int, plaintext: bytes):
    sector = _hidden_abs(layout, rel_sector)
    _check_sector(plaintext, ftl)
    ftl.write(sector, SectorCipher(layout.true_key).encrypt(sector, plaintext))


def hidden_read(layout: VolumeLayout, ftl: Ftl, rel_sector: int) -> bytes:
    sector = _hidden_abs(layout, rel_sector)
    return SectorCipher(layout.true_key).decrypt(sector, ftl.read(sector))


class VolumeView:
    """Adapts one side of a hidden-volume setup to the file-system model."""

    def __init__(self, layout: VolumeLayout, ftl: Ftl, hidden: bool):
        self.layout = layout
        self.ftl = ftl
        self.hidden = hidden
        self.magic = HIDDEN_MAGIC if hidden else PUBLIC_MAGIC
        self.sector_bytes = ftl.geometry.page_data_bytes
        self.sector_count = layout.hidden_size_sectors if hidden else layout.logical_sectors

    def write(self, sector: int, plaintext: bytes):
        if self.hidden:
            hidden_write(self.layout, self.ftl, sector, plaintext)
        else:
            public_write(self.layout, self.ftl, sector, plaintext)

    def read(self, sector: int) -> bytes:
        if self.hidden:
            return hidden_read(self.layout, self.ftl, sector)
        return public_read(self.layout, self.ftl, sector)
