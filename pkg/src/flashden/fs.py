"""Behavioral file-system model: a sequential (exFAT-like) allocator over a volume.

Every sector the model writes is a *framed page*::

    magic(8) | file_id(4, BE) | seq(4, BE) | payload | crc32(4, BE)

The 64-bit magic plus the CRC make "this sector holds our data" an exact
predicate: a random page passes with probability 2**-96.
"""
from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass, field
from typing import Protocol

from .errors import RegionFull, UnknownSector

PUBLIC_MAGIC = b"PUBFS01\x00"
HIDDEN_MAGIC = b"HIDFS01\x00"
MAGICS = (PUBLIC_MAGIC, HIDDEN_MAGIC)

_HEAD = struct.Struct(">8sII")
FRAME_OVERHEAD = _HEAD.size + 4


def payload_capacity(page_bytes: int) -> int:
    return page_bytes - FRAME_OVERHEAD


@dataclass(frozen=True)
class FramedPage:
    magic: bytes
    file_id: int
    seq: int
    payload: bytes

    def encode(self, page_bytes: int) -> bytes:
        cap = payload_capacity(page_bytes)
        if len(self.payload) > cap:
            raise ValueError(f"payload of {len(self.payload)} bytes exceeds capacity {cap}")
        body = _HEAD.pack(self.magic, self.file_id, self.seq) + self.payload.ljust(cap, b"\x00")
        return body + struct.pack(">I", zlib.crc32(body))

    @classmethod
    def decode(cls, page: bytes, magic: bytes | None = None) -> "FramedPage | None":
        """Return the frame if ``page`` verifies, else None."""
        if not verify(page, magic):
            return None
        m, file_id, seq = _HEAD.unpack_from(page)
        return cls(m, file_id, seq, page[_HEAD.size : -4])


def verify(page: bytes, magic: bytes | None = None) -> bool:
    """True iff the page carries a known (or the given) magic and its CRC checks."""
    head = page[:8]
    if magic is None:
        if head not in MAGICS:
            return False
    elif head != magic:
        return False
    if len(page) < FRAME_OVERHEAD:
        return False
    (crc,) = struct.unpack_from(">I", page, len(page) - 4)
    return crc == zlib.crc32(page[:-4])


class Volume(Protocol):
    """What the file-system model writes through: sector-addressed, one page per sector."""

    magic: bytes
    sector_bytes: int

    def write(self, sector: int, plaintext: bytes) -> None: ...

    def read(self, sector: int) -> bytes: ...


@dataclass
class SeqAllocator:
    start: int
    end: int
    next_free: int = field(default=-1)

    def __post_init__(self):
        if not 0 <= self.start <= self.end:
            raise ValueError("allocator region must satisfy 0 <= start <= end")
        if self.next_free < 0:
            self.next_free = self.start

    @property
    def remaining(self) -> int:
        return self.end - self.next_free

    def allocate(self, count: int) -> list[int]:
        if count > self.remaining:
            raise RegionFull(f"need {count} sectors, {self.remaining} left in [{self.start}, {self.end})")
        first = self.next_free
        self.next_free += count
        return list(range(first, first + count))


def pages_for(size_bytes: int, page_bytes: int) -> int:
    # an empty file still gets one header-only page
    return max(1, math.ceil(size_bytes / payload_capacity(page_bytes)))


def append_file(allocator: SeqAllocator, volume: Volume, file_id: int, content: bytes) -> list[int]:
    """Write ``content`` as framed pages at the next consecutive sectors."""
    cap = payload_capacity(volume.sector_bytes)
    sectors = allocator.allocate(pages_for(len(content), volume.sector_bytes))
    for i, sector in enumerate(sectors):
        chunk = content[i * cap : (i + 1) * cap]
        volume.write(sector, FramedPage(volume.magic, file_id, 0, chunk).encode(volume.sector_bytes))
    return sectors


def read_file(volume: Volume, sectors: list[int], size_bytes: int) -> bytes:
    out = bytearray()
    for sector in sectors:
        frame = FramedPage.decode(volume.read(sector), volume.magic)
        if frame is None:
            raise UnknownSector(f"sector {sector} does not hold a frame of this volume")
        out += frame.payload
    return bytes(out[:size_bytes])


def modify_in_place(volume: Volume, sector: int, new_payload: bytes) -> FramedPage:
    """Rewrite one sector of an existing file with a new payload and bumped seq."""
    old = FramedPage.decode(volume.read(sector), volume.magic)
    if old is None:
        raise UnknownSector(f"sector {sector} was not written by this volume")
    frame = FramedPage(volume.magic, old.file_id, old.seq + 1, new_payload)
    volume.write(sector, frame.encode(volume.sector_bytes))
    return frame


def rewrite_file(volume: Volume, sectors: list[int], file_id: int, content: bytes) -> None:
    """Re-save a file over its own sectors, front to back (no arbitrary-offset writes)."""
    cap = payload_capacity(volume.sector_bytes)
    if pages_for(len(content), volume.sector_bytes) > len(sectors):
        raise RegionFull("new content does not fit in the file's sectors")
    for i, sector in enumerate(sectors):
        frame = FramedPage(volume.magic, file_id, 0, content[i * cap : (i + 1) * cap])
        volume.write(sector, frame.encode(volume.sector_bytes))
