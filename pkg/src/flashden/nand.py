"""Raw NAND chip model.

Pages are programmed individually, blocks are erased as a whole, and a page
must be erased before it can be programmed again. Each page carries a spare
(OOB) area in which the FTL stores a small self-describing record.
"""
from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadBlockAccess,
    GeometryMismatch,
    MalformedImage,
    NonSequentialProgram,
    OutOfRange,
    PageNotProgrammed,
    ProgramOnProgrammedPage,
)

ERASED_BYTE = 0xFF


@dataclass(frozen=True)
class FlashGeometry:
    page_data_bytes: int = 2048
    page_oob_bytes: int = 64
    pages_per_block: int = 64
    block_count: int = 512
    overprovision_fraction: float = 0.10

    def __post_init__(self):
        for name in ("page_data_bytes", "page_oob_bytes", "pages_per_block", "block_count"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.page_oob_bytes < OOB_RECORD_BYTES:
            raise ValueError(f"page_oob_bytes must be >= {OOB_RECORD_BYTES}")
        if not 0.0 <= self.overprovision_fraction < 1.0:
            raise ValueError("overprovision_fraction must be in [0, 1)")
        if self.exported_blocks < 1:
            raise ValueError("geometry exports no logical blocks")

    @property
    def page_bytes(self) -> int:
        return self.page_data_bytes + self.page_oob_bytes

    @property
    def block_bytes(self) -> int:
        return self.page_data_bytes * self.pages_per_block

    @property
    def total_pages(self) -> int:
        return self.block_count * self.pages_per_block

    @property
    def exported_blocks(self) -> int:
        # small epsilon guards 512 * 0.9 = 460.79999... style float error
        return int(self.block_count * (1.0 - self.overprovision_fraction) + 1e-9)

    @property
    def logical_sectors(self) -> int:
        return self.exported_blocks * self.pages_per_block


@dataclass(frozen=True)
class PageContent:
    data: bytes
    oob: bytes

    @classmethod
    def erased(cls, geometry: FlashGeometry) -> "PageContent":
        return cls(b"\xff" * geometry.page_data_bytes, b"\xff" * geometry.page_oob_bytes)

    def is_erased(self) -> bool:
        return _all_ff(self.data) and _all_ff(self.oob)


def _all_ff(buf: bytes) -> bool:
    return buf.count(ERASED_BYTE) == len(buf)


# OOB record: magic(2) | lba(8, BE) | seq(8, BE) | valid(1) | crc32(4, BE) | 0xFF...
OOB_MAGIC = b"OF"
OOB_RECORD_BYTES = 23
VALID_OFFSET = 18
FLAG_VALID = 0xFF
FLAG_INVALID = 0x00
_OOB_HEAD = struct.Struct(">2sQQ")


@dataclass(frozen=True)
class OobRecord:
    lba: int
    seq: int
    valid: bool = True

    def encode(self, oob_bytes: int) -> bytes:
        head = _OOB_HEAD.pack(OOB_MAGIC, self.lba, self.seq)
        flag = FLAG_VALID if self.valid else FLAG_INVALID
        body = head + bytes([flag]) + struct.pack(">I", zlib.crc32(head))
        return body + b"\xff" * (oob_bytes - len(body))

    @classmethod
    def decode(cls, oob: bytes) -> "OobRecord | None":
        """Parse a spare area. Returns None for a never-programmed (all-0xFF) area.

        Raises ValueError if the record is present but malformed or fails its CRC.
        """
        if _all_ff(oob):
            return None
        magic, lba, seq = _OOB_HEAD.unpack_from(oob)
        if magic != OOB_MAGIC:
            raise ValueError("bad OOB magic")
        (crc,) = struct.unpack_from(">I", oob, VALID_OFFSET + 1)
        if crc != zlib.crc32(oob[:VALID_OFFSET]):
            raise ValueError("OOB CRC mismatch")
        return cls(lba, seq, oob[VALID_OFFSET] == FLAG_VALID)


class NandChip:
    """A single NAND die: ``block_count`` blocks of ``pages_per_block`` pages."""

    def __init__(self, geometry: FlashGeometry | None = None):
        self.geometry = geometry or FlashGeometry()
        g = self.geometry
        self._cells = np.full((g.block_count, g.pages_per_block, g.page_bytes), ERASED_BYTE, dtype=np.uint8)
        self.watermarks = [0] * g.block_count
        self.erase_counts = [0] * g.block_count
        self.bad_blocks: set[int] = set()
        self.total_erases = 0

    def _check(self, block: int, page: int | None = None):
        g = self.geometry
        if not 0 <= block < g.block_count:
            raise OutOfRange(f"block {block} outside 0..{g.block_count - 1}")
        if page is not None and not 0 <= page < g.pages_per_block:
            raise OutOfRange(f"page {page} outside 0..{g.pages_per_block - 1}")

    def _check_writable(self, block: int):
        if block in self.bad_blocks:
            raise BadBlockAccess(f"block {block} is bad")

    def program_page(self, block: int, page: int, content: PageContent):
        self._check(block, page)
        self._check_writable(block)
        g = self.geometry
        if len(content.data) != g.page_data_bytes or len(content.oob) != g.page_oob_bytes:
            raise GeometryMismatch("page content does not match chip geometry")
        mark = self.watermarks[block]
        if page < mark or not np.all(self._cells[block, page] == ERASED_BYTE):
            raise ProgramOnProgrammedPage(f"block {block} page {page} already programmed")
        if page > mark:
            raise NonSequentialProgram(f"block {block}: page {page} programmed before page {mark}")
        row = self._cells[block, page]
        row[: g.page_data_bytes] = np.frombuffer(content.data, dtype=np.uint8)
        row[g.page_data_bytes :] = np.frombuffer(content.oob, dtype=np.uint8)
        self.watermarks[block] = mark + 1

    def read_page(self, block: int, page: int) -> PageContent:
        self._check(block, page)
        row = self._cells[block, page]
        n = self.geometry.page_data_bytes
        return PageContent(row[:n].tobytes(), row[n:].tobytes())

    def read_oob(self, block: int, page: int) -> bytes:
        self._check(block, page)
        return self._cells[block, page, self.geometry.page_data_bytes :].tobytes()

    def erase_block(self, block: int):
        self._check(block)
        self._check_writable(block)
        self._cells[block] = ERASED_BYTE
        self.watermarks[block] = 0
        self.erase_counts[block] += 1
        self.total_erases += 1

    def clear_oob_valid_flag(self, block: int, page: int):
        self._check(block, page)
        self._check_writable(block)
        if page >= self.watermarks[block]:
            raise PageNotProgrammed(f"block {block} page {page} is not programmed")
        # partial program: bits can only go 1 -> 0
        self._cells[block, page, self.geometry.page_data_bytes + VALID_OFFSET] &= FLAG_INVALID

    def mark_bad(self, block: int):
        """Fault injection: the block fails; its contents stay readable."""
        self._check(block)
        self.bad_blocks.add(block)

    def dump_image(self) -> "FlashImage":
        return FlashImage(self.geometry, self._cells.tobytes())


IMAGE_MAGIC = b"FDIMG001"
_IMAGE_HEADER = struct.Struct(">8sIIII8s")
IMAGE_HEADER_BYTES = _IMAGE_HEADER.size


class FlashImage:
    """A bit-exact raw dump: geometry header followed by every page, block-major.

    Within each page the data area precedes the spare area.
    """

    def __init__(self, geometry: FlashGeometry, body: bytes):
        expected = geometry.total_pages * geometry.page_bytes
        if len(body) != expected:
            raise MalformedImage(f"image body is {len(body)} bytes, geometry needs {expected}")
        self.geometry = geometry
        self.body = body

    def to_bytes(self) -> bytes:
        g = self.geometry
        header = _IMAGE_HEADER.pack(
            IMAGE_MAGIC, g.page_data_bytes, g.page_oob_bytes, g.pages_per_block, g.block_count, bytes(8)
        )
        return header + self.body

    @classmethod
    def from_bytes(cls, raw: bytes) -> "FlashImage":
        if len(raw) < IMAGE_HEADER_BYTES:
            raise MalformedImage("image shorter than its header")
        magic, data, oob, ppb, blocks, _reserved = _IMAGE_HEADER.unpack_from(raw)
        if magic != IMAGE_MAGIC:
            raise MalformedImage(f"bad image magic {magic!r}")
        try:
            geometry = FlashGeometry(data, oob, ppb, blocks)
        except ValueError as exc:
            raise MalformedImage(str(exc)) from exc
        return cls(geometry, bytes(raw[IMAGE_HEADER_BYTES:]))

    def save(self, path: str | Path):
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "FlashImage":
        return cls.from_bytes(Path(path).read_bytes())

    def pages(self) -> np.ndarray:
        """Read-only view shaped (blocks, pages_per_block, page_bytes)."""
        g = self.geometry
        arr = np.frombuffer(self.body, dtype=np.uint8)
        return arr.reshape(g.block_count, g.pages_per_block, g.page_bytes)

    def page(self, block: int, page: int) -> PageContent:
        row = self.pages()[block, page]
        n = self.geometry.page_data_bytes
        return PageContent(row[:n].tobytes(), row[n:].tobytes())

    def __eq__(self, other):
        return isinstance(other, FlashImage) and self.geometry == other.geometry and self.body == other.body

    def __len__(self):
        return IMAGE_HEADER_BYTES + len(self.body)
