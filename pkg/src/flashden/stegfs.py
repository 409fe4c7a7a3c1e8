"""Steganographic file system model.

Free space is pre-filled with random bytes. Public files go through a plain
FAT-like sequential allocator from sector 0. Each hidden file is stored as
``replica_count`` encrypted copies at sectors derived from the steg key, so a
single surviving replica is enough to recover it.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .crypto import SectorCipher, prf
from .errors import NoFreeSlot, UnknownSector
from .fs import (
    HIDDEN_MAGIC,
    PUBLIC_MAGIC,
    FramedPage,
    SeqAllocator,
    append_file,
    pages_for,
    payload_capacity,
    rewrite_file,
)
from .ftl import Ftl


@dataclass(frozen=True)
class StegConfig:
    steg_key: bytes = field(repr=False)
    disk_sectors: int
    replica_count: int = 4
    max_attempts: int = 64

    def __post_init__(self):
        if self.replica_count < 1:
            raise ValueError("replica_count must be >= 1")
        if self.disk_sectors < 1:
            raise ValueError("disk_sectors must be >= 1")


class _PlainVolume:
    magic = PUBLIC_MAGIC

    def __init__(self, ftl: Ftl):
        self.ftl = ftl
        self.sector_bytes = ftl.geometry.page_data_bytes

    def write(self, sector, plaintext):
        self.ftl.write(sector, plaintext)

    def read(self, sector):
        return self.ftl.read(sector)


class StegFs:
    def __init__(self, ftl: Ftl, config: StegConfig):
        if config.disk_sectors > ftl.logical_sectors:
            raise ValueError("disk_sectors exceeds the device's logical capacity")
        self.ftl = ftl
        self.config = config
        self.cipher = SectorCipher(config.steg_key)
        self.fat = SeqAllocator(0, config.disk_sectors)
        self.public = _PlainVolume(ftl)
        self._steg_used: set[int] = set()
        self._steg_files: dict[int, tuple[int, list[list[int]]]] = {}
        self._next_public_id = 0

    def steg_init(self, rng: random.Random | None = None):
        """Fill every sector of the disk with random bytes."""
        rng = rng or random.SystemRandom()
        size = self.ftl.geometry.page_data_bytes
        for sector in range(self.config.disk_sectors):
            self.ftl.write(sector, rng.randbytes(size))

    def fat_write(self, content: bytes, file_id: int | None = None) -> list[int]:
        """Plaintext public file, appended at the FAT watermark."""
        if file_id is None:
            file_id = self._next_public_id
        self._next_public_id = max(self._next_public_id, file_id + 1)
        return append_file(self.fat, self.public, file_id, content)

    def fat_rewrite(self, sectors: list[int], content: bytes, file_id: int) -> None:
        rewrite_file(self.public, sectors, file_id, content)

    def replica_sector(self, file_id: int, replica: int, page: int) -> int:
        """Key-derived location of one page of one replica, skipping taken sectors."""
        cfg = self.config
        for attempt in range(cfg.max_attempts):
            sector = prf(cfg.steg_key, "steg", file_id, replica, page, attempt) % cfg.disk_sectors
            if sector >= self.fat.next_free and sector not in self._steg_used:
                return sector
        raise NoFreeSlot(f"file {file_id} replica {replica} page {page}: no slot after {cfg.max_attempts} tries")

    def steg_write(self, file_id: int, content: bytes) -> list[list[int]]:
        page_bytes = self.ftl.geometry.page_data_bytes
        cap = payload_capacity(page_bytes)
        n_pages = pages_for(len(content), page_bytes)
        replicas = []
        for replica in range(self.config.replica_count):
            sectors = []
            for page in range(n_pages):
                sector = self.replica_sector(file_id, replica, page)
                self._steg_used.add(sector)
                sectors.append(sector)
            replicas.append(sectors)
        for sectors in replicas:
            for page, sector in enumerate(sectors):
                frame = FramedPage(HIDDEN_MAGIC, file_id, page, content[page * cap : (page + 1) * cap])
                self.ftl.write(sector, self.cipher.encrypt(sector, frame.encode(page_bytes)))
        self._steg_files[file_id] = (len(content), replicas)
        return replicas

    def steg_read(self, file_id: int) -> bytes:
        """Return the first replica whose pages all still verify."""
        if file_id not in self._steg_files:
            raise UnknownSector(f"no hidden file {file_id}")
        size, replicas = self._steg_files[file_id]
        for sectors in replicas:
            out = bytearray()
            for page, sector in enumerate(sectors):
                plain = self.cipher.decrypt(sector, self.ftl.read(sector))
                frame = FramedPage.decode(plain, HIDDEN_MAGIC)
                if frame is None or frame.file_id != file_id or frame.seq != page:
                    break
                out += frame.payload
            else:
                return bytes(out[:size])
        raise UnknownSector(f"every replica of hidden file {file_id} has been overwritten")
