"""Page-mapped, log-structured flash translation layer.

One sector is one flash page. Host writes from every volume share a single
write frontier (the open block); garbage-collection relocations go to a
second frontier of their own. Pages are never overwritten in place. The
authoritative copy of the mapping lives in each page's OOB record, so
:func:`rebuild_mapping` can recover it from a raw dump.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

from .errors import (
    BadBlockAccess,
    CorruptOob,
    DeviceFull,
    NoFreeBlockForRescue,
    NothingToReclaim,
    OutOfLogicalRange,
    TriggerNotMet,
)
from .nand import FLAG_INVALID, VALID_OFFSET, FlashImage, NandChip, OobRecord, PageContent

log = logging.getLogger(__name__)

UNMAPPED = -1

FREE, OPEN, GC_OPEN, USED, BAD = "free", "open", "gc_open", "used", "bad"
HOST, GC = "host", "gc"


@dataclass(frozen=True)
class GcStats:
    victim_block: int
    valid_pages_moved: int
    erased: int


class Ftl:
    def __init__(self, chip: NandChip, gc_threshold: int = 2, wl_delta: int = 4):
        self.chip = chip
        g = chip.geometry
        self.geometry = g
        self.ppb = g.pages_per_block
        self.logical_sectors = g.logical_sectors
        self.gc_threshold = gc_threshold
        self.wl_delta = wl_delta

        self._map = [UNMAPPED] * self.logical_sectors  # lba -> ppn
        self._owner = [UNMAPPED] * g.total_pages  # ppn -> lba while the page is valid
        self.valid_counts = [0] * g.block_count
        self.invalid_counts = [0] * g.block_count
        self.state = [FREE] * g.block_count
        for b in chip.bad_blocks:
            self.state[b] = BAD
        # stream -> [block or None, next page]
        self._frontier = {HOST: [None, 0], GC: [None, 0]}
        self.global_seq = 0

        self.gc_count = 0
        self.wl_count = 0
        self.host_writes = 0
        self.flash_writes = 0
        self.allocation_trace: list[int] = []

    # ------------------------------------------------------------------ views
    @property
    def free_pool(self) -> list[int]:
        return [b for b, s in enumerate(self.state) if s == FREE]

    @property
    def open_block(self) -> int | None:
        return self._frontier[HOST][0]

    @property
    def next_page(self) -> int:
        return self._frontier[HOST][1]

    @property
    def bad_blocks(self) -> set[int]:
        return {b for b, s in enumerate(self.state) if s == BAD}

    def mapping(self) -> dict[int, tuple[int, int]]:
        """Live logical-to-physical map as ``{lba: (block, page)}``."""
        ppb = self.ppb
        return {lba: divmod(ppn, ppb) for lba, ppn in enumerate(self._map) if ppn != UNMAPPED}

    def lookup(self, lba: int) -> tuple[int, int] | None:
        self._check_lba(lba)
        ppn = self._map[lba]
        return None if ppn == UNMAPPED else divmod(ppn, self.ppb)

    @property
    def write_amplification(self) -> float:
        return self.flash_writes / self.host_writes if self.host_writes else 0.0

    # ------------------------------------------------------------- host I/O
    def _check_lba(self, lba: int):
        if not 0 <= lba < self.logical_sectors:
            raise OutOfLogicalRange(f"lba {lba} outside 0..{self.logical_sectors - 1}")

    def write(self, lba: int, data: bytes):
        self._check_lba(lba)
        if len(data) != self.geometry.page_data_bytes:
            raise ValueError(f"sector must be {self.geometry.page_data_bytes} bytes, got {len(data)}")
        ppn = self._next_ppn(HOST)
        self._program(ppn, lba, self.global_seq, data)
        self.global_seq += 1
        self.host_writes += 1
        old = self._map[lba]
        if old != UNMAPPED:
            self._invalidate(old)
        self._bind(lba, ppn)

    def read(self, lba: int) -> bytes:
        self._check_lba(lba)
        ppn = self._map[lba]
        if ppn == UNMAPPED:
            return b"\xff" * self.geometry.page_data_bytes
        return self.chip.read_page(*divmod(ppn, self.ppb)).data

    # ------------------------------------------------------------ internals
    def _program(self, ppn: int, lba: int, seq: int, data: bytes):
        block, page = divmod(ppn, self.ppb)
        oob = OobRecord(lba, seq).encode(self.geometry.page_oob_bytes)
        self.chip.program_page(block, page, PageContent(data, oob))
        self.flash_writes += 1

    def _bind(self, lba: int, ppn: int):
        self._map[lba] = ppn
        self._owner[ppn] = lba
        self.valid_counts[ppn // self.ppb] += 1

    def _invalidate(self, ppn: int):
        block, page = divmod(ppn, self.ppb)
        if block not in self.chip.bad_blocks:
            self.chip.clear_oob_valid_flag(block, page)
        self._owner[ppn] = UNMAPPED
        self.valid_counts[block] -= 1
        self.invalid_counts[block] += 1

    def _take_free_block(self) -> int:
        pool = self.free_pool
        if not pool:
            raise DeviceFull("no free block available")
        erase_counts = self.chip.erase_counts
        return min(pool, key=lambda b: (erase_counts[b], b))

    def _open_new_block(self, stream: str):
        block = self._take_free_block()
        front = self._frontier[stream]
        if front[0] is not None:
            self.state[front[0]] = USED
        self.state[block] = OPEN if stream == HOST else GC_OPEN
        front[0], front[1] = block, 0
        self.allocation_trace.append(block)

    def _next_ppn(self, stream: str) -> int:
        front = self._frontier[stream]
        if front[0] is None or front[1] >= self.ppb:
            if stream == HOST:
                self._reclaim()
            if front[0] is None or front[1] >= self.ppb:
                self._open_new_block(stream)
        ppn = front[0] * self.ppb + front[1]
        front[1] += 1
        return ppn

    def _reclaim(self):
        while len(self.free_pool) < self.gc_threshold:
            try:
                self.garbage_collect()
            except NothingToReclaim:
                break

    # ------------------------------------------------------------------- GC
    def gc_candidates(self) -> list[int]:
        return [b for b, s in enumerate(self.state) if s == USED and self.invalid_counts[b] > 0]

    def pick_victim(self) -> int:
        candidates = self.gc_candidates()
        if not candidates:
            raise NothingToReclaim("no used block holds an invalid page")
        return max(candidates, key=lambda b: (self.invalid_counts[b], -b))

    def garbage_collect(self) -> GcStats:
        victim = self.pick_victim()
        moved = 0
        base = victim * self.ppb
        for page in range(self.chip.watermarks[victim]):
            lba = self._owner[base + page]
            if lba == UNMAPPED:
                continue
            content = self.chip.read_page(victim, page)
            seq = OobRecord.decode(content.oob).seq
            new = self._next_ppn(GC)
            # relocated data keeps its original sequence number (data age)
            self._program(new, lba, seq, content.data)
            self._owner[base + page] = UNMAPPED
            self.valid_counts[victim] -= 1
            self._bind(lba, new)
            moved += 1
        self._erase(victim)
        self.gc_count += 1
        log.debug("gc victim=%d moved=%d", victim, moved)
        self._maybe_wear_level()
        return GcStats(victim, moved, 1)

    def _erase(self, block: int):
        self.chip.erase_block(block)
        self.valid_counts[block] = 0
        self.invalid_counts[block] = 0
        self.state[block] = FREE

    # --------------------------------------------------------- wear leveling
    def wear_spread(self) -> int:
        pool = self.free_pool
        used = [b for b, s in enumerate(self.state) if s == USED]
        if not pool or not used:
            return 0
        counts = self.chip.erase_counts
        return max(counts[b] for b in pool) - min(counts[b] for b in used)

    def _maybe_wear_level(self):
        try:
            self.wear_level()
        except TriggerNotMet:
            pass

    def wear_level(self):
        """Move the coldest in-use block onto the most-worn free block."""
        if self.wear_spread() < self.wl_delta:
            raise TriggerNotMet(f"erase-count spread below {self.wl_delta}")
        counts = self.chip.erase_counts
        cold = min((b for b, s in enumerate(self.state) if s == USED), key=lambda b: (counts[b], b))
        worn = max(self.free_pool, key=lambda b: (counts[b], -b))
        self._copy_block(cold, worn, fresh_seq=False)
        self.state[worn] = USED
        self._erase(cold)
        self.wl_count += 1
        log.debug("wear level %d -> %d", cold, worn)

    def _copy_block(self, src: int, dst: int, fresh_seq: bool):
        """Page-for-page copy of ``src`` onto erased ``dst``, invalid pages included."""
        ppb = self.ppb
        for page in range(self.chip.watermarks[src]):
            content = self.chip.read_page(src, page)
            src_ppn = src * ppb + page
            dst_ppn = dst * ppb + page
            lba = self._owner[src_ppn]
            if lba != UNMAPPED and fresh_seq:
                self._program(dst_ppn, lba, self.global_seq, content.data)
                self.global_seq += 1
            else:
                self.chip.program_page(dst, page, content)
                self.flash_writes += 1
            if lba == UNMAPPED:
                if content.oob[VALID_OFFSET] != FLAG_INVALID and not content.is_erased():
                    self.chip.clear_oob_valid_flag(dst, page)
                self.invalid_counts[dst] += 1
            else:
                self._owner[src_ppn] = UNMAPPED
                self.valid_counts[src] -= 1
                self._bind(lba, dst_ppn)

    # ------------------------------------------------------------ bad blocks
    def retire_bad_block(self, block: int):
        """Rescue a block the chip has flagged bad and drop it from allocation."""
        if block not in self.chip.bad_blocks:
            raise BadBlockAccess(f"block {block} has not been flagged bad")
        state = self.state[block]
        if state in (OPEN, GC_OPEN, USED):
            try:
                rescue = self._take_free_block()
            except DeviceFull as exc:
                raise NoFreeBlockForRescue(f"no free block to rescue block {block}") from exc
            # the bad copy cannot be invalidated, so rescued pages get fresh seqs
            self._copy_block(block, rescue, fresh_seq=True)
            self.state[rescue] = state
            for front in self._frontier.values():
                if front[0] == block:
                    front[0] = rescue
                    self.allocation_trace.append(rescue)
        self.state[block] = BAD
        self.valid_counts[block] = 0
        self.invalid_counts[block] = 0


def rebuild_mapping(image: FlashImage) -> dict[int, tuple[int, int]]:
    """Recover ``{lba: (block, page)}`` purely from the OOB records of a dump."""
    g = image.geometry
    oobs = image.pages()[:, :, g.page_data_bytes :]
    best: dict[int, tuple[int, int, int]] = {}
    for block in range(g.block_count):
        for page in range(g.pages_per_block):
            raw = oobs[block, page].tobytes()
            try:
                rec = OobRecord.decode(raw)
            except ValueError as exc:
                raise CorruptOob(f"block {block} page {page}: {exc}") from exc
            if rec is None or not rec.valid:
                continue
            prev = best.get(rec.lba)
            if prev is None or rec.seq > prev[0]:
                best[rec.lba] = (rec.seq, block, page)
    return {lba: (b, p) for lba, (_, b, p) in sorted(best.items())}
