"""Single-snapshot forensic attack on a raw flash dump.

Every page is classified (erased / decryptable with the decoy key / plaintext
structured / random). Per-block patterns that a PDE-free device cannot produce
are then flagged, and any hit compromises deniability.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from itertools import groupby

import numpy as np

from .crypto import SectorCipher, derive_key
from .errors import GeometryMismatch, MalformedImage
from .fs import MAGICS, verify
from .nand import FlashGeometry, FlashImage, OobRecord, PageContent

DETECTOR_VERSION = "1.0"


class PageClass(str, Enum):
    ERASED = "E"
    DECRYPTABLE = "D"
    STRUCTURED = "S"
    RANDOM = "R"


class BlockSignature(str, Enum):
    SPECIAL1 = "SPECIAL1"
    SPECIAL2 = "SPECIAL2"
    SPECIAL3 = "SPECIAL3"
    STEG_SHARED_BLOCK = "STEG_SHARED_BLOCK"
    NORMAL = "NORMAL"


PDE_DETECTED = "PDE_DETECTED"
NO_EVIDENCE = "NO_EVIDENCE"

E, D, S, R = PageClass.ERASED, PageClass.DECRYPTABLE, PageClass.STRUCTURED, PageClass.RANDOM


@dataclass(frozen=True)
class Profile:
    """``mode='hidden'`` runs the hidden-volume suite (needs the decoy key);
    ``mode='steg'`` runs the steganographic-FS suite on plaintext structure only."""

    mode: str
    decoy_key: bytes | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.mode not in ("hidden", "steg"):
            raise ValueError(f"unknown profile {self.mode!r}")

    @classmethod
    def hidden(cls, decoy_pass: str) -> "Profile":
        return cls("hidden", derive_key(decoy_pass))

    @classmethod
    def steg(cls) -> "Profile":
        return cls("steg")


def _oob_record(oob: bytes) -> OobRecord | None:
    try:
        return OobRecord.decode(oob)
    except ValueError:
        return None


def _decrypts(cipher: SectorCipher, sector: int, data: bytes) -> bool:
    # XTS block 0 depends only on ciphertext block 0, so a 16-byte probe
    # rules out almost every page before the full decrypt
    if cipher.decrypt(sector, data[:16])[:8] not in MAGICS:
        return False
    return verify(cipher.decrypt(sector, data))


def classify_page(
    page: PageContent,
    profile: Profile,
    geometry: FlashGeometry | None = None,
    _cipher: SectorCipher | None = None,
) -> PageClass:
    if geometry is not None and (
        len(page.data) != geometry.page_data_bytes or len(page.oob) != geometry.page_oob_bytes
    ):
        raise GeometryMismatch("page does not match the image geometry")
    if page.is_erased():
        return E
    if profile.mode == "hidden" and profile.decoy_key is not None and len(page.data) >= 16:
        rec = _oob_record(page.oob)
        if rec is not None:
            cipher = _cipher or SectorCipher(profile.decoy_key)
            if _decrypts(cipher, rec.lba, page.data):
                return D
    if verify(page.data):
        return S
    return R


# ---------------------------------------------------------------- detectors
# ``explained`` (optional, per page): random pages the initial fill accounts for.
# Such pages are not evidence of hidden writes in the mixing detectors.
def _random_evidence(classes, explained=None) -> bool:
    if explained is None:
        return R in classes
    return any(c is R and not x for c, x in zip(classes, explained))


def detect_special_block_1(classes, explained=None) -> bool:
    """Fully programmed block mixing decryptable and undecryptable pages."""
    return E not in classes and D in classes and _random_evidence(classes, explained)


def detect_special_block_2(classes, explained=None) -> bool:
    """Programmed prefix mixing decryptable and random pages, then an erased suffix."""
    classes = list(classes)
    if E not in classes:
        return False
    cut = classes.index(E)
    prefix, suffix = classes[:cut], classes[cut:]
    if not prefix or any(c is not E for c in suffix):
        return False
    return D in prefix and _random_evidence(prefix, None if explained is None else list(explained)[:cut])


def detect_special_block_3(classes, invalid) -> bool:
    """All-random block whose invalid pages sit at arbitrary positions.

    ``invalid`` is a per-page sequence of booleans.
    """
    classes = list(classes)
    if not classes or any(c is not R for c in classes):
        return False
    bad = [i for i, flag in enumerate(invalid) if flag]
    if not bad or len(bad) == len(classes):
        return False
    return bad != list(range(len(bad)))


def detect_steg_shared_block(classes, explained=None) -> bool:
    return S in classes and _random_evidence(classes, explained)


def detect_steg_interleave(kinds) -> bool:
    """``kinds``: per-block 'S' (holds plaintext public data) or 'R' (random only),
    in allocation order. True iff a random-only block sits between two public
    blocks; a leading random run is the initial fill and does not count.
    """
    seen_public = False
    gap = False
    for kind in kinds:
        kind = getattr(kind, "value", kind)
        if kind == "S":
            if gap:
                return True
            seen_public = True
        elif seen_public:
            gap = True
    return False


# ------------------------------------------------------------------ report
def rle(classes) -> str:
    return "".join(f"{k.value}{len(list(g))}" for k, g in groupby(classes))


@dataclass
class BlockReport:
    block_index: int
    classes: list[PageClass]
    seqs: list[int | None]
    invalid_pages: list[int]
    chi_square: float | None
    signature: BlockSignature = BlockSignature.NORMAL
    fill_era: list[bool] | None = None

    @property
    def min_seq(self) -> int | None:
        seen = [q for q in self.seqs if q is not None]
        return min(seen) if seen else None

    @property
    def invalid_mask(self) -> list[bool]:
        bad = set(self.invalid_pages)
        return [i in bad for i in range(len(self.classes))]

    def to_dict(self) -> dict:
        return {
            "block_index": self.block_index,
            "signature": self.signature.value,
            "page_classes": rle(self.classes),
            "invalid_pages": self.invalid_pages,
            "fill_era_random_pages": sum(self.fill_era) if self.fill_era else 0,
            "min_seq": self.min_seq,
            "chi_square": self.chi_square,
        }


@dataclass
class Report:
    geometry: FlashGeometry
    profile: str
    blocks: list[BlockReport]
    global_signals: dict[str, bool]
    public_horizon_seq: int | None = None
    scenario: dict | None = None
    @property
    def counts(self) -> dict[str, int]:
        out = {sig.value: 0 for sig in BlockSignature}
        for b in self.blocks:
            out[b.signature.value] += 1
        return out

    @property
    def page_class_counts(self) -> dict[str, int]:
        out = {c.name: 0 for c in PageClass}
        for b in self.blocks:
            for c in b.classes:
                out[c.name] += 1
        return out

    @property
    def verdict(self) -> str:
        flagged = any(b.signature is not BlockSignature.NORMAL for b in self.blocks)
        return PDE_DETECTED if flagged or any(self.global_signals.values()) else NO_EVIDENCE

    def blocks_with(self, signature: BlockSignature) -> list[BlockReport]:
        return [b for b in self.blocks if b.signature is signature]

    def to_dict(self) -> dict:
        g = self.geometry
        doc = {
            "detector_version": DETECTOR_VERSION,
            "geometry": {
                "page_data_bytes": g.page_data_bytes,
                "page_oob_bytes": g.page_oob_bytes,
                "pages_per_block": g.pages_per_block,
                "block_count": g.block_count,
            },
            "profile": self.profile,
            "public_horizon_seq": self.public_horizon_seq,
            "verdict": self.verdict,
            "global_signals": dict(self.global_signals),
            "counts": self.counts,
            "page_class_counts": self.page_class_counts,
            "blocks": [b.to_dict() for b in self.blocks],
        }
        if self.scenario is not None:
            doc["scenario"] = self.scenario
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"


def _chi_square(data: np.ndarray) -> float:
    counts = np.bincount(data.ravel(), minlength=256)
    expected = data.size / 256
    return round(float(((counts - expected) ** 2 / expected).sum()), 3)


def block_signature(block: BlockReport, mode: str) -> BlockSignature:
    classes, explained = block.classes, block.fill_era
    if mode == "hidden":
        if detect_special_block_1(classes, explained):
            return BlockSignature.SPECIAL1
        if detect_special_block_2(classes, explained):
            return BlockSignature.SPECIAL2
        if detect_special_block_3(classes, block.invalid_mask):
            return BlockSignature.SPECIAL3
    elif detect_steg_shared_block(classes, explained):
        return BlockSignature.STEG_SHARED_BLOCK
    return BlockSignature.NORMAL


def scan_block(image: FlashImage, block: int, profile: Profile, cipher: SectorCipher | None = None) -> BlockReport:
    """Classify every page of one block and read its OOB records. Pure."""
    g = image.geometry
    rows = image.pages()[block]
    n = g.page_data_bytes
    if cipher is None and profile.decoy_key is not None:
        cipher = SectorCipher(profile.decoy_key)
    classes: list[PageClass] = []
    seqs: list[int | None] = []
    invalid: list[int] = []
    programmed = []
    for page in range(g.pages_per_block):
        row = rows[page]
        content = PageContent(row[:n].tobytes(), row[n:].tobytes())
        cls = classify_page(content, profile, _cipher=cipher)
        classes.append(cls)
        rec = _oob_record(content.oob) if cls is not E else None
        seqs.append(rec.seq if rec is not None else None)
        if rec is not None and not rec.valid:
            invalid.append(page)
        if cls is not E:
            programmed.append(page)
    chi = _chi_square(rows[programmed, :n]) if programmed else None
    return BlockReport(block, classes, seqs, invalid, chi)


def public_horizon(blocks: list[BlockReport], mode: str) -> int | None:
    """Oldest OOB sequence number carried by a page of public data."""
    public = D if mode == "hidden" else S
    seqs = [q for b in blocks for c, q in zip(b.classes, b.seqs) if c is public and q is not None]
    return min(seqs) if seqs else None


def allocation_order(blocks: list[BlockReport]) -> list[BlockReport]:
    """Programmed blocks sorted by their oldest OOB sequence number."""
    programmed = [b for b in blocks if any(c is not E for c in b.classes)]
    return sorted(programmed, key=lambda b: (b.min_seq is None, b.min_seq or 0, b.block_index))


def analyze(image: FlashImage, profile: Profile) -> Report:
    if not isinstance(image, FlashImage):
        raise MalformedImage("analyze expects a FlashImage")
    cipher = SectorCipher(profile.decoy_key) if profile.decoy_key is not None else None
    blocks = [scan_block(image, b, profile, cipher) for b in range(image.geometry.block_count)]
    horizon = public_horizon(blocks, profile.mode)
    for b in blocks:
        # random data written before any public data is what the initial fill left behind
        b.fill_era = [
            c is R and (horizon is None or (q is not None and q < horizon)) for c, q in zip(b.classes, b.seqs)
        ]
        b.signature = block_signature(b, profile.mode)
    signals = {}
    if profile.mode == "steg":
        # blocks holding only fill-era random data are the initial fill, not a gap
        kinds = [
            "S" if S in b.classes else "R"
            for b in allocation_order(blocks)
            if S in b.classes or not all(b.fill_era[i] for i, c in enumerate(b.classes) if c is R)
        ]
        signals["STEG_INTERLEAVE"] = detect_steg_interleave(kinds)
    return Report(image.geometry, profile.mode, blocks, signals, horizon)
