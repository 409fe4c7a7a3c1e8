import random

import pytest

from flashden.ftl import Ftl
from flashden.nand import FlashGeometry, NandChip

# small enough that hypothesis can push the FTL through GC in a few hundred ops
TINY = FlashGeometry(page_data_bytes=32, page_oob_bytes=32, pages_per_block=8, block_count=12)
SMALL = FlashGeometry(pages_per_block=64, block_count=32)


@pytest.fixture
def tiny_chip():
    return NandChip(TINY)


@pytest.fixture
def tiny_ftl():
    return Ftl(NandChip(TINY))


@pytest.fixture
def small_ftl():
    return Ftl(NandChip(SMALL))


@pytest.fixture
def rng():
    return random.Random(1234)


def sector(geometry, fill: int) -> bytes:
    return bytes([fill % 256]) * geometry.page_data_bytes


# ------------------------------------------------------- acceptance summary
_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion for the run summary."""

    def record(number: int, ok: bool, detail: str):
        _CRITERIA[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])
