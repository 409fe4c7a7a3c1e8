import random

import pytest

from flashden.crypto import derive_key
from flashden.errors import NoFreeSlot, UnknownSector
from flashden.forensics import PageClass, Profile, classify_page
from flashden.fs import pages_for
from flashden.ftl import Ftl
from flashden.nand import FlashGeometry, NandChip
from flashden.stegfs import StegConfig, StegFs

from conftest import SMALL

KEY = derive_key("steg")


def make(replicas=4, geometry=SMALL, seed=1):
    ftl = Ftl(NandChip(geometry))
    fs = StegFs(ftl, StegConfig(KEY, ftl.logical_sectors, replica_count=replicas))
    fs.steg_init(random.Random(seed))
    return fs


def test_init_fills_every_sector():
    fs = make()
    assert fs.ftl.host_writes == fs.config.disk_sectors
    image = fs.ftl.chip.dump_image()
    steg = Profile.steg()
    assert {classify_page(image.page(b, p), steg) for b in range(4) for p in range(64)} == {PageClass.RANDOM}


def test_init_deterministic():
    assert make(seed=5).ftl.chip.dump_image() == make(seed=5).ftl.chip.dump_image()


def test_fat_write_structured_and_sequential():
    fs = make()
    first = fs.fat_write(b"x" * 300 * 1024)
    assert first == list(range(pages_for(300 * 1024, 2048)))
    assert len(first) == 152
    page = fs.ftl.chip.read_page(*fs.ftl.lookup(0))
    assert classify_page(page, Profile.steg()) is PageClass.STRUCTURED
    assert fs.fat_write(b"y")[0] == 152


def test_steg_roundtrip():
    fs = make()
    fs.fat_write(b"p" * 10000)
    data = random.Random(2).randbytes(9000)
    replicas = fs.steg_write(7, data)
    assert len(replicas) == 4
    assert fs.steg_read(7) == data


def test_placement_deterministic():
    a, b = make(), make()
    assert a.steg_write(1, b"s" * 5000) == b.steg_write(1, b"s" * 5000)


def test_replicas_scatter():
    fs = make()
    fs.fat_write(b"p" * 2000)
    replicas = fs.steg_write(0, b"one page")
    flat = [s for r in replicas for s in r]
    assert len(set(flat)) == 4
    assert any(s >= fs.config.disk_sectors // 10 for s in flat)
    assert all(s >= fs.fat.next_free for s in flat)


def test_single_surviving_replica_recovers():
    fs = make()
    data = b"secret" * 500
    replicas = fs.steg_write(3, data)
    # the public side overwrites replicas 0-2 by chance
    for r in replicas[:3]:
        fs.ftl.write(r[0], b"\x00" * 2048)
    assert fs.steg_read(3) == data
    fs.ftl.write(replicas[3][0], b"\x00" * 2048)
    with pytest.raises(UnknownSector):
        fs.steg_read(3)


def test_steg_pages_look_random():
    fs = make()
    replicas = fs.steg_write(0, b"abc")
    page = fs.ftl.chip.read_page(*fs.ftl.lookup(replicas[0][0]))
    assert classify_page(page, Profile.steg()) is PageClass.RANDOM


def test_no_free_slot():
    g = FlashGeometry(pages_per_block=64, block_count=10)
    fs = make(geometry=g)
    fs.fat_write(b"p" * 2028 * (fs.config.disk_sectors - 2))
    with pytest.raises(NoFreeSlot):
        fs.steg_write(0, b"x" * 2028 * 8)


def test_unknown_hidden_file():
    with pytest.raises(UnknownSector):
        make().steg_read(42)


def test_config_validation():
    with pytest.raises(ValueError):
        StegConfig(KEY, 100, replica_count=0)
