import random

import pytest

from flashden.crypto import SectorCipher, derive_key
from flashden.errors import HiddenTooLarge, OutOfRange
from flashden.forensics import PageClass, Profile, classify_page
from flashden.fs import HIDDEN_MAGIC, PUBLIC_MAGIC, FramedPage, verify
from flashden.ftl import Ftl
from flashden.hidden_volume import (
    VolumeLayout,
    create_volume,
    hidden_offset,
    hidden_read,
    hidden_write,
    public_read,
    public_write,
)
from flashden.nand import NandChip

from conftest import SMALL


@pytest.fixture(scope="module")
def setup():
    ftl = Ftl(NandChip(SMALL))
    layout = create_volume(ftl, "decoy", "true", rng=random.Random(3))
    return ftl, layout


def frame(magic, n):
    return FramedPage(magic, 1, n, bytes([n]) * 100).encode(SMALL.page_data_bytes)


def test_layout_invariants(setup):
    ftl, layout = setup
    n = layout.logical_sectors
    assert n == ftl.logical_sectors
    assert layout.hidden_size_sectors == n // 8
    assert layout.hidden_offset_sector >= n // 2
    assert layout.hidden_offset_sector + layout.hidden_size_sectors <= n
    assert layout.decoy_key != layout.true_key


def test_fill_writes_every_sector_once(setup):
    ftl, _ = setup
    assert ftl.host_writes == ftl.logical_sectors
    assert set(ftl.mapping()) == set(range(ftl.logical_sectors))


def test_fresh_volume_has_nothing_decryptable():
    ftl = Ftl(NandChip(SMALL))
    layout = create_volume(ftl, "decoy", "true", rng=random.Random(9))
    image = ftl.chip.dump_image()
    profile = Profile("hidden", layout.decoy_key)
    classes = {classify_page(image.page(b, p), profile) for b in range(8) for p in range(SMALL.pages_per_block)}
    assert classes <= {PageClass.RANDOM, PageClass.ERASED}


def test_offset_deterministic():
    key = derive_key("true")
    assert hidden_offset(key, 1000, 100) == hidden_offset(key, 1000, 100)


def test_offset_bounds_when_room_is_zero():
    assert hidden_offset(derive_key("t"), 1000, 500) == 500


def test_hidden_too_large():
    with pytest.raises(HiddenTooLarge):
        hidden_offset(derive_key("t"), 1000, 501)
    with pytest.raises(HiddenTooLarge):
        create_volume(Ftl(NandChip(SMALL)), "d", "t", hidden_size_sectors=SMALL.logical_sectors)


def test_layout_rejects_equal_keys():
    k = derive_key("same")
    with pytest.raises(ValueError):
        VolumeLayout(100, 10, 60, k, k)


def test_public_roundtrip_and_raw_page(setup):
    ftl, layout = setup
    p = frame(PUBLIC_MAGIC, 1)
    public_write(layout, ftl, 5, p)
    assert public_read(layout, ftl, 5) == p
    raw = ftl.chip.read_page(*ftl.lookup(5)).data
    assert SectorCipher(layout.decoy_key).decrypt(5, raw) == p
    assert not verify(SectorCipher(layout.true_key).decrypt(5, raw))


def test_hidden_roundtrip_and_wrong_key(setup):
    ftl, layout = setup
    h = frame(HIDDEN_MAGIC, 2)
    hidden_write(layout, ftl, 0, h)
    assert hidden_read(layout, ftl, 0) == h
    lba = layout.hidden_offset_sector
    page = ftl.chip.read_page(*ftl.lookup(lba))
    assert classify_page(page, Profile("hidden", layout.decoy_key)) is PageClass.RANDOM
    assert classify_page(page, Profile("hidden", layout.true_key)) is PageClass.DECRYPTABLE


def test_ranges(setup):
    ftl, layout = setup
    with pytest.raises(OutOfRange):
        public_write(layout, ftl, layout.logical_sectors, frame(PUBLIC_MAGIC, 0))
    with pytest.raises(OutOfRange):
        hidden_write(layout, ftl, layout.hidden_size_sectors, frame(HIDDEN_MAGIC, 0))


def test_volume_isolation(setup):
    ftl, layout = setup
    rng = random.Random(5)
    before = ftl.host_writes
    touched = []
    for rel in rng.sample(range(layout.hidden_size_sectors), 20):
        hidden_write(layout, ftl, rel, frame(HIDDEN_MAGIC, rel % 256))
        touched.append(layout.hidden_offset_sector + rel)
    assert ftl.host_writes - before == 20
    assert min(touched) >= layout.logical_sectors // 2
    assert set(touched).isdisjoint(range(layout.hidden_offset_sector))
