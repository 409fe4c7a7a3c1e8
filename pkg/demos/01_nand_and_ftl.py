"""Walk through the chip and the FTL: out-of-place writes, invalid pages, GC."""
import random

import numpy as np

from flashden import FlashGeometry, Ftl, NandChip, rebuild_mapping
from flashden.nand import VALID_OFFSET

g = FlashGeometry(pages_per_block=64, block_count=16)
ftl = Ftl(NandChip(g))
print("exported sectors:", ftl.logical_sectors, "of", g.total_pages, "physical pages")

# one sector per page; rewriting a sector never touches the old page
ftl.write(7, b"a" * g.page_data_bytes)
old = ftl.lookup(7)
ftl.write(7, b"b" * g.page_data_bytes)
print("lba 7 moved", old, "->", ftl.lookup(7))
print("old valid flag: 0x%02x" % ftl.chip.read_oob(*old)[VALID_OFFSET])

# hammer a few sectors until garbage collection and wear leveling kick in
rng = random.Random(0)
for lba in range(ftl.logical_sectors):
    ftl.write(lba, rng.randbytes(g.page_data_bytes))
for _ in range(20000):
    ftl.write(rng.randrange(64), rng.randbytes(g.page_data_bytes))
print("gc runs:", ftl.gc_count, " wear-level moves:", ftl.wl_count)
print("write amplification: %.2f" % ftl.write_amplification)
print("erase counts:", np.array(ftl.chip.erase_counts))

# the map lives in the OOB areas, so a raw dump is enough to rebuild it
image = ftl.chip.dump_image()
print("rebuilt map matches live map:", rebuild_mapping(image) == ftl.mapping())
