"""Hidden-volume PDE on flash: the three special blocks an adversary can spot."""
from flashden import ScenarioSpec, run_scenario
from flashden.forensics import BlockSignature, rle

for name in ("test1", "test2", "test3", "control_public"):
    image, report = run_scenario(ScenarioSpec(name))
    print(f"\n{name}: {report.verdict}")
    for sig in (BlockSignature.SPECIAL1, BlockSignature.SPECIAL2, BlockSignature.SPECIAL3):
        for block in report.blocks_with(sig):
            print(f"  block {block.block_index:3d} {sig.value}: {rle(block.classes)}  invalid={block.invalid_pages}")

# D = decrypts under the decoy key, R = random-looking, E = erased.
# special 1 and 2 mix public and undecryptable pages in one block; a device
# with no hidden volume only ever puts public data into blocks opened after
# the initial random fill.  special 3 is an all-random block with holes
# punched at arbitrary pages, which a sequential file system never produces.
