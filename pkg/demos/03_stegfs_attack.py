"""Steganographic file system on flash: allocation order gives the hidden files away."""
from flashden import ScenarioSpec, run_scenario
from flashden.forensics import BlockSignature, allocation_order, rle

image, report = run_scenario(ScenarioSpec("steg"))
print("verdict:", report.verdict, report.global_signals)

# blocks in the order the FTL opened them, skipping the initial fill
order = [b for b in allocation_order(report.blocks) if not all(b.fill_era)]
for block in order:
    print(f"  block {block.block_index:3d} min_seq={block.min_seq:6d} {rle(block.classes)}")

for block in report.blocks_with(BlockSignature.STEG_SHARED_BLOCK):
    print("shared block", block.block_index, rle(block.classes))

_, control = run_scenario(ScenarioSpec("control_steg", block_count=48))
print("\ncontrol (FAT only, GC and wear leveling active):", control.verdict, control.scenario["ftl"])
