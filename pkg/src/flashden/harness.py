"""End-to-end attack scenarios: simulate a device owner, dump the chip, analyze.

Each scenario is driven by one seeded ``random.Random`` so that a given
``ScenarioSpec`` always produces a byte-identical dump and report.
"""
from __future__ import annotations

import dataclasses
import json
import random
from dataclasses import dataclass
from pathlib import Path

from .crypto import derive_key
from .forensics import Profile, Report, analyze
from .fs import SeqAllocator, append_file, modify_in_place, payload_capacity, rewrite_file
from .ftl import Ftl
from .hidden_volume import VolumeView, create_volume
from .nand import FlashGeometry, FlashImage, NandChip
from .stegfs import StegConfig, StegFs

KB = 1024
CHURN_LIMIT = 200  # in multiples of the over-provisioned page count

HIDDEN_SCENARIOS = ("test1", "test2", "test3", "control_public")
STEG_SCENARIOS = ("steg", "control_steg")
SCENARIOS = HIDDEN_SCENARIOS + STEG_SCENARIOS


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    seed: int = 1
    block_count: int = 512
    pages_per_block: int = 64
    decoy_pass: str = "decoy passphrase"
    true_pass: str = "true passphrase"
    steg_pass: str = "steg passphrase"
    # test1: alternating public/hidden appends of small_kb each, `rounds` times
    rounds: int = 24
    small_kb: int = 2
    # test2: one public file bigger than a block, then a small hidden one
    public_kb: int = 150
    # test3: one hidden file bigger than two blocks, then in-place edits
    hidden_kb: int = 256
    modifications: int = 5
    # steg: public file, hidden files, then more public data
    steg_public_kb: int = 300
    steg_files: int = 3
    steg_file_kb: int = 24
    steg_tail_kb: int = 20
    replicas: int = 4
    # controls: None means "drawn from the seed"
    control_files: int | None = None
    churn_factor: int | None = None

    def __post_init__(self):
        if self.name not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.name!r}; choose from {', '.join(SCENARIOS)}")

    @property
    def geometry(self) -> FlashGeometry:
        return FlashGeometry(pages_per_block=self.pages_per_block, block_count=self.block_count)

    @property
    def profile_mode(self) -> str:
        return "hidden" if self.name in HIDDEN_SCENARIOS else "steg"

    def profile(self) -> Profile:
        if self.profile_mode == "hidden":
            return Profile.hidden(self.decoy_pass)
        return Profile.steg()

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _control_churn(spec: ScenarioSpec, rng: random.Random, volume, allocator: SeqAllocator, ftl: Ftl):
    """PDE-free usage: append files, then keep re-saving them front to back.

    Rewrites push the FTL through garbage collection and wear leveling while the
    file system never writes at an arbitrary offset.
    """
    g = ftl.geometry
    n_files = spec.control_files or rng.randint(2, 8)
    budget = max(1, allocator.remaining // 3)
    files = []
    for file_id in range(n_files):
        size = rng.randint(1, max(1, min(budget, 4 * g.pages_per_block) * payload_capacity(g.page_data_bytes)))
        if allocator.remaining < size // payload_capacity(g.page_data_bytes) + 1:
            break
        sectors = append_file(allocator, volume, file_id, rng.randbytes(size))
        files.append((file_id, sectors, size))
        budget = max(1, budget - len(sectors))
    spare_pages = (g.block_count - g.exported_blocks) * g.pages_per_block
    factor = spec.churn_factor or rng.randint(6, 12)
    written = 0
    # keep going until the FTL has both collected garbage and leveled wear
    limit = CHURN_LIMIT * spare_pages
    while written < factor * spare_pages or (not (ftl.gc_count and ftl.wl_count) and written < limit):
        file_id, sectors, size = rng.choice(files)
        rewrite_file(volume, sectors, file_id, rng.randbytes(size))
        written += len(sectors)


def _hidden_scenario(spec: ScenarioSpec, rng: random.Random, ftl: Ftl):
    layout = create_volume(ftl, spec.decoy_pass, spec.true_pass, rng=rng)
    public = VolumeView(layout, ftl, hidden=False)
    hidden = VolumeView(layout, ftl, hidden=True)
    pub_alloc = SeqAllocator(0, layout.logical_sectors)
    hid_alloc = SeqAllocator(0, layout.hidden_size_sectors)
    file_id = 0

    def put(alloc, volume, size):
        nonlocal file_id
        file_id += 1
        return append_file(alloc, volume, file_id, rng.randbytes(size))

    if spec.name == "test1":
        for _ in range(spec.rounds):
            put(pub_alloc, public, spec.small_kb * KB)
            put(hid_alloc, hidden, spec.small_kb * KB)
    elif spec.name == "test2":
        put(pub_alloc, public, spec.public_kb * KB)
        put(hid_alloc, hidden, spec.small_kb * KB)
    elif spec.name == "test3":
        sectors = put(hid_alloc, hidden, spec.hidden_kb * KB)
        cap = payload_capacity(ftl.geometry.page_data_bytes)
        for sector in rng.sample(sectors, min(spec.modifications, len(sectors))):
            modify_in_place(hidden, sector, rng.randbytes(cap))
    else:
        _control_churn(spec, rng, public, pub_alloc, ftl)
    return layout


def _steg_scenario(spec: ScenarioSpec, rng: random.Random, ftl: Ftl):
    config = StegConfig(derive_key(spec.steg_pass), ftl.logical_sectors, replica_count=spec.replicas)
    fs = StegFs(ftl, config)
    fs.steg_init(rng)
    if spec.name == "steg":
        fs.fat_write(rng.randbytes(spec.steg_public_kb * KB))
        for file_id in range(spec.steg_files):
            fs.steg_write(file_id, rng.randbytes(spec.steg_file_kb * KB))
        fs.fat_write(rng.randbytes(spec.steg_tail_kb * KB))
    else:
        _control_churn(spec, rng, fs.public, fs.fat, ftl)
    return fs


def simulate(spec: ScenarioSpec) -> tuple[FlashImage, dict]:
    """Run the owner's workload and return the raw dump plus a scenario manifest."""
    rng = random.Random(spec.seed)
    ftl = Ftl(NandChip(spec.geometry))
    if spec.profile_mode == "hidden":
        _hidden_scenario(spec, rng, ftl)
    else:
        _steg_scenario(spec, rng, ftl)
    manifest = {
        "spec": spec.to_dict(),
        "ftl": {
            "host_writes": ftl.host_writes,
            "flash_writes": ftl.flash_writes,
            "gc_count": ftl.gc_count,
            "wl_count": ftl.wl_count,
            "total_erases": ftl.chip.total_erases,
        },
    }
    return ftl.chip.dump_image(), manifest


def run_scenario(spec: ScenarioSpec) -> tuple[FlashImage, Report]:
    image, manifest = simulate(spec)
    report = analyze(image, spec.profile())
    report.scenario = manifest
    return image, report


def manifest_path(image_path: str | Path) -> Path:
    return Path(str(image_path) + ".scenario.json")


def write_simulation(spec: ScenarioSpec, image_path: str | Path) -> tuple[FlashImage, dict]:
    image, manifest = simulate(spec)
    image.save(image_path)
    manifest_path(image_path).write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return image, manifest


def analyze_file(image_path: str | Path, profile: Profile) -> Report:
    """Analyze a saved dump; a sidecar manifest from ``write_simulation`` is echoed."""
    report = analyze(FlashImage.load(image_path), profile)
    sidecar = manifest_path(image_path)
    if sidecar.exists():
        report.scenario = json.loads(sidecar.read_text())
    return report
