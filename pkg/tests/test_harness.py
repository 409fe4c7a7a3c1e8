import hashlib
import json

import pytest

from flashden.forensics import NO_EVIDENCE, PDE_DETECTED, BlockSignature, analyze
from flashden.ftl import rebuild_mapping
from flashden.harness import ScenarioSpec, analyze_file, run_scenario, simulate, write_simulation

# compact geometry keeps the end-to-end runs fast; the acceptance suite uses defaults
FAST = dict(block_count=64)


def digest(image):
    return hashlib.sha256(image.to_bytes()).hexdigest()


def test_unknown_scenario():
    with pytest.raises(ValueError):
        ScenarioSpec("test9")


def test_same_seed_same_dump_and_report():
    spec = ScenarioSpec("test1", seed=1, **FAST)
    img_a, rep_a = run_scenario(spec)
    img_b, rep_b = run_scenario(spec)
    assert digest(img_a) == digest(img_b)
    assert rep_a.to_json() == rep_b.to_json()


def test_different_seed_different_dump():
    a, _ = simulate(ScenarioSpec("test1", seed=1, **FAST))
    b, _ = simulate(ScenarioSpec("test1", seed=2, **FAST))
    assert digest(a) != digest(b)


@pytest.mark.parametrize(
    "name,signature",
    [
        ("test1", BlockSignature.SPECIAL1),
        ("test2", BlockSignature.SPECIAL2),
        ("test3", BlockSignature.SPECIAL3),
        ("steg", BlockSignature.STEG_SHARED_BLOCK),
    ],
)
def test_attack_scenarios_detected(name, signature):
    _, report = run_scenario(ScenarioSpec(name, **FAST))
    assert report.verdict == PDE_DETECTED
    assert report.blocks_with(signature)


def test_test3_invalid_set_is_not_a_prefix():
    _, report = run_scenario(ScenarioSpec("test3", **FAST))
    for block in report.blocks_with(BlockSignature.SPECIAL3):
        assert block.invalid_pages != list(range(len(block.invalid_pages)))


def test_steg_interleave_signal():
    _, report = run_scenario(ScenarioSpec("steg", **FAST))
    assert report.global_signals["STEG_INTERLEAVE"] is True


@pytest.mark.parametrize("name", ["control_public", "control_steg"])
def test_controls_clean_and_exercise_gc_and_wl(name):
    _, report = run_scenario(ScenarioSpec(name, seed=3, block_count=48))
    assert report.verdict == NO_EVIDENCE
    ftl = report.scenario["ftl"]
    assert ftl["gc_count"] >= 1 and ftl["wl_count"] >= 1


@pytest.mark.parametrize("name", ["test1", "control_public", "steg"])
def test_rebuild_matches_after_scenario(name):
    from flashden import harness
    from flashden.ftl import Ftl
    from flashden.nand import NandChip

    spec = ScenarioSpec(name, **FAST)
    captured = {}
    original = Ftl.__init__

    def spy(self, *a, **kw):
        original(self, *a, **kw)
        captured["ftl"] = self

    Ftl.__init__ = spy
    try:
        image, _ = harness.simulate(spec)
    finally:
        Ftl.__init__ = original
    assert rebuild_mapping(image) == captured["ftl"].mapping()


def test_simulate_and_analyze_compose(tmp_path):
    spec = ScenarioSpec("test2", **FAST)
    _, direct = run_scenario(spec)
    write_simulation(spec, tmp_path / "t.img")
    composed = analyze_file(tmp_path / "t.img", spec.profile())
    assert composed.to_json() == direct.to_json()
    manifest = json.loads((tmp_path / "t.img.scenario.json").read_text())
    assert manifest["spec"]["seed"] == spec.seed


def test_manifest_records_seed_and_workload():
    _, manifest = simulate(ScenarioSpec("test3", seed=11, **FAST))
    assert manifest["spec"]["seed"] == 11
    assert manifest["spec"]["modifications"] == 5
    assert manifest["ftl"]["host_writes"] >= manifest["spec"]["block_count"]


def test_analyze_without_sidecar_has_no_scenario(tmp_path):
    spec = ScenarioSpec("test2", **FAST)
    image, _ = simulate(spec)
    image.save(tmp_path / "bare.img")
    report = analyze_file(tmp_path / "bare.img", spec.profile())
    assert report.scenario is None
    assert report.to_json() == analyze(image, spec.profile()).to_json()
