"""``flashden`` command line: simulate a workload, analyze a dump, or both."""
from __future__ import annotations

import argparse
import hashlib
import logging
import os
import sys
from pathlib import Path

from .errors import FlashdenError
from .forensics import NO_EVIDENCE, PDE_DETECTED, Profile
from .harness import SCENARIOS, ScenarioSpec, analyze_file, manifest_path, write_simulation

DEFAULT_DECOY_PASS = ScenarioSpec.__dataclass_fields__["decoy_pass"].default
EXIT_EXPECT_FAILED = 2


def _default_seed() -> int:
    raw = os.environ.get("FLASHDEN_SEED")
    if raw is None:
        return 1
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"FLASHDEN_SEED must be an integer, got {raw!r}")


def _spec(args) -> ScenarioSpec:
    seed = args.seed if args.seed is not None else _default_seed()
    overrides = {"seed": seed}
    if args.blocks is not None:
        overrides["block_count"] = args.blocks
    return ScenarioSpec(args.scenario, **overrides)


def _summary(report) -> str:
    hits = {k: v for k, v in report.counts.items() if v and k != "NORMAL"}
    hits.update({k: v for k, v in report.global_signals.items() if v})
    detail = " ".join(f"{k}={v}" for k, v in sorted(hits.items())) or "-"
    return f"{report.verdict} {detail}"


def _add_scenario_args(p: argparse.ArgumentParser):
    p.add_argument("--scenario", required=True, choices=SCENARIOS)
    p.add_argument("--seed", type=int, default=None, help="RNG seed (falls back to $FLASHDEN_SEED, then 1)")
    p.add_argument("--blocks", type=int, default=None, help="erase-block count of the simulated chip")


def cmd_simulate(args) -> int:
    spec = _spec(args)
    out = Path(args.out or f"{spec.name}-s{spec.seed}.img")
    image, manifest = write_simulation(spec, out)
    digest = hashlib.sha256(image.to_bytes()).hexdigest()
    print(f"{out} sha256={digest} gc={manifest['ftl']['gc_count']} wl={manifest['ftl']['wl_count']}")
    return 0


def cmd_analyze(args) -> int:
    profile = Profile.hidden(args.decoy_pass) if args.profile == "hidden" else Profile.steg()
    report = analyze_file(args.image, profile)
    Path(args.out).write_text(report.to_json())
    print(f"{args.out} {_summary(report)}")
    return 0


def cmd_run(args) -> int:
    spec = _spec(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    image_path = out_dir / f"{spec.name}-s{spec.seed}.img"
    report_path = out_dir / f"{spec.name}-s{spec.seed}.report.json"
    write_simulation(spec, image_path)
    report = analyze_file(image_path, spec.profile())
    report_path.write_text(report.to_json())
    print(f"{spec.name} seed={spec.seed} {_summary(report)}")
    print(f"  image:    {image_path}")
    print(f"  manifest: {manifest_path(image_path)}")
    print(f"  report:   {report_path}")
    if args.expect and report.verdict != args.expect:
        print(f"expected {args.expect}, got {report.verdict}", file=sys.stderr)
        return EXIT_EXPECT_FAILED
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flashden", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario workload and write the raw dump")
    _add_scenario_args(p)
    p.add_argument("--out", default=None, help="dump path (default <scenario>-s<seed>.img)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="run the forensic attack on a dump")
    p.add_argument("--image", required=True)
    p.add_argument("--profile", required=True, choices=("hidden", "steg"))
    p.add_argument("--decoy-pass", default=DEFAULT_DECOY_PASS)
    p.add_argument("--out", required=True, help="report JSON path")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("run", help="simulate then analyze")
    _add_scenario_args(p)
    p.add_argument("--out-dir", default=".", help="where the dump, manifest and report go")
    p.add_argument("--expect", choices=(PDE_DETECTED, NO_EVIDENCE), default=None)
    p.set_defaults(func=cmd_run)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (FlashdenError, ValueError, OSError) as exc:
        print(f"flashden: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
