"""NAND/FTL simulator with deniable-encryption models and a flash forensic attack."""
from .errors import FlashdenError
from .forensics import NO_EVIDENCE, PDE_DETECTED, BlockSignature, PageClass, Profile, Report, analyze
from .ftl import Ftl, rebuild_mapping
from .harness import SCENARIOS, ScenarioSpec, run_scenario, simulate
from .nand import FlashGeometry, FlashImage, NandChip, OobRecord, PageContent

__version__ = "0.1.0"

__all__ = [
    "BlockSignature",
    "FlashGeometry",
    "FlashImage",
    "FlashdenError",
    "Ftl",
    "NO_EVIDENCE",
    "NandChip",
    "OobRecord",
    "PDE_DETECTED",
    "PageClass",
    "PageContent",
    "Profile",
    "Report",
    "SCENARIOS",
    "ScenarioSpec",
    "analyze",
    "rebuild_mapping",
    "run_scenario",
    "simulate",
]
