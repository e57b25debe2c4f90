"""Single-simulation compaction, the A0 baseline and their reports."""

from .baseline import compact_a0, run_a0
from .compactor import (
    CompactionResult,
    Label,
    LabeledProgram,
    compact,
    compact_library,
    describe_program,
    features_from_report,
    label_instructions,
    reduce_program,
    verify,
)
from .report import CompactionReport, LibraryReport, ProgramFeatures, reduction_pct, render_report

__all__ = [
    "CompactionReport",
    "CompactionResult",
    "Label",
    "LabeledProgram",
    "LibraryReport",
    "ProgramFeatures",
    "compact",
    "compact_a0",
    "compact_library",
    "describe_program",
    "features_from_report",
    "label_instructions",
    "reduce_program",
    "reduction_pct",
    "render_report",
    "run_a0",
    "verify",
]
