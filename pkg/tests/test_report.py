from __future__ import annotations

import json
import unittest

import tests._path  # noqa: F401

from sbstcompact.compaction.report import (
    CompactionReport,
    LibraryReport,
    ProgramFeatures,
    format_signed,
    reduction_pct,
    render_features,
    render_report,
    render_table,
)
from sbstcompact.errors import CompactionError


def _report(**overrides) -> CompactionReport:
    values = dict(
        name="stl1",
        algorithm="proposed",
        original_size_instr=206_306,
        size_instr=12_581,
        original_duration_cc=439_954,
        duration_cc=21_660,
        total_faults=10_000,
        detected_original=9_007,
        detected_compacted=9_000,
        fc_original_pct=90.07,
        fc_compacted_pct=90.0,
        fault_sim_invocations=1,
        removed_blocks=[3, 4],
        region_size_original=5_780,
        region_size_compacted=3_864,
        region_duration_original_cc=6_000,
        region_duration_compacted_cc=3_000,
        compaction_time_seconds=12.5,
    )
    values.update(overrides)
    return CompactionReport(**values)


class ArithmeticTests(unittest.TestCase):
    def test_published_reductions(self) -> None:
        self.assertAlmostEqual(reduction_pct(206_306, 12_581), 93.90, delta=0.01)
        self.assertAlmostEqual(reduction_pct(439_954, 21_660), 95.08, delta=0.01)
        self.assertAlmostEqual(reduction_pct(5_780, 3_864), 33.15, delta=0.01)
        self.assertEqual(reduction_pct(0, 0), 0.0)
        self.assertEqual(reduction_pct(10, 10), 0.0)

    def test_signed_formatting(self) -> None:
        self.assertEqual(format_signed(-0.07), "-0.07")
        self.assertEqual(format_signed(0.0), "0.00")
        self.assertEqual(format_signed(-0.001), "0.00")
        self.assertEqual(format_signed(1.5), "+1.50")


class CompactionReportTests(unittest.TestCase):
    def test_derived_fields(self) -> None:
        report = _report()
        self.assertEqual(report.size_reduction_pct, 93.9)
        self.assertEqual(report.duration_reduction_pct, 95.08)
        self.assertEqual(report.region_size_reduction_pct, 33.15)
        self.assertEqual(report.region_duration_reduction_pct, 50.0)
        self.assertEqual(report.diff_fc_pct, -0.07)
        report.check_consistency()

    def test_inconsistent_coverage_is_rejected(self) -> None:
        with self.assertRaises(CompactionError):
            _report(fc_original_pct=91.0).check_consistency()
        with self.assertRaises(CompactionError):
            _report(size_instr=300_000).check_consistency()

    def test_wall_clock_lives_in_metadata(self) -> None:
        report = _report().stamp()
        payload = report.to_dict()
        self.assertNotIn("compaction_time_seconds", payload)
        self.assertNotIn("generated_at", payload)
        self.assertEqual(payload["metadata"]["compaction_time_seconds"], 12.5)
        self.assertEqual(payload["diff_fc"], "-0.07")
        restored = CompactionReport.from_dict(json.loads(json.dumps(payload)))
        self.assertEqual(restored, report)

    def test_text_table(self) -> None:
        text = _report().render_text()
        self.assertIn("fault simulations: 1", text)
        header, separator, row = text.splitlines()[-3:]
        self.assertTrue(header.startswith("Program"))
        self.assertEqual(set(separator), {"-", "+"})
        self.assertIn("93.90", row)
        self.assertIn("-0.07", row)
        self.assertIn("12,581", row)
        self.assertEqual(render_report(_report().to_dict()), text)


class LibraryReportTests(unittest.TestCase):
    def test_totals_and_round_trip(self) -> None:
        library = LibraryReport(
            name="stl",
            programs=[_report(name="a"), _report(name="b", fault_sim_invocations=1)],
            total_faults=10_000,
            detected_original=9_500,
            detected_compacted=9_500,
        )
        totals = library.totals
        self.assertEqual(totals.original_size_instr, 412_612)
        self.assertEqual(totals.fault_sim_invocations, 2)
        self.assertEqual(library.diff_fc_pct, 0.0)
        payload = library.to_dict()
        self.assertEqual(payload["kind"], "library")
        self.assertEqual(payload["diff_fc"], "0.00")
        text = render_report(json.loads(json.dumps(payload)))
        self.assertEqual(text, library.render_text())
        self.assertIn("Complete programs", text)


class TableTests(unittest.TestCase):
    def test_columns_are_aligned(self) -> None:
        text = render_table(("Name", "Value"), [["x", "1"], ["longer", "12,345"]])
        lines = text.splitlines()
        self.assertEqual(len({line.index("|") for line in lines if "|" in line}), 1)

    def test_features_table(self) -> None:
        features = ProgramFeatures("te1", 1_200, 97.5, 1_300, 88.12, 500, 441)
        self.assertIn("97.50", render_features([features]))
        self.assertEqual(ProgramFeatures.from_dict(features.to_dict()), features)


if __name__ == "__main__":
    unittest.main()
