"""Compaction reports: arithmetic, JSON round-trip and aligned text tables."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, List, Mapping, Optional, Sequence

from sbstcompact.errors import CompactionError

TABLE_COLUMNS = ("Program", "Size instr", "Size %", "Duration cc", "Duration %", "Diff FC %", "Compaction time")
REGION_COLUMNS = ("Program", "Region instr", "Size %", "Region cc", "Duration %", "Diff FC %", "Compaction time")
FEATURE_COLUMNS = ("Program", "Size instr", "Admissible %", "Duration cc", "FC %")


def reduction_pct(original: int, compacted: int) -> float:
    """``100 * (1 - compacted / original)`` rounded to two decimals; 0 for an empty original."""
    if original <= 0:
        return 0.0
    return round(100.0 * (1.0 - compacted / original), 2)


def format_signed(value: float) -> str:
    """Two decimals with an explicit sign, ``0.00`` for no change."""
    rounded = round(value, 2)
    if rounded == 0:
        return "0.00"
    return f"{rounded:+.2f}"


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _fmt_optional(value: Optional[float], pattern: str = "{:,}") -> str:
    return "-" if value is None else pattern.format(value)


def render_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    """Pipe-separated table with every column padded to its widest cell."""
    widths = [len(title) for title in header]
    for row in rows:
        widths = [max(width, len(cell)) for width, cell in zip(widths, row)]

    def line(cells: Sequence[str]) -> str:
        padded = [cells[0].ljust(widths[0])] + [cell.rjust(width) for cell, width in zip(cells[1:], widths[1:])]
        return " | ".join(padded).rstrip()

    separator = "-+-".join("-" * width for width in widths)
    return "\n".join([line(header), separator, *(line(row) for row in rows)]) + "\n"


@dataclass
class CompactionReport:
    name: str
    algorithm: str
    original_size_instr: int
    size_instr: int
    original_duration_cc: int
    duration_cc: int
    total_faults: int
    detected_original: int
    detected_compacted: int
    fc_original_pct: float
    fc_compacted_pct: float
    fault_sim_invocations: int
    removed_blocks: List[int] = field(default_factory=list)
    region_size_original: Optional[int] = None
    region_size_compacted: Optional[int] = None
    region_duration_original_cc: Optional[int] = None
    region_duration_compacted_cc: Optional[int] = None
    compaction_time_seconds: float = 0.0
    generated_at: Optional[str] = None

    @property
    def size_reduction_pct(self) -> float:
        return reduction_pct(self.original_size_instr, self.size_instr)

    @property
    def footprint_reduction_pct(self) -> float:
        # One instruction per memory word, so the footprint shrinks with the size.
        return self.size_reduction_pct

    @property
    def duration_reduction_pct(self) -> float:
        return reduction_pct(self.original_duration_cc, self.duration_cc)

    @property
    def diff_fc_pct(self) -> float:
        return round(self.fc_compacted_pct - self.fc_original_pct, 2)

    @property
    def region_size_reduction_pct(self) -> Optional[float]:
        if self.region_size_original is None or self.region_size_compacted is None:
            return None
        return reduction_pct(self.region_size_original, self.region_size_compacted)

    @property
    def region_duration_reduction_pct(self) -> Optional[float]:
        if self.region_duration_original_cc is None or self.region_duration_compacted_cc is None:
            return None
        return reduction_pct(self.region_duration_original_cc, self.region_duration_compacted_cc)

    def check_consistency(self) -> None:
        """Recompute derived figures from the raw fields."""
        if self.total_faults > 0:
            for detected, fc in (
                (self.detected_original, self.fc_original_pct),
                (self.detected_compacted, self.fc_compacted_pct),
            ):
                if round(100.0 * detected / self.total_faults, 2) != fc:
                    raise CompactionError(f"FC {fc} does not match {detected}/{self.total_faults}")
        if self.size_instr > self.original_size_instr:
            raise CompactionError("compacted program is larger than the original")
        if abs(self.diff_fc_pct - (self.fc_compacted_pct - self.fc_original_pct)) > 0.005:
            raise CompactionError("diff FC does not match the FC figures")

    def stamp(self) -> "CompactionReport":
        self.generated_at = _utc_now()
        self.compaction_time_seconds = round(self.compaction_time_seconds, 3)
        return self

    def to_dict(self) -> Dict[str, Any]:
        """JSON payload; wall-clock fields live under ``metadata`` only."""
        payload = asdict(self)
        payload.pop("compaction_time_seconds")
        payload.pop("generated_at")
        payload.update(
            {
                "size_reduction_pct": self.size_reduction_pct,
                "footprint_reduction_pct": self.footprint_reduction_pct,
                "duration_reduction_pct": self.duration_reduction_pct,
                "diff_fc_pct": self.diff_fc_pct,
                "diff_fc": format_signed(self.diff_fc_pct),
                "region_size_reduction_pct": self.region_size_reduction_pct,
                "region_duration_reduction_pct": self.region_duration_reduction_pct,
                "metadata": {
                    "generated_at": self.generated_at,
                    "compaction_time_seconds": round(self.compaction_time_seconds, 3),
                },
            }
        )
        return payload

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "CompactionReport":
        metadata = payload.get("metadata") or {}
        known = {name for name in cls.__dataclass_fields__}
        values = {key: value for key, value in payload.items() if key in known}
        values["compaction_time_seconds"] = float(metadata.get("compaction_time_seconds", 0.0) or 0.0)
        values["generated_at"] = metadata.get("generated_at")
        values["removed_blocks"] = list(values.get("removed_blocks") or [])
        return cls(**values)

    def table_row(self) -> List[str]:
        return [
            self.name,
            f"{self.size_instr:,}",
            f"{self.size_reduction_pct:.2f}",
            f"{self.duration_cc:,}",
            f"{self.duration_reduction_pct:.2f}",
            format_signed(self.diff_fc_pct),
            f"{self.compaction_time_seconds:.2f} s",
        ]

    def region_row(self) -> List[str]:
        return [
            self.name,
            _fmt_optional(self.region_size_compacted),
            _fmt_optional(self.region_size_reduction_pct, "{:.2f}"),
            _fmt_optional(self.region_duration_compacted_cc),
            _fmt_optional(self.region_duration_reduction_pct, "{:.2f}"),
            format_signed(self.diff_fc_pct),
            f"{self.compaction_time_seconds:.2f} s",
        ]

    def render_text(self) -> str:
        lines = [
            f"{self.name} ({self.algorithm}): {self.original_size_instr:,} -> {self.size_instr:,} instr, "
            f"{self.original_duration_cc:,} -> {self.duration_cc:,} cc",
            f"FC {self.fc_original_pct:.2f}% -> {self.fc_compacted_pct:.2f}% over {self.total_faults:,} faults; "
            f"fault simulations: {self.fault_sim_invocations}",
            "",
        ]
        return "\n".join(lines) + render_table(TABLE_COLUMNS, [self.table_row()])


@dataclass
class ProgramFeatures:
    """Size, admissible share, duration and coverage of one test program."""

    name: str
    size_instr: int
    admissible_pct: float
    duration_cc: int
    fc_pct: float
    total_faults: int
    detected: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "ProgramFeatures":
        known = {name for name in cls.__dataclass_fields__}
        return cls(**{key: value for key, value in payload.items() if key in known})

    def table_row(self) -> List[str]:
        return [
            self.name,
            f"{self.size_instr:,}",
            f"{self.admissible_pct:.2f}",
            f"{self.duration_cc:,}",
            f"{self.fc_pct:.2f}",
        ]


def render_features(features: Sequence[ProgramFeatures]) -> str:
    return render_table(FEATURE_COLUMNS, [item.table_row() for item in features])


@dataclass
class LibraryReport:
    """A self-test library compacted program by program over one fault universe."""

    name: str
    programs: List[CompactionReport]
    total_faults: int
    detected_original: int
    detected_compacted: int
    generated_at: Optional[str] = None

    @property
    def fc_original_pct(self) -> float:
        return round(100.0 * self.detected_original / self.total_faults, 2) if self.total_faults else 0.0

    @property
    def fc_compacted_pct(self) -> float:
        return round(100.0 * self.detected_compacted / self.total_faults, 2) if self.total_faults else 0.0

    @property
    def diff_fc_pct(self) -> float:
        return round(self.fc_compacted_pct - self.fc_original_pct, 2)

    def _sum(self, attribute: str) -> Optional[int]:
        values = [getattr(report, attribute) for report in self.programs]
        if any(value is None for value in values):
            return None
        return int(sum(values))

    @property
    def totals(self) -> CompactionReport:
        """Library-wide row; coverage is the union over programs."""
        return CompactionReport(
            name=self.name,
            algorithm=",".join(sorted({report.algorithm for report in self.programs})) or "proposed",
            original_size_instr=self._sum("original_size_instr") or 0,
            size_instr=self._sum("size_instr") or 0,
            original_duration_cc=self._sum("original_duration_cc") or 0,
            duration_cc=self._sum("duration_cc") or 0,
            total_faults=self.total_faults,
            detected_original=self.detected_original,
            detected_compacted=self.detected_compacted,
            fc_original_pct=self.fc_original_pct,
            fc_compacted_pct=self.fc_compacted_pct,
            fault_sim_invocations=self._sum("fault_sim_invocations") or 0,
            region_size_original=self._sum("region_size_original"),
            region_size_compacted=self._sum("region_size_compacted"),
            region_duration_original_cc=self._sum("region_duration_original_cc"),
            region_duration_compacted_cc=self._sum("region_duration_compacted_cc"),
            compaction_time_seconds=sum(report.compaction_time_seconds for report in self.programs),
        )

    def stamp(self) -> "LibraryReport":
        self.generated_at = _utc_now()
        for report in self.programs:
            report.stamp()
        return self

    def to_dict(self) -> Dict[str, Any]:
        totals = self.totals
        return {
            "name": self.name,
            "kind": "library",
            "total_faults": self.total_faults,
            "detected_original": self.detected_original,
            "detected_compacted": self.detected_compacted,
            "fc_original_pct": self.fc_original_pct,
            "fc_compacted_pct": self.fc_compacted_pct,
            "diff_fc_pct": self.diff_fc_pct,
            "diff_fc": format_signed(self.diff_fc_pct),
            "size_reduction_pct": totals.size_reduction_pct,
            "duration_reduction_pct": totals.duration_reduction_pct,
            "programs": [report.to_dict() for report in self.programs],
            "metadata": {
                "generated_at": self.generated_at,
                "compaction_time_seconds": round(totals.compaction_time_seconds, 3),
            },
        }

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "LibraryReport":
        metadata = payload.get("metadata") or {}
        return cls(
            name=str(payload["name"]),
            programs=[CompactionReport.from_dict(item) for item in payload.get("programs", [])],
            total_faults=int(payload["total_faults"]),
            detected_original=int(payload["detected_original"]),
            detected_compacted=int(payload["detected_compacted"]),
            generated_at=metadata.get("generated_at"),
        )

    def render_text(self) -> str:
        totals = self.totals
        whole = render_table(TABLE_COLUMNS, [report.table_row() for report in self.programs] + [totals.table_row()])
        region = render_table(
            REGION_COLUMNS, [report.region_row() for report in self.programs] + [totals.region_row()]
        )
        header = (
            f"{self.name}: {len(self.programs)} program(s), FC {self.fc_original_pct:.2f}% -> "
            f"{self.fc_compacted_pct:.2f}% over {self.total_faults:,} faults\n"
        )
        return f"{header}\nAdmissible region\n{region}\nComplete programs\n{whole}"


def render_report(payload: Mapping[str, Any]) -> str:
    """Text rendering of a stored single-program or library report."""
    if payload.get("kind") == "library":
        return LibraryReport.from_dict(payload).render_text()
    return CompactionReport.from_dict(payload).render_text()


__all__ = [
    "CompactionReport",
    "FEATURE_COLUMNS",
    "LibraryReport",
    "ProgramFeatures",
    "TABLE_COLUMNS",
    "format_signed",
    "reduction_pct",
    "render_features",
    "render_report",
    "render_table",
]
