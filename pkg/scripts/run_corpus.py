#!/usr/bin/env python3
"""Generate a seeded corpus of test programs and compact each one."""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import List

ROOT = Path(__file__).resolve().parents[1]
SRC = ROOT / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

from sbstcompact.circuit.alu import build_reference_alu
from sbstcompact.compaction.baseline import run_a0
from sbstcompact.compaction.compactor import compact
from sbstcompact.compaction.report import TABLE_COLUMNS, CompactionReport, render_table
from sbstcompact.config import GeneratorSettings, RunConfig, load_app_config
from sbstcompact.generation.tpgen import GenConfig, generate, parse_block_size
from sbstcompact.program.asm import emit_program
from sbstcompact.runtime.telemetry import TelemetryLog


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Compact a generated corpus of SBST programs.")
    parser.add_argument("--config", type=Path, default=Path("config/default.yaml"), help="Path to config YAML.")
    parser.add_argument("--seeds", type=int, default=5, help="Number of seeds, starting at --first-seed (default: 5).")
    parser.add_argument("--first-seed", type=int, default=0)
    parser.add_argument("--blocks", type=int, help="Blocks per program (default from config).")
    parser.add_argument("--width", type=int, help="Word width; also the reference ALU width.")
    parser.add_argument(
        "--with-a0",
        action="store_true",
        help="Also run the one-instruction-at-a-time baseline (slow: one simulation per instruction).",
    )
    parser.add_argument(
        "--run-dir",
        type=Path,
        help="Directory for programs, reports and telemetry (default: var/runs/<timestamp>).",
    )
    return parser.parse_args()


def default_run_dir() -> Path:
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    return Path("var") / "runs" / stamp


def main() -> None:
    args = parse_args()
    app_config = load_app_config(args.config)
    config = RunConfig.from_sources(app_config, {"word_width": args.width})
    settings = GeneratorSettings.from_config(app_config)
    netlist = build_reference_alu(config.word_width)

    run_dir = (args.run_dir or default_run_dir()).resolve()
    run_dir.mkdir(parents=True, exist_ok=True)
    print(f"Corpus run in {run_dir} ({netlist.name}, {args.seeds} seed(s)).")

    reports: List[CompactionReport] = []
    with TelemetryLog(run_dir) as telemetry:
        for seed in range(args.first_seed, args.first_seed + args.seeds):
            cfg = GenConfig(
                mode="random-bb",
                n_blocks=args.blocks if args.blocks is not None else settings.blocks,
                block_size=parse_block_size(settings.block_size),
                seed=seed,
                word_width=config.word_width,
                independent=settings.independent,
            )
            program = generate(cfg, netlist)
            (run_dir / f"{program.name}.s").write_text(emit_program(program), encoding="utf-8")

            result, report = compact(program, netlist, config, telemetry=telemetry)
            (run_dir / f"{program.name}.compact.s").write_text(emit_program(result.compacted), encoding="utf-8")
            reports.append(report.stamp())
            if args.with_a0:
                _, baseline = run_a0(program, netlist, config, telemetry=telemetry)
                reports.append(baseline.stamp())
            print(f"seed {seed}: {report.size_reduction_pct:.2f}% smaller, diff FC {report.to_dict()['diff_fc']}")

    payload = {"reports": [report.to_dict() for report in reports]}
    (run_dir / "corpus.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    rows = [[f"{report.name} [{report.algorithm}]", *report.table_row()[1:]] for report in reports]
    print(render_table(TABLE_COLUMNS, rows), end="")
    print(f"Telemetry: {run_dir / 'telemetry.jsonl'}")


if __name__ == "__main__":
    main()
