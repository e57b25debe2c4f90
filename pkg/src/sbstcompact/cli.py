"""Command-line front end: ``sbstcompact <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

from dotenv import load_dotenv

from sbstcompact.circuit.alu import build_reference_alu
from sbstcompact.circuit.netlist import Netlist, enumerate_faults, fault_summary, load_netlist
from sbstcompact.compaction.baseline import run_a0
from sbstcompact.compaction.compactor import compact, compact_library, describe_program, features_from_report, verify
from sbstcompact.compaction.report import (
    TABLE_COLUMNS,
    CompactionReport,
    ProgramFeatures,
    render_features,
    render_report,
)
from sbstcompact.config import DEFAULT_CONFIG_PATH, GeneratorSettings, RunConfig, load_app_config
from sbstcompact.errors import SbstError, SimulationError
from sbstcompact.generation.tpgen import GenConfig, generate, parse_block_size
from sbstcompact.program.asm import Program, emit_program, parse_program
from sbstcompact.program.cfg import dump_cfg_csv, find_admissible_region, partition_basic_blocks
from sbstcompact.runtime.telemetry import NullTelemetry, TelemetryLog
from sbstcompact.simulation.faultsim import fault_coverage, simulate_all
from sbstcompact.simulation.iss import run

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2
DEFAULT_OUT_DIR = Path("out")


class UsageError(Exception):
    """Raised instead of exiting when argument parsing fails."""


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# ---------------------------------------------------------------------- #
# Parser
# ---------------------------------------------------------------------- #
def _add_common(parser: argparse.ArgumentParser, *, netlist: bool = True) -> None:
    parser.add_argument("--config", type=Path, default=DEFAULT_CONFIG_PATH, help="Path to config YAML.")
    parser.add_argument("--out", type=Path, help="Output directory (default: $SBSTCOMPACT_OUT_DIR or ./out).")
    parser.add_argument("--width", type=int, help="Program word width in bits (default from config).")
    if netlist:
        parser.add_argument("--netlist", type=Path, help="Execute-unit netlist in .nl format.")
        parser.add_argument("--alu-width", type=int, help="Use the built-in reference ALU of this width.")
        parser.add_argument("--max-cycles", type=int, help="Cycle budget per run.")
        parser.add_argument("--mode", dest="fault_mode", choices=("bus", "unit-output"), help="Fault observation point.")
        parser.add_argument("--workers", type=int, help="Worker processes for fault simulation.")
        parser.add_argument("--formats", dest="report_formats", help="Comma-separated report formats (json,csv,txt).")
        parser.add_argument("--telemetry", action="store_true", help="Append JSONL telemetry to the output directory.")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="sbstcompact", description="Compact SBST test programs with one fault simulation.")
    subparsers = parser.add_subparsers(dest="command", required=True)

    assemble = subparsers.add_parser("assemble", help="Parse, validate and re-emit a program.")
    assemble.add_argument("program", type=Path)
    assemble.add_argument("--dump-cfg", action="store_true", help="Also write the basic-block table (cfg.csv).")
    _add_common(assemble, netlist=False)
    assemble.set_defaults(handler=cmd_assemble)

    trace = subparsers.add_parser("trace", help="Run a program and write its cycle trace.")
    trace.add_argument("program", type=Path)
    trace.add_argument("--fault", type=int, help="Inject the fault with this id.")
    _add_common(trace)
    trace.set_defaults(handler=cmd_trace)

    faultsim = subparsers.add_parser("faultsim", help="Fault-simulate a program (FSR as JSON and CSV).")
    faultsim.add_argument("program", type=Path)
    _add_common(faultsim)
    faultsim.set_defaults(handler=cmd_faultsim)

    gen = subparsers.add_parser("generate", help="Generate a seeded test program.")
    gen.add_argument("--mode", dest="gen_mode", choices=("random-bb", "atpg"))
    gen.add_argument("--blocks", type=int)
    gen.add_argument("--size", help="Block size: k or lo:hi.")
    gen.add_argument("--seed", type=int)
    gen.add_argument("--budget", type=int, help="Random patterns sampled in atpg mode.")
    dependence = gen.add_mutually_exclusive_group()
    dependence.add_argument("--independent", dest="independent", action="store_true", default=None)
    dependence.add_argument("--dependent", dest="independent", action="store_false")
    gen.add_argument("--config", type=Path, default=DEFAULT_CONFIG_PATH)
    gen.add_argument("--width", type=int)
    gen.add_argument("--netlist", type=Path)
    gen.add_argument("--alu-width", type=int)
    gen.add_argument("--out", type=Path, required=True, help="Output assembly file.")
    gen.set_defaults(handler=cmd_generate)

    comp = subparsers.add_parser("compact", help="Compact one program, or a library of programs.")
    comp.add_argument("programs", type=Path, nargs="+")
    comp.add_argument("--algo", choices=("proposed", "a0"))
    comp.add_argument("--name", default="library", help="Library name when several programs are given.")
    _add_common(comp)
    comp.set_defaults(handler=cmd_compact)

    ver = subparsers.add_parser("verify", help="Compare an original and a compacted program.")
    ver.add_argument("original", type=Path)
    ver.add_argument("compacted", type=Path)
    _add_common(ver)
    ver.set_defaults(handler=cmd_verify)

    rep = subparsers.add_parser("report", help="Render stored report JSON, or describe programs.")
    rep.add_argument("report", type=Path, nargs="?", help="report.json written by compact/verify.")
    rep.add_argument("--describe", type=Path, nargs="+", help="Programs to describe (writes features.json).")
    _add_common(rep)
    rep.set_defaults(handler=cmd_report)
    return parser


# ---------------------------------------------------------------------- #
# Helpers
# ---------------------------------------------------------------------- #
def _program_paths(args: argparse.Namespace) -> Optional[List[Path]]:
    paths: List[Path] = []
    for key in ("program", "original", "compacted"):
        if getattr(args, key, None) is not None:
            paths.append(getattr(args, key))
    paths.extend(getattr(args, "programs", None) or [])
    paths.extend(getattr(args, "describe", None) or [])
    return paths or None


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    keys = ("max_cycles", "fault_mode", "workers", "report_formats")
    overrides: Dict[str, Any] = {key: getattr(args, key, None) for key in keys}
    overrides["word_width"] = getattr(args, "width", None)
    overrides["out_dir"] = getattr(args, "out", None)
    overrides["netlist"] = getattr(args, "netlist", None)
    overrides["programs"] = _program_paths(args)
    return overrides


def _run_config(args: argparse.Namespace) -> RunConfig:
    return RunConfig.from_sources(load_app_config(args.config), _overrides(args))


def _out_dir(config: RunConfig) -> Path:
    out = config.out_dir or DEFAULT_OUT_DIR
    out.mkdir(parents=True, exist_ok=True)
    return out


def _read_program(path: Path, word_width: int) -> Program:
    return parse_program(path.read_text(encoding="utf-8"), word_width=word_width, name=path.stem)


def _resolve_netlist(args: argparse.Namespace, config: RunConfig) -> Netlist:
    if getattr(args, "netlist", None) is not None:
        return load_netlist(Path(args.netlist).read_text(encoding="utf-8"), name=Path(args.netlist).stem)
    return build_reference_alu(getattr(args, "alu_width", None) or config.word_width)


def _telemetry(args: argparse.Namespace, out: Path) -> TelemetryLog:
    return TelemetryLog(out) if getattr(args, "telemetry", False) else NullTelemetry()


def _write(path: Path, text: str, telemetry: Optional[TelemetryLog] = None) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    if telemetry is not None:
        telemetry.log_event("artifact_written", path=str(path))
    print(f"Wrote {path}")


def _json(payload: Mapping[str, Any]) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _report_csv(reports: Sequence[CompactionReport]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS)
    for report in reports:
        writer.writerow(report.table_row())
    return buffer.getvalue()


def _write_reports(
    out: Path,
    config: RunConfig,
    payload: Mapping[str, Any],
    text: str,
    rows: Sequence[CompactionReport],
    telemetry: TelemetryLog,
) -> None:
    if "json" in config.report_formats:
        _write(out / "report.json", _json(payload), telemetry)
    if "txt" in config.report_formats:
        _write(out / "report.txt", text, telemetry)
    if "csv" in config.report_formats:
        _write(out / "report.csv", _report_csv(rows), telemetry)


def _write_features(out: Path, features: Sequence[ProgramFeatures], telemetry: Optional[TelemetryLog] = None) -> None:
    _write(out / "features.json", _json({"programs": [item.to_dict() for item in features]}), telemetry)


# ---------------------------------------------------------------------- #
# Subcommands
# ---------------------------------------------------------------------- #
def cmd_assemble(args: argparse.Namespace) -> int:
    config = _run_config(args)
    program = _read_program(args.program, config.word_width)
    out = _out_dir(config)
    _write(out / f"{args.program.stem}.s", emit_program(program))
    if args.dump_cfg:
        bbs = partition_basic_blocks(program)
        region = find_admissible_region(program, bbs)
        _write(out / "cfg.csv", dump_cfg_csv(bbs, region))
        print(
            f"{len(bbs)} basic block(s), {len(region)} admissible, "
            f"{region.body_coverage_pct(bbs, program):.2f}% of the body"
        )
    return EXIT_OK


def cmd_trace(args: argparse.Namespace) -> int:
    config = _run_config(args)
    program = _read_program(args.program, config.word_width)
    netlist = _resolve_netlist(args, config)
    fault = None
    if args.fault is not None:
        faults = enumerate_faults(netlist)
        if not 0 <= args.fault < len(faults):
            raise SimulationError(f"fault id {args.fault} outside 0..{len(faults) - 1}")
        fault = faults[args.fault]
    trace = run(program, netlist, fault, config.max_cycles)
    out = _out_dir(config)
    _write(out / f"{args.program.stem}.trace.csv", trace.to_csv())
    print(f"{trace.duration} cycle(s), terminated by {trace.terminated.value}")
    return EXIT_OK


def cmd_faultsim(args: argparse.Namespace) -> int:
    config = _run_config(args)
    program = _read_program(args.program, config.word_width)
    netlist = _resolve_netlist(args, config)
    out = _out_dir(config)
    with _telemetry(args, out) as telemetry:
        with telemetry.stage("fault_simulation", program=program.name):
            fsr = simulate_all(
                program,
                netlist,
                enumerate_faults(netlist),
                config.max_cycles,
                mode=config.fault_mode,
                workers=config.workers,
            )
        telemetry.log_event("fault_simulation", faults=fsr.total_faults, detected=len(fsr.detections), invocations=1)
        _write(out / f"{args.program.stem}.fsr.json", _json(fsr.to_dict()), telemetry)
        _write(out / f"{args.program.stem}.fsr.csv", fsr.to_csv(), telemetry)
    coverage = fault_coverage(fsr) if fsr.total_faults else 0.0
    print(f"{len(fsr.detections)}/{fsr.total_faults} faults detected (FC {coverage:.2f}%)")
    return EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    app_config = load_app_config(args.config)
    settings = GeneratorSettings.from_config(app_config)
    run_config = RunConfig.from_sources(app_config, {"word_width": args.width})
    cfg = GenConfig(
        mode=args.gen_mode or settings.mode,
        n_blocks=args.blocks if args.blocks is not None else settings.blocks,
        block_size=parse_block_size(args.size or settings.block_size),
        seed=args.seed if args.seed is not None else settings.seed,
        word_width=run_config.word_width,
        independent=settings.independent if args.independent is None else args.independent,
        atpg_budget=args.budget if args.budget is not None else settings.atpg_budget,
    )
    netlist = _resolve_netlist(args, run_config)
    program = generate(cfg, netlist, name=args.out.stem)
    _write(args.out, emit_program(program))
    print(f"{len(program.instructions)} instruction(s) in {args.out}")
    return EXIT_OK


def cmd_compact(args: argparse.Namespace) -> int:
    config = _run_config(args)
    app_config = load_app_config(args.config)
    algorithm = args.algo or str((app_config.get("compaction") or {}).get("algo", "proposed"))
    programs = [_read_program(path, config.word_width) for path in config.programs]
    netlist = _resolve_netlist(args, config)
    out = _out_dir(config)

    with _telemetry(args, out) as telemetry:
        if len(programs) > 1:
            if algorithm != "proposed":
                raise SimulationError("library compaction uses the proposed method only")
            results, library = compact_library(programs, netlist, config, name=args.name, telemetry=telemetry)
            library.stamp()
            for result in results:
                _write(out / f"{result.original.name}.compact.s", emit_program(result.compacted), telemetry)
            _write_reports(out, config, library.to_dict(), library.render_text(), library.programs, telemetry)
            features = [features_from_report(result.original, report) for result, report in zip(results, library.programs)]
            _write_features(out, features, telemetry)
            print(library.render_text(), end="")
            return EXIT_OK

        program = programs[0]
        if algorithm == "a0":
            result, report = run_a0(program, netlist, config, telemetry=telemetry)
        else:
            result, report = compact(program, netlist, config, telemetry=telemetry)
        report.stamp()
        _write(out / f"{program.name}.compact.s", emit_program(result.compacted), telemetry)
        _write_reports(out, config, report.to_dict(), report.render_text(), [report], telemetry)
        _write_features(out, [features_from_report(program, report)], telemetry)
    print(report.render_text(), end="")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    config = _run_config(args)
    original = _read_program(args.original, config.word_width)
    compacted = _read_program(args.compacted, config.word_width)
    netlist = _resolve_netlist(args, config)
    out = _out_dir(config)
    report = verify(original, compacted, netlist, config=config).stamp()
    _write_reports(out, config, report.to_dict(), report.render_text(), [report], NullTelemetry())
    print(report.render_text(), end="")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    if args.report is None and not args.describe:
        raise UsageError("report needs a report.json path or --describe PROGRAM...")
    config = _run_config(args)
    if args.report is not None:
        payload = json.loads(args.report.read_text(encoding="utf-8"))
        text = render_report(payload)
        print(text, end="")
        if args.out is not None:
            _write(_out_dir(config) / "report.txt", text)
    if args.describe:
        netlist = _resolve_netlist(args, config)
        faults = enumerate_faults(netlist)
        summary = fault_summary(netlist)
        print(f"{netlist.name}: {summary['total']:,} faults")
        features = [
            describe_program(_read_program(path, config.word_width), netlist, config, faults=faults)
            for path in args.describe
        ]
        print(render_features(features), end="")
        _write_features(_out_dir(config), features)
    return EXIT_OK


# ---------------------------------------------------------------------- #
# Entry points
# ---------------------------------------------------------------------- #
def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand; 0 on success, 1 on usage errors, 2 on domain errors."""
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return int(args.handler(args))
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SbstError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def main(argv: Optional[List[str]] = None) -> None:
    sys.exit(run_cli(argv))


__all__ = ["EXIT_DOMAIN", "EXIT_OK", "EXIT_USAGE", "build_parser", "main", "run_cli"]
