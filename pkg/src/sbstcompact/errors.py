"""Exception hierarchy shared by the workbench."""

from __future__ import annotations

from typing import Optional


class SbstError(Exception):
    """Base class for every domain error raised by sbstcompact."""


class AsmError(SbstError):
    """Raised when assembly source cannot be parsed into a Program."""

    def __init__(self, line: Optional[int], message: str) -> None:
        self.line = line
        self.detail = message
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class NetlistError(SbstError):
    """Raised when a netlist is malformed or evaluated with bad inputs."""

    def __init__(self, message: str, *, line: Optional[int] = None) -> None:
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class SimulationError(SbstError):
    """Raised when a program cannot be executed on the given netlist."""


class NonHaltingProgramError(SimulationError):
    """Raised when a fault-free run does not reach HALT within the cycle budget."""

    def __init__(self, program_name: str, max_cycles: int) -> None:
        self.program_name = program_name
        self.max_cycles = int(max_cycles)
        super().__init__(f"program {program_name!r} did not halt within {max_cycles} cycles")


class InconsistentTraceError(SbstError):
    """Raised when a detecting cycle does not map back onto the source program."""

    def __init__(self, cc: int, pc: Optional[int], expected: Optional[str], found: Optional[str]) -> None:
        self.cc = cc
        self.pc = pc
        self.expected = expected
        self.found = found
        super().__init__(
            f"inconsistent trace at cc={cc}: pc={pc} expected {expected!r}, trace has {found!r}"
        )


class CompactionError(SbstError):
    """Raised when a compaction stage detects a violated precondition."""


class GeneratorError(SbstError):
    """Raised for infeasible test-program generator settings."""


class ConfigError(SbstError):
    """Raised when run configuration is invalid."""


__all__ = [
    "SbstError",
    "AsmError",
    "NetlistError",
    "SimulationError",
    "NonHaltingProgramError",
    "InconsistentTraceError",
    "CompactionError",
    "GeneratorError",
    "ConfigError",
]
