from .compaction import compact, compact_library, run_a0, verify
from .program import Program, emit_program, parse_program

__all__ = [
    "__version__",
    "Program",
    "compact",
    "compact_library",
    "emit_program",
    "parse_program",
    "run_a0",
    "verify",
]
__version__ = "0.1.0"
