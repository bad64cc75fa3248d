from __future__ import annotations

import logging

PROGRAM_NAME = "wsn-repair"

LEVEL_MAPPING = {
    50: "error",
    40: "error",
    30: "warning",
    20: "note",
    10: "debug",
}


class DiagnosticFormatter(logging.Formatter):
    """
    Compiler-style diagnostics on stderr: `wsn-repair: <level>: <message>`.
    Continuation lines (tracebacks) are indented under the first one.
    """

    def format(self, record):
        log = super().format(record)
        level = LEVEL_MAPPING[record.levelno]
        first, *rest = log.splitlines() or [""]
        lines = [f"{PROGRAM_NAME}: {level}: {first}"]
        lines.extend(f"    {line}" for line in rest)
        return "\n".join(lines)
