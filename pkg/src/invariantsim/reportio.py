"""CSV emission shared by the diagnostic reports.

Numbers are written in fixed 17-significant-digit scientific notation so a
CSV body round-trips bit-exactly through float parsing; two runs of the same
deterministic computation produce byte-identical bodies. The leading comment
line carries the tool version and is excluded from such comparisons.
"""

from __future__ import annotations

import os
from collections.abc import Iterable, Sequence

TOOL_VERSION = "invariantsim 0.1.0"


def format_value(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return f"{float(x):.16e}"


def write_csv(path: str, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {TOOL_VERSION}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(format_value(x) for x in row) + "\n")


def csv_body(path: str) -> str:
    """File content minus comment lines; the part that must be deterministic."""
    with open(path, "r", encoding="utf-8") as fh:
        return "".join(line for line in fh if not line.startswith("#"))
