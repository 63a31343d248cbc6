"""Delimited-text tables and JSON summaries, written atomically."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence

DECIMALS = 6


def format_cell(value: Any, decimals: int = DECIMALS) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        text = f"{value:.{decimals}f}"
        # avoid "-0.000000"
        return text[1:] if text.startswith("-") and float(text) == 0 else text
    return str(value)


def render_table(header: Sequence[str], rows: Iterable[Sequence[Any]], decimals: int = DECIMALS) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} cells, header has {len(header)}")
        writer.writerow([format_cell(c, decimals) for c in row])
    return buf.getvalue()


def parse_table(text: str) -> tuple[list[str], list[list[Any]]]:
    """Inverse of :func:`render_table`; numeric cells come back as float."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty table") from None
    rows = []
    for line in reader:
        if len(line) != len(header):
            raise ValueError(f"row {line} does not match header {header}")
        rows.append([_parse_cell(c) for c in line])
    return header, rows


def _parse_cell(cell: str) -> Any:
    if cell in ("true", "false"):
        return cell == "true"
    try:
        return float(cell)
    except ValueError:
        return cell


def write_atomic(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def read_table(path: str | Path) -> tuple[list[str], list[list[Any]]]:
    return parse_table(Path(path).read_text(encoding="utf-8"))


def inputs_digest(payload: Any) -> str:
    """sha256 of the canonical JSON form of ``payload``."""
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def render_summary(summary: dict) -> str:
    # repr-precision floats; sorted keys keep reruns byte-identical
    return json.dumps(summary, sort_keys=True, indent=2) + "\n"
