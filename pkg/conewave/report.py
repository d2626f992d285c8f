"""
CSV and summary output for result tables.

Layout of a report directory:
- <table name>.csv   one per table, header row then rows sorted by the sweep key
- summary.txt        one line per verdict
- summary.yaml       the same verdicts plus the fitted slopes, machine-readable

Floats are written with a fixed format so identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import logging
import math
from pathlib import Path
from typing import Any, Sequence

import yaml

from conewave.errors import IoError
from conewave.models import ResultTable

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.10e"
FAILING = ("FAIL", "UNCONVERGED")


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return FLOAT_FORMAT % value
    return str(value)


def _plain(value: Any) -> Any:
    """Fixed-format floats for the YAML summary as well."""
    if isinstance(value, float):
        return format_value(value)
    return value


def write_table(table: ResultTable, directory: Path) -> Path:
    path = directory / f"{table.name}.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.sorted_rows():
            writer.writerow([format_value(v) for v in row])
    return path


def summary_lines(tables: Sequence[ResultTable]) -> list[str]:
    lines = []
    for table in tables:
        for v in table.verdicts:
            lines.append(
                f"{v.status:<12} {table.name}/{v.tag}  predicted={format_value(v.predicted)}  "
                f"fitted={format_value(v.fitted)}  tail={format_value(v.tail)}  {v.detail}".rstrip()
            )
        if table.truncation_tail is not None:
            lines.append(f"{'TAIL':<12} {table.name}  truncation={format_value(table.truncation_tail)}")
    counts = {status: sum(v.status == status for t in tables for v in t.verdicts)
              for status in ("PASS", "FAIL", "UNCONVERGED", "INFO")}
    lines.append("totals: " + ", ".join(f"{k}={counts[k]}" for k in sorted(counts)))
    return lines


def summary_document(tables: Sequence[ResultTable]) -> dict:
    return {
        "tables": [
            {
                "name": table.name,
                "rows": len(table.rows),
                "truncation_tail": _plain(table.truncation_tail),
                "fitted": {key: {k: _plain(v) for k, v in fit.model_dump().items()}
                           for key, fit in sorted(table.fitted.items())},
                "verdicts": [{k: _plain(v) for k, v in verdict.model_dump().items()} for verdict in table.verdicts],
            }
            for table in tables
        ],
        "exit_code": exit_code_for(tables),
    }


def emit_report(tables: Sequence[ResultTable], path: str) -> list[Path]:
    """Write every table and the two summaries under `path`; returns the files written."""
    directory = Path(path)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        written = [write_table(table, directory) for table in tables]
        text = directory / "summary.txt"
        text.write_text("\n".join(summary_lines(tables)) + "\n", encoding="utf-8")
        machine = directory / "summary.yaml"
        machine.write_text(yaml.safe_dump(summary_document(tables), sort_keys=True), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write report to {path}: {exc}") from exc
    written += [text, machine]
    logger.info("report written to %s (%d files)", directory, len(written))
    return written


def exit_code_for(tables: Sequence[ResultTable]) -> int:
    statuses = [v.status for t in tables for v in t.verdicts]
    return 1 if any(s in FAILING for s in statuses) else 0
