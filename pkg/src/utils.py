import io
import json
import math
from datetime import date
from enum import Enum
from typing import Any

import numpy as np
import pandas as pd

from src.models.report_schemas import CommandReport, OutputFormat


def round_significant(value: float, precision: int) -> float | str:
    """Round to `precision` significant digits; non-finite values become strings for JSON."""
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    rounded = float(f"{value:.{precision}g}")
    return 0.0 if rounded == 0 else rounded


def to_plain(obj: Any, precision: int) -> Any:
    """Recursively convert a report payload into JSON-ready python values."""
    match obj:
        case bool() | None | str():
            return obj
        case Enum():
            return obj.value
        case date():
            return obj.isoformat()
        case int() | np.integer():
            return int(obj)
        case float() | np.floating():
            return round_significant(float(obj), precision)
        case dict():
            return {str(key): to_plain(value, precision) for key, value in obj.items()}
        case list() | tuple() | np.ndarray():
            return [to_plain(item, precision) for item in obj]
        case _:
            raise TypeError(f"Unsupported report value: {obj.__class__.__name__}")


def render_json(report: CommandReport, precision: int) -> str:
    payload = to_plain(report.model_dump(), precision)
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


def render_csv(report: CommandReport, precision: int) -> str:
    """
    Long-format CSV: one block of rows per table, tagged by a `series` column.

    Scalar results and checks are emitted as the `results` and `checks` tables.
    """
    frames = []
    if report.results:
        values = []
        for value in report.results.values():
            plain = to_plain(value, precision)
            values.append(json.dumps(plain, sort_keys=True) if isinstance(plain, dict | list) else plain)
        frames.append(pd.DataFrame({"series": "results", "key": list(report.results), "value": values}))
    if report.checks:
        checks = pd.DataFrame([to_plain(check.model_dump(), precision) for check in report.checks])
        checks.insert(0, "series", "checks")
        frames.append(checks)
    for table in report.series:
        rows = [to_plain(row, precision) for row in table.rows]
        frame = pd.DataFrame(rows, columns=table.columns)
        frame.insert(0, "series", table.name)
        frames.append(frame)
    if not frames:
        return ""
    buffer = io.StringIO()
    pd.concat(frames, ignore_index=True, sort=False).to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


def render_report(report: CommandReport, output_format: OutputFormat, precision: int) -> str:
    if output_format is OutputFormat.CSV:
        return render_csv(report, precision)
    return render_json(report, precision)
