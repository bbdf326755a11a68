# /src/utils/resources/output.py

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.utils.config.settings import settings


@dataclass
class Table:
    """Column names paired with units; every numeric header is written as ``name[unit]``."""

    columns: Sequence[Tuple[str, str]]
    rows: List[Sequence[Any]] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)

    @property
    def headers(self) -> List[str]:
        return [f"{name}[{unit}]" for name, unit in self.columns]

    def add_row(self, *values: Any) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"Row has {len(values)} values for {len(self.columns)} columns")
        self.rows.append(values)


def _digits() -> int:
    return int(settings.get_output_config().get("significant_digits", 12))


def format_value(value: Any, digits: Optional[int] = None) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        number = float(value)
        if math.isnan(number):
            return "nan"
        if math.isinf(number):
            return "inf" if number > 0 else "-inf"
        return format(number, f".{_digits() if digits is None else digits}g")
    return str(value)


def to_jsonable(value: Any) -> Any:
    """Plain-Python copy of nested results (numpy scalars and arrays included)."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        number = float(value)
        return number if math.isfinite(number) else format_value(number)
    if isinstance(value, np.bool_):
        return bool(value)
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


def render_csv(table: Table) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.headers)
    digits = _digits()
    for row in table.rows:
        writer.writerow([format_value(v, digits) for v in row])
    return buffer.getvalue()


def render_json(table: Table) -> str:
    payload = {
        "columns": table.headers,
        "rows": [[to_jsonable(v) for v in row] for row in table.rows],
        "summary": to_jsonable(table.summary),
    }
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


def render(table: Table, fmt: str) -> str:
    if fmt == "csv":
        return render_csv(table)
    if fmt == "json":
        return render_json(table)
    raise ValueError(f"Unknown output format: {fmt}")
