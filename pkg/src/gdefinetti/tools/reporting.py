"""
Report rendering for the command line.

Reports are plain dictionaries. JSON output uses sorted keys and Python's
shortest round-trip float repr, so identical runs produce identical bytes;
CSV flattens nested keys with dots; text goes through a Jinja2 template and
prints the same numbers.
"""

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np
from jinja2 import Environment, FileSystemLoader, StrictUndefined, TemplateError

from ..core.exceptions import ReportRenderError
from ..core.mathkit import LogReal

FORMATS = ("json", "csv", "text")
TEMPLATE_DIR = Path(__file__).parent / "templates"


def to_plain(value: Any) -> Any:
    """Convert numpy scalars, arrays, LogReal values and tuples into JSON-ready values."""
    if isinstance(value, LogReal):
        return value.to_dict()
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_plain(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def flatten(report: Dict[str, Any], prefix: str = "") -> Iterator[Tuple[str, Any]]:
    """(dotted key, scalar) pairs in sorted key order; list items are indexed."""
    for key in sorted(report):
        value = report[key]
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            yield from flatten(value, f"{name}.")
        elif isinstance(value, list):
            for position, item in enumerate(value):
                if isinstance(item, dict):
                    yield from flatten(item, f"{name}.{position}.")
                else:
                    yield f"{name}.{position}", item
        else:
            yield name, value


def render_json(report: Dict[str, Any]) -> str:
    return json.dumps(to_plain(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def render_csv(report: Dict[str, Any]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["key", "value"])
    for key, value in flatten(to_plain(report)):
        writer.writerow([key, "" if value is None else json.dumps(value)])
    return buffer.getvalue()


class ReportRenderer:
    """Renders report dictionaries as json, csv or text."""

    def __init__(self, template_dir: Optional[Path] = None, logger: Optional[Any] = None) -> None:
        self._env = Environment(
            loader=FileSystemLoader(str(template_dir or TEMPLATE_DIR)),
            trim_blocks=True,
            lstrip_blocks=True,
            undefined=StrictUndefined,
            keep_trailing_newline=True,
        )
        self._env.filters["num"] = _format_value
        self._logger = logger

    def render_text(self, report: Dict[str, Any]) -> str:
        plain = to_plain(report)
        try:
            template = self._env.get_template("report.txt.j2")
            return template.render(report=plain, rows=list(flatten(plain)))
        except TemplateError as e:
            raise ReportRenderError("text", str(e)) from e

    def render(self, report: Dict[str, Any], report_format: str = "json") -> str:
        """
        Render a report.

        Args:
            report: Report dictionary
            report_format: One of "json", "csv", "text"

        Raises:
            ReportRenderError: for an unknown format or a template failure
        """
        if report_format == "json":
            try:
                return render_json(report)
            except ValueError as e:
                raise ReportRenderError("json", str(e)) from e
        if report_format == "csv":
            return render_csv(report)
        if report_format == "text":
            return self.render_text(report)
        raise ReportRenderError(report_format, f"unknown format, expected one of {FORMATS}")


def _format_value(value: Any) -> str:
    # same repr as the JSON output
    if value is None:
        return "n/a"
    return json.dumps(value)


def summarize_checks(checks: List[Dict[str, Any]]) -> bool:
    """A suite passes when no check has failed; checks with passed=None are skipped."""
    return all(check["passed"] is not False for check in checks)
