"""Result envelopes and their JSON, CSV and plain-table renderings."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .bounds import SampleCount

FORMATS = ("json", "csv", "table")


def plain(value):
    """Convert numpy scalars, arrays and SampleCounts to JSON-ready Python values."""
    if isinstance(value, SampleCount):
        return value.to_json()
    if isinstance(value, np.ndarray):
        return [plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    return value


def _cell(value) -> str:
    # repr keeps 17 significant digits, so CSV parses back to the same float
    if isinstance(value, SampleCount):
        value = value.to_json()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _display(value) -> str:
    if isinstance(value, SampleCount):
        return str(value)
    if isinstance(value, float):
        return f"{value:.6e}" if value != 0 and (abs(value) >= 1e7 or abs(value) < 1e-4) else f"{value:.10g}"
    return str(value)


@dataclass
class ResultEnvelope:
    command: str
    payload: dict
    header: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    kind: str = "record"  # record | table | series
    seed: int | None = None
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    def __post_init__(self):
        if not self.header:
            # default tabular view: the scalar entries of the payload
            self.header = ["key", "value"]
            self.rows = [[k, v] for k, v in self.payload.items() if not isinstance(v, (dict, list, tuple, np.ndarray))]

    def to_json(self) -> str:
        doc = {
            "command": self.command,
            "format": self.kind,
            "payload": plain(self.payload),
            "provenance": {"seed": self.seed, "version": __version__, "timestamp": self.timestamp},
        }
        return json.dumps(doc, allow_nan=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header)
        for row in self.rows:
            writer.writerow([_cell(v) for v in row])
        return buf.getvalue()

    def to_table(self) -> str:
        cells = [list(map(str, self.header))] + [[_display(v) for v in row] for row in self.rows]
        widths = [max(len(r[i]) for r in cells) for i in range(len(self.header))]
        lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return self.to_json() + "\n"
        if fmt == "csv":
            return self.to_csv()
        if fmt == "table":
            return self.to_table()
        raise ValueError(f"unknown format {fmt!r}")


def series_table(curves: "Callable | dict[str, Callable]", domain: tuple[float, float], resolution: int):
    """Evaluate one or several curves on ``resolution`` evenly spaced points of ``domain``."""
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    lo, hi = map(float, domain)
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValueError(f"bad domain {domain}")
    if callable(curves):
        curves = {"f": curves}
    x = np.linspace(lo, hi, resolution)
    cols = {name: np.broadcast_to(np.asarray(fn(x), dtype=float), x.shape) for name, fn in curves.items()}
    header = ["x"] + list(cols)
    rows = [[float(x[i])] + [float(c[i]) for c in cols.values()] for i in range(resolution)]
    return header, rows


def emit_series(curves, domain, resolution: int, path) -> Path:
    """Write (x, f(x)) columns to ``path`` as UTF-8 CSV with a header row."""
    header, rows = series_table(curves, domain, resolution)
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows([_cell(v) for v in row] for row in rows)
    except OSError as exc:
        raise OSError(f"cannot write series to {path}: {exc.strerror or exc}") from exc
    return path
