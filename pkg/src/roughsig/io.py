"""CSV path files and JSON reports."""

from __future__ import annotations

import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import tensor_algebra as ta
from .errors import InputError
from .pvar_sewing import PathSamples


def read_path_csv(path, *, no_time: bool = False) -> PathSamples:
    """Read a path file: optional header row, column 0 is time unless ``no_time``.

    With ``no_time`` every column is a coordinate and samples sit on a uniform grid of [0, 1].
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    if rows and not _is_numeric_row(rows[0]):
        rows = rows[1:]
    if not rows:
        raise InputError(f"{path}: no data rows")
    width = len(rows[0])
    data = np.empty((len(rows), width))
    for r, row in enumerate(rows, start=1):
        if len(row) != width:
            raise InputError(f"{path}: data row {r} has {len(row)} columns, expected {width}")
        for c, cell in enumerate(row, start=1):
            try:
                data[r - 1, c - 1] = float(cell)
            except ValueError:
                raise InputError(f"{path}: data row {r}, column {c}: {cell.strip()!r} is not a number") from None
    if no_time:
        return PathSamples(np.linspace(0.0, 1.0, data.shape[0]), data)
    if width < 2:
        raise InputError(f"{path}: need a time column and at least one coordinate")
    times = data[:, 0]
    bad = np.flatnonzero(~(np.diff(times) > 0))
    if bad.size:
        raise InputError(f"{path}: time not strictly increasing at data row {bad[0] + 2}")
    return PathSamples(times, data[:, 1:])


def _is_numeric_row(row) -> bool:
    try:
        [float(c) for c in row]
    except ValueError:
        return False
    return True


def write_path_csv(path, x: PathSamples, fmt: str = "%.17g") -> None:
    d = x.values.shape[1]
    header = ",".join(["t"] + [f"x{i}" for i in range(1, d + 1)])
    np.savetxt(path, np.column_stack([x.times, x.values]), delimiter=",", header=header, comments="", fmt=fmt)


def tensor_coefficients(g: ta.TruncatedTensor) -> dict[str, float]:
    return {ta.format_word(w): c for w, c in g.coefficients().items()}


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def dumps(report: dict) -> str:
    """JSON with shortest round-trip float formatting (exact for 64-bit floats)."""
    return json.dumps(_clean(report), indent=1)


def write_report(report: dict, out) -> None:
    text = dumps(report) + "\n"
    if out is None or str(out) == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)
