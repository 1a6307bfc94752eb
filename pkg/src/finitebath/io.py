"""Bit-stable text output: CSV tables and key-value reports.

Floats are written with ``repr``, the shortest string that parses back to
the same double, so files diff cleanly and round-trip exactly.
"""
from __future__ import annotations

import csv
import os
from typing import Iterable, Sequence

from .errors import IoError

__all__ = ["format_value", "parse_value", "write_csv", "read_csv",
           "write_kv", "read_kv"]


def format_value(v) -> str:
    if hasattr(v, "dtype") and hasattr(v, "item"):    # numpy scalar
        v = v.item()
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


def parse_value(text: str):
    """Inverse of :func:`format_value` for numbers and booleans."""
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Header row then ``rows`` in the given order, LF line endings."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([format_value(v) for v in row])
    except OSError as exc:
        raise IoError(f"cannot write {os.fspath(path)}: {exc.strerror or exc}") from exc


def read_csv(path) -> tuple[list[str], list[list]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            r = csv.reader(fh)
            header = next(r, [])
            rows = [[parse_value(x) for x in row] for row in r]
    except OSError as exc:
        raise IoError(f"cannot read {os.fspath(path)}: {exc.strerror or exc}") from exc
    return header, rows


def write_kv(path, items: Iterable[tuple[str, object]]) -> None:
    """One ``key = value`` line per item, in the given order."""
    try:
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            for k, v in items:
                fh.write(f"{k} = {format_value(v)}\n")
    except OSError as exc:
        raise IoError(f"cannot write {os.fspath(path)}: {exc.strerror or exc}") from exc


def read_kv(path) -> dict:
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                key, _, value = line.rstrip("\n").partition(" = ")
                out[key] = parse_value(value)
    except OSError as exc:
        raise IoError(f"cannot read {os.fspath(path)}: {exc.strerror or exc}") from exc
    return out
