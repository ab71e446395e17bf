"""Shared helpers: half-up rounding on exact rationals, atomic file writes."""

from __future__ import annotations

import os
import tempfile
from fractions import Fraction
from pathlib import Path


def round_half_up(value: Fraction | int) -> int:
    """Round to the nearest integer, halves away from zero."""
    f = Fraction(value)
    if f < 0:
        return -round_half_up(-f)
    return int(f + Fraction(1, 2))


def round_half_up_tenths(value: Fraction | int) -> float:
    """Round to one decimal place, halves away from zero."""
    return round_half_up(Fraction(value) * 10) / 10


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write-temp-then-rename so readers never observe a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
