"""Location of the shipped data tables.

Set ``HHY_DATA_DIR`` to point the whole engine at an alternative copy of the
``data`` directory (same layout).
"""
from __future__ import annotations

import os
from pathlib import Path

DATA_ENV = "HHY_DATA_DIR"
_PACKAGE_DATA = Path(__file__).resolve().parent / "data"


class DataError(Exception):
    """A shipped or user-supplied data file is missing or malformed."""

    def __init__(self, path, message, line=None):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


def data_dir() -> Path:
    override = os.environ.get(DATA_ENV)
    return Path(override) if override else _PACKAGE_DATA


def data_path(*parts: str) -> Path:
    return data_dir().joinpath(*parts)


def read_tsv(path: Path, ncols_min: int):
    """Yield ``(line_number, fields)`` for non-blank, non-comment rows."""
    if not path.exists():
        raise DataError(path, "file not found")
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) < ncols_min:
                raise DataError(path, f"expected at least {ncols_min} columns, got {len(fields)}", lineno)
            yield lineno, fields
