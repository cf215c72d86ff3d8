"""Atomic text/JSON output helpers.

Every file the package emits is written to a temporary sibling and renamed
into place, so a crash never leaves a half-written artifact behind.  JSON is
serialized with sorted keys and a fixed layout to keep outputs byte-stable
across runs.
"""

import json
import os
from pathlib import Path
from typing import Any

from .errors import DataError


def atomic_write_text(path: "str | Path", text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc


def write_json(path: "str | Path", obj: Any) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_text(path: "str | Path") -> str:
    path = Path(path)
    if not path.exists():
        raise DataError(f"input file not found: {path}")
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
