"""CSV rows, atomic file writes and run manifests."""
from __future__ import annotations

import hashlib
import json
import os
import platform
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

from .stable_bounds import BoundResult

__all__ = ["fmt", "bound_row", "BOUND_HEADER", "csv_text", "write_atomic", "sha256_file", "versions"]

BOUND_HEADER = ["x", "value", "raw_value", "valid", "regime", "constants"]


def fmt(value) -> str:
    """Fixed 17-significant-digit reals; lowercase booleans."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float) or hasattr(value, "__float__"):
        return format(float(value), ".17g")
    return str(value)


def bound_row(result: BoundResult) -> list[str]:
    row = [fmt(result.x), fmt(result.value), fmt(result.raw_value), fmt(result.valid), result.regime]
    row += [f"{key}={fmt(result.constants[key])}" for key in sorted(result.constants)]
    return row


def csv_text(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    lines = [",".join(header)]
    lines += [",".join(row) for row in rows]
    return "\n".join(lines) + "\n"


def write_atomic(path: str | Path, text: str) -> Path:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json_atomic(path: str | Path, payload) -> Path:
    return write_atomic(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def versions() -> dict[str, str]:
    import numpy
    import scipy

    from . import __version__

    return {
        "stableconc": __version__,
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }
