"""Small shared helpers."""

import os
import tempfile
from pathlib import Path


def atomic_write_text(path, text: str) -> None:
    """Write-then-rename so partial files never land at the target path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def parse_size(text) -> tuple[int, int]:
    """'64' -> (64, 64); '64x128' or '64,128' -> (64, 128)."""
    if isinstance(text, int):
        return (text, text)
    raw = str(text).lower().replace(",", "x")
    parts = [p for p in raw.split("x") if p]
    if len(parts) == 1:
        v = int(parts[0])
        return (v, v)
    if len(parts) == 2:
        return (int(parts[0]), int(parts[1]))
    raise ValueError(f"cannot parse size {text!r}")
