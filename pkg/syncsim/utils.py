from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

from django.utils import timezone


def atomic_write(path, text: str) -> Path:
    """Write `text` to a temporary sibling of `path` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def config_hash(config: dict) -> str:
    payload = json.dumps(config, sort_keys=True, default=str, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


def key_line(text: str, key: str) -> int | None:
    """Return the 1-based line on which `"key"` first appears in a JSON document."""
    needle = f'"{key}"'
    for number, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return number
    return None


def utc_timestamp() -> str:
    return timezone.now().isoformat()
