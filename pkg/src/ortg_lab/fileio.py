"""Atomic file writes and reproducible timestamps."""

from __future__ import annotations

import os
import tempfile
import time
from datetime import datetime, timezone
from pathlib import Path

from .errors import WriteError


def atomic_write_bytes(path: str | Path, payload: bytes) -> None:
    """Write via a temp file in the target directory, then rename.

    A failed write never leaves a partial file at ``path``.
    """
    path = Path(path)
    parent = path.parent if str(path.parent) else Path(".")
    try:
        fd, tmp_name = tempfile.mkstemp(
            dir=parent, prefix=f".{path.name}.", suffix=".tmp"
        )
    except OSError as exc:
        raise WriteError(f"cannot write {path}: {exc}") from exc
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp_name, path)
    except BaseException as exc:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        if isinstance(exc, OSError):
            raise WriteError(f"cannot write {path}: {exc}") from exc
        raise


def atomic_write_text(path: str | Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def created_at_timestamp() -> str:
    """ISO-8601 creation timestamp; honors SOURCE_DATE_EPOCH for
    byte-reproducible outputs."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    ts = int(epoch) if epoch else time.time()
    return datetime.fromtimestamp(ts, tz=timezone.utc).isoformat()
