from pathlib import Path
from typing import Iterable, Sequence
import csv
import hashlib
import io
import json
import os
import tempfile

from .retry_utils import io_retry


def content_digest(values: Iterable[float]) -> str:
    """
    Deterministic digest of a numeric row, used to detect duplicate dataset rows.
    """
    h = hashlib.sha256()
    for v in values:
        h.update(repr(float(v)).encode("ascii"))
        h.update(b",")
    return h.hexdigest()[:16]


def format_value(value) -> str:
    """Stable text rendering for CSV cells."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


@io_retry
def write_text_atomic(path: Path, text: str) -> Path:
    """
    Write via a temp file in the target directory and rename into place,
    so readers never observe a half-written artifact.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=str(path.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    return write_text_atomic(path, render_csv(header, rows))


def write_json(path: Path, payload) -> Path:
    return write_text_atomic(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
