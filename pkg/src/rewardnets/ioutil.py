"""Small IO helpers: atomic writes, line-delimited records, seed derivation."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile


def atomic_write_text(path, text: str):
    """Write via temp file + rename so interrupted runs never leave partial files."""
    path = os.fspath(path)
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_bytes(path, data: bytes):
    path = os.fspath(path)
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_ndjson(path, records):
    atomic_write_text(
        path, "".join(json.dumps(r, separators=(",", ":")) + "\n" for r in records)
    )


def read_ndjson(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def derive_seed(master_seed, *parts) -> int:
    """Stable 63-bit seed for a labelled unit of work under a master seed."""
    key = ":".join(str(p) for p in (master_seed, *parts))
    digest = hashlib.sha256(key.encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1
