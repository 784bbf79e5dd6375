"""Artifact I/O: atomic writes, deterministic CSV, config hashing.

Every file is written to a temp name and renamed into place, so a crashed
run never leaves a truncated artifact.  Floats are serialized with repr
(shortest round-trip form), which makes re-runs with the same seed
byte-identical.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
from pathlib import Path


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".tmp.")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(x) -> str:
    """Deterministic cell formatting: floats via repr, everything else via str."""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return repr(x)
    return str(x)


def render_csv(header: list[str], rows: list[tuple], comments: list[str] | None = None) -> str:
    """Fixed column order, header row, '#'-prefixed provenance comments."""
    lines = [f"# {c}" for c in (comments or [])]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def write_csv(
    path: str | Path,
    header: list[str],
    rows: list[tuple],
    comments: list[str] | None = None,
) -> None:
    atomic_write_text(path, render_csv(header, rows, comments))


def config_hash(canonical: str) -> str:
    """12-hex digest of the canonical config echo; names the output directory."""
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]
