"""Checksummed line-oriented text files for model/codebook persistence.

Every persisted file is a list of text lines followed by a trailing
``sha256 <hex>`` line covering everything before it.  Floats are written with
17 significant digits so float64 values round-trip exactly.
"""

import hashlib
from pathlib import Path

import numpy as np

from .errors import ChecksumMismatch, IoFailure

FLOAT_FMT = ".17g"


def format_floats(values) -> str:
    return " ".join(format(float(v), FLOAT_FMT) for v in np.asarray(values).ravel())


def parse_floats(line: str, expect: int | None = None) -> np.ndarray:
    values = np.array([float(tok) for tok in line.split()])
    if expect is not None and values.size != expect:
        raise IoFailure(f"expected {expect} values per line, got {values.size}")
    return values


def _digest(lines: list[str]) -> str:
    body = "\n".join(lines) + "\n"
    return hashlib.sha256(body.encode()).hexdigest()


def write_checked(path, lines: list[str]) -> None:
    """Write lines plus a trailing content-hash line."""
    body = "\n".join(lines) + "\n"
    out = body + f"sha256 {_digest(lines)}\n"
    try:
        Path(path).write_text(out)
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc


def read_checked(path) -> list[str]:
    """Read a checksummed file, verify the trailing hash, return body lines."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or not lines[-1].startswith("sha256 "):
        raise ChecksumMismatch(f"{path}: missing trailing content hash")
    stored = lines[-1].split(None, 1)[1].strip()
    body = lines[:-1]
    if _digest(body) != stored:
        raise ChecksumMismatch(f"{path}: content hash does not match")
    return body
