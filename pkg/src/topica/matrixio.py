"""Binary matrix files, plain-text metadata headers, and identity hashes.

Matrix file layout: magic ``TICM``, one version byte (1), two uint32
little-endian fields (rows, cols), then rows*cols float64 little-endian
values in row-major order.

Metadata headers are ``key = value`` lines with ``#`` comments, the same
syntax the CLI config files use.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

from .errors import FormatError

MAGIC = b"TICM"
VERSION = 1
_HEADER = struct.Struct("<4sBII")


def write_matrix(path, values: np.ndarray) -> None:
    values = np.ascontiguousarray(values, dtype="<f8")
    if values.ndim != 2:
        raise FormatError(f"expected a 2-D matrix, got shape {values.shape}")
    rows, cols = values.shape
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, rows, cols))
        f.write(values.tobytes(order="C"))


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as f:
        header = f.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise FormatError(f"{path}: truncated header")
        magic, version, rows, cols = _HEADER.unpack(header)
        if magic != MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        payload = f.read(8 * rows * cols)
    if len(payload) != 8 * rows * cols:
        raise FormatError(f"{path}: truncated payload")
    data = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    return data.reshape(rows, cols)


def format_float(x) -> str:
    """Render a float so that parsing it back is bit-exact."""
    return f"{float(x):.17g}"


def write_meta(path, entries: dict) -> None:
    lines = [f"{key} = {value}\n" for key, value in entries.items()]
    with open(path, "w", encoding="ascii") as f:
        f.writelines(lines)


def read_meta(path) -> dict:
    entries = {}
    with open(path, "r", encoding="ascii") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            entries[key.strip()] = value.strip()
    return entries


def content_hash(*parts) -> str:
    """SHA-256 over a canonical encoding of arrays, numbers, and strings."""
    digest = hashlib.sha256()
    for part in parts:
        if isinstance(part, np.ndarray):
            arr = np.ascontiguousarray(part, dtype="<f8")
            digest.update(b"a")
            digest.update(struct.pack("<I", arr.ndim))
            for dim in arr.shape:
                digest.update(struct.pack("<Q", dim))
            digest.update(arr.tobytes(order="C"))
        elif isinstance(part, bool):
            digest.update(b"b" + (b"1" if part else b"0"))
        elif isinstance(part, (int, np.integer)):
            digest.update(b"i" + struct.pack("<q", int(part)))
        elif isinstance(part, float):
            digest.update(b"f" + struct.pack("<d", part))
        elif isinstance(part, str):
            encoded = part.encode("utf-8")
            digest.update(b"s" + struct.pack("<I", len(encoded)) + encoded)
        elif isinstance(part, bytes):
            digest.update(b"r" + struct.pack("<I", len(part)) + part)
        else:
            raise TypeError(f"cannot hash {type(part)!r}")
    return digest.hexdigest()
