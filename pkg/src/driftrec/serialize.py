"""Versioned little-endian binary container for named numeric arrays.

Layout::

    magic (8 bytes) | format version (u32) | header length (u32) | header (UTF-8 JSON)
    | array payloads, C order, in header order

Floats are stored as ``<f8`` and integers as ``<i8``.  The header carries the
array names/shapes/dtypes plus free-form JSON metadata.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"DRIFTREC"
FORMAT_VERSION = 1


class FormatError(ValueError):
    pass


def save_arrays(path, kind: str, arrays: dict[str, np.ndarray], meta: dict | None = None) -> None:
    entries = []
    payloads = []
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        if arr.dtype.kind == "f":
            data = np.ascontiguousarray(arr, dtype="<f8")
        elif arr.dtype.kind in "iub":
            data = np.ascontiguousarray(arr, dtype="<i8")
        else:
            raise FormatError(f"array {name!r} has unsupported dtype {arr.dtype}")
        entries.append({"name": name, "shape": list(data.shape), "dtype": data.dtype.str})
        payloads.append(data.tobytes())
    header = json.dumps(
        {"kind": kind, "arrays": entries, "meta": meta or {}}, sort_keys=True, separators=(",", ":")
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(header)))
        fh.write(header)
        for p in payloads:
            fh.write(p)


def load_arrays(path, kind: str | None = None) -> tuple[dict[str, np.ndarray], dict]:
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise FormatError(f"{path}: not a driftrec binary file")
    version, hlen = struct.unpack_from("<II", raw, 8)
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    header = json.loads(raw[16 : 16 + hlen].decode("utf-8"))
    if kind is not None and header["kind"] != kind:
        raise FormatError(f"{path}: expected {kind!r}, found {header['kind']!r}")
    offset = 16 + hlen
    arrays = {}
    for entry in header["arrays"]:
        dt = np.dtype(entry["dtype"])
        count = int(np.prod(entry["shape"], dtype=np.int64))
        arr = np.frombuffer(raw, dtype=dt, count=count, offset=offset).reshape(entry["shape"])
        arrays[entry["name"]] = arr.astype(dt.newbyteorder("="))
        offset += count * dt.itemsize
    return arrays, header["meta"]


def config_hash(items: dict) -> str:
    blob = json.dumps(items, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]
