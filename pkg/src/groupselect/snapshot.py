"""Versioned binary snapshot files.

Layout (all integers little-endian)::

    8 bytes   magic  b"GSNAP\\r\\n\\x1a"
    4 bytes   format version (uint32)
    8 bytes   header length H (uint64)
    H bytes   UTF-8 JSON header: {"meta": {...}, "arrays": [{"name", "dtype",
              "shape", "offset", "nbytes"}, ...]}
    ...       raw C-order array payloads; offsets count from the end of the header

Arrays round-trip bit for bit. The header is written with sorted keys, so
equal contents give equal files.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"GSNAP\r\n\x1a"
VERSION = 1


class SnapshotError(ValueError):
    pass


def encode(meta: dict, arrays: dict[str, np.ndarray]) -> bytes:
    entries = []
    blobs = []
    offset = 0
    for name in sorted(arrays):
        a = np.ascontiguousarray(arrays[name])
        a = a.astype(a.dtype.newbyteorder("<"), copy=False)
        raw = a.tobytes()
        entries.append({"name": name, "dtype": a.dtype.str, "shape": list(a.shape),
                        "offset": offset, "nbytes": len(raw)})
        blobs.append(raw)
        offset += len(raw)
    header = json.dumps({"meta": meta, "arrays": entries}, sort_keys=True).encode()
    return b"".join([MAGIC, struct.pack("<IQ", VERSION, len(header)), header, *blobs])


def decode(data: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    if data[:len(MAGIC)] != MAGIC:
        raise SnapshotError("not a snapshot file (bad magic)")
    pos = len(MAGIC)
    version, hlen = struct.unpack_from("<IQ", data, pos)
    if version != VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    pos += 12
    try:
        header = json.loads(data[pos:pos + hlen])
    except ValueError as exc:
        raise SnapshotError(f"corrupt snapshot header: {exc}") from None
    base = pos + hlen
    arrays = {}
    for e in header["arrays"]:
        start = base + e["offset"]
        raw = data[start:start + e["nbytes"]]
        if len(raw) != e["nbytes"]:
            raise SnapshotError(f"truncated payload for array {e['name']!r}")
        arrays[e["name"]] = np.frombuffer(raw, dtype=e["dtype"]).reshape(e["shape"]).copy()
    return header["meta"], arrays


def write_snapshot(path, meta: dict, arrays: dict[str, np.ndarray]) -> str:
    """Write a snapshot and return the sha256 of its bytes."""
    data = encode(meta, arrays)
    Path(path).write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def read_snapshot(path) -> tuple[dict, dict[str, np.ndarray]]:
    return decode(Path(path).read_bytes())


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
