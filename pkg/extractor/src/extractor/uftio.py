"""Writer (and verifying reader) for the UFT1 feature-file wire format.

Layout, all integers little-endian u32:

    magic "UFT1" | version=1 | dim | record_count
    per record: id_len | id (UTF-8) | rows | rows*dim float32 little-endian

This module is deliberately self-contained: the format is the contract
between this extractor and its consumers, so it is implemented from the
byte layout, not imported from them.
"""

from __future__ import annotations

import hashlib
import struct
from collections.abc import Mapping
from pathlib import Path

import numpy as np

MAGIC = b"UFT1"
VERSION = 1
_U32 = struct.Struct("<I")


class UftError(ValueError):
    pass


def record_checksum(values: np.ndarray) -> str:
    """SHA-256 over the little-endian float32 payload, as stored on disk."""
    return hashlib.sha256(np.ascontiguousarray(values, dtype="<f4").tobytes()).hexdigest()


def write_records(path: str | Path, records: Mapping[str, np.ndarray], dim: int) -> dict[str, str]:
    """Write records and return {id: sha256-of-payload} for the manifest."""
    checksums: dict[str, str] = {}
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_U32.pack(VERSION))
        fh.write(_U32.pack(dim))
        fh.write(_U32.pack(len(records)))
        for rid, values in records.items():
            arr = np.ascontiguousarray(values, dtype="<f4")
            if arr.ndim != 2 or arr.shape[1] != dim or arr.shape[0] < 1:
                raise UftError(f"record {rid!r} has shape {arr.shape}, expected (rows>=1, {dim})")
            payload = arr.tobytes()
            encoded = rid.encode("utf-8")
            fh.write(_U32.pack(len(encoded)))
            fh.write(encoded)
            fh.write(_U32.pack(arr.shape[0]))
            fh.write(payload)
            checksums[rid] = hashlib.sha256(payload).hexdigest()
    return checksums


def read_records(path: str | Path) -> tuple[dict[str, np.ndarray], int]:
    """Read a UFT1 file back; used to verify our own output."""
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != MAGIC:
        raise UftError(f"{path}: not a UFT1 file")
    version, dim, count = struct.unpack_from("<III", data, 4)
    if version != VERSION:
        raise UftError(f"{path}: unsupported version {version}")
    pos = 16
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        id_len = _U32.unpack_from(data, pos)[0]
        pos += 4
        rid = data[pos : pos + id_len].decode("utf-8")
        pos += id_len
        rows = _U32.unpack_from(data, pos)[0]
        pos += 4
        nbytes = rows * dim * 4
        out[rid] = np.frombuffer(data[pos : pos + nbytes], dtype="<f4").reshape(rows, dim).copy()
        pos += nbytes
    if pos != len(data):
        raise UftError(f"{path}: trailing bytes")
    return out, dim
