"""UFT1 binary feature files.

Layout (all integers little-endian u32):

    magic "UFT1" | version=1 | dim | record_count
    per record: id_len | id (UTF-8) | rows | rows*dim float32 (little-endian)

One file carries one modality; every record shares the file-level dim.
"""

from __future__ import annotations

import struct
from collections.abc import Mapping
from pathlib import Path

import numpy as np

__all__ = ["UftFormatError", "write_uft1", "read_uft1"]

MAGIC = b"UFT1"
VERSION = 1
_U32 = struct.Struct("<I")


class UftFormatError(ValueError):
    pass


def write_uft1(path: str | Path, records: Mapping[str, np.ndarray], dim: int) -> None:
    """Write records (id -> rows x dim array) to `path`.

    Values are stored as float32; arrays are cast on write.
    """
    path = Path(path)
    items = list(records.items())
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_U32.pack(VERSION))
        fh.write(_U32.pack(dim))
        fh.write(_U32.pack(len(items)))
        for rid, values in items:
            arr = np.ascontiguousarray(values, dtype=np.float32)
            if arr.ndim != 2 or arr.shape[1] != dim:
                raise UftFormatError(
                    f"record {rid!r} has shape {arr.shape}, expected (rows, {dim})"
                )
            if arr.shape[0] < 1:
                raise UftFormatError(f"record {rid!r} must have at least one row")
            encoded = rid.encode("utf-8")
            fh.write(_U32.pack(len(encoded)))
            fh.write(encoded)
            fh.write(_U32.pack(arr.shape[0]))
            fh.write(arr.astype("<f4").tobytes())


def read_uft1(path: str | Path) -> tuple[dict[str, np.ndarray], int]:
    """Read a UFT1 file; returns ({id: rows x dim float32 array}, dim)."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 16 or data[:4] != MAGIC:
        raise UftFormatError(f"{path}: not a UFT1 file")
    version = _U32.unpack_from(data, 4)[0]
    if version != VERSION:
        raise UftFormatError(f"{path}: unsupported UFT1 version {version}")
    dim = _U32.unpack_from(data, 8)[0]
    count = _U32.unpack_from(data, 12)[0]
    pos = 16
    records: dict[str, np.ndarray] = {}
    for _ in range(count):
        try:
            id_len = _U32.unpack_from(data, pos)[0]
            pos += 4
            rid = data[pos : pos + id_len].decode("utf-8")
            pos += id_len
            rows = _U32.unpack_from(data, pos)[0]
            pos += 4
            nbytes = rows * dim * 4
            block = data[pos : pos + nbytes]
            if len(block) != nbytes:
                raise UftFormatError(f"{path}: truncated record {rid!r}")
            pos += nbytes
        except struct.error as exc:
            raise UftFormatError(f"{path}: truncated file") from exc
        records[rid] = np.frombuffer(block, dtype="<f4").reshape(rows, dim).copy()
    if pos != len(data):
        raise UftFormatError(f"{path}: {len(data) - pos} trailing bytes after last record")
    return records, dim
