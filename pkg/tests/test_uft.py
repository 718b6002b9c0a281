"""Binary feature-file format: byte layout, round-trips, corruption."""

from __future__ import annotations

import struct

import numpy as np
import pytest

from convcause.uft import MAGIC, UftFormatError, read_uft1, write_uft1


def test_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    records = {
        "c1_1": rng.standard_normal((4, 8)).astype(np.float32),
        "c1_2": rng.standard_normal((1, 8)).astype(np.float32),
        "длинный_id_2": rng.standard_normal((3, 8)).astype(np.float32),
    }
    path = tmp_path / "feat.uft1"
    write_uft1(path, records, dim=8)
    got, dim = read_uft1(path)
    assert dim == 8
    assert set(got) == set(records)
    for k in records:
        np.testing.assert_array_equal(got[k], records[k])


def test_header_layout(tmp_path):
    path = tmp_path / "one.uft1"
    write_uft1(path, {"x": np.zeros((2, 3), dtype=np.float32)}, dim=3)
    raw = path.read_bytes()
    assert raw[:4] == MAGIC == b"UFT1"
    version, dim, count = struct.unpack_from("<III", raw, 4)
    assert (version, dim, count) == (1, 3, 1)
    id_len = struct.unpack_from("<I", raw, 16)[0]
    assert raw[20 : 20 + id_len] == b"x"
    rows = struct.unpack_from("<I", raw, 20 + id_len)[0]
    assert rows == 2
    assert len(raw) == 20 + id_len + 4 + 2 * 3 * 4


def test_write_rejects_bad_shapes(tmp_path):
    with pytest.raises(UftFormatError):
        write_uft1(tmp_path / "bad.uft1", {"x": np.zeros((2, 4), dtype=np.float32)}, dim=3)
    with pytest.raises(UftFormatError):
        write_uft1(tmp_path / "bad.uft1", {"x": np.zeros((0, 3), dtype=np.float32)}, dim=3)


def test_read_rejects_wrong_magic(tmp_path):
    p = tmp_path / "no.uft1"
    p.write_bytes(b"NOPE" + b"\x00" * 20)
    with pytest.raises(UftFormatError, match="not a UFT1"):
        read_uft1(p)


def test_read_rejects_truncation_and_trailing(tmp_path):
    p = tmp_path / "f.uft1"
    write_uft1(p, {"ab": np.ones((2, 2), dtype=np.float32)}, dim=2)
    raw = p.read_bytes()
    (tmp_path / "t.uft1").write_bytes(raw[:-5])
    with pytest.raises(UftFormatError, match="truncated"):
        read_uft1(tmp_path / "t.uft1")
    (tmp_path / "x.uft1").write_bytes(raw + b"\x00")
    with pytest.raises(UftFormatError, match="trailing"):
        read_uft1(tmp_path / "x.uft1")


def test_read_rejects_unknown_version(tmp_path):
    p = tmp_path / "v9.uft1"
    write_uft1(p, {"a": np.ones((1, 1), dtype=np.float32)}, dim=1)
    raw = bytearray(p.read_bytes())
    raw[4:8] = struct.pack("<I", 9)
    p.write_bytes(bytes(raw))
    with pytest.raises(UftFormatError, match="version"):
        read_uft1(p)


def test_float32_storage_quantizes(tmp_path):
    path = tmp_path / "q.uft1"
    value = np.array([[1.0 + 1e-12]])
    write_uft1(path, {"a": value}, dim=1)
    got, _ = read_uft1(path)
    assert got["a"].dtype == np.float32
    assert got["a"][0, 0] == np.float32(1.0 + 1e-12)
