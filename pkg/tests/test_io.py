import numpy as np
import pytest

from vesselprior import io


def test_container_roundtrip_and_determinism(tmp_path):
    arrays = {"a": np.arange(12, dtype=float).reshape(3, 4),
              "b": np.array([1, 2, 3], dtype=np.int64)}
    meta = {"kind": "test", "n": 3}
    p1, p2 = tmp_path / "one.bin", tmp_path / "two.bin"
    io.save_arrays(p1, meta, arrays)
    io.save_arrays(p2, meta, arrays)
    assert p1.read_bytes() == p2.read_bytes()
    meta2, arrays2 = io.load_arrays(p1)
    assert meta2 == meta
    assert np.array_equal(arrays2["a"], arrays["a"])
    assert arrays2["b"].dtype == np.int64


def test_container_rejects_corruption(tmp_path):
    path = tmp_path / "x.bin"
    io.save_arrays(path, {}, {"v": np.ones(5)})
    blob = bytearray(path.read_bytes())
    blob[-2] ^= 0xFF
    path.write_bytes(bytes(blob))
    with pytest.raises(io.ChecksumError):
        io.load_arrays(path)


def test_container_rejects_bad_magic(tmp_path):
    path = tmp_path / "y.bin"
    path.write_bytes(b"NOPE" + b"\x00" * 32)
    with pytest.raises(IOError, match="magic"):
        io.load_arrays(path)


def test_atomic_write_text(tmp_path):
    path = tmp_path / "sub" / "f.txt"
    io.atomic_write_text(path, "hello\n")
    assert path.read_text() == "hello\n"
    io.atomic_write_text(path, "world\n")
    assert path.read_text() == "world\n"
    assert list(path.parent.glob("*.tmp")) == []
