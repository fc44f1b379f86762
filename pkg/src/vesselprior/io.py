"""Small versioned binary container for datasets and network checkpoints.

Layout: magic ``VPRI`` + u32 format version + u64 header length + UTF-8 JSON
header + raw little-endian array payload. The header records array names,
dtypes, shapes, offsets, and a SHA-256 checksum of the payload; loaders
reject mismatching checksums. Writes are atomic (temp file + rename) and the
bytes are a pure function of the content, so identical inputs produce
identical files.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile

import numpy as np

MAGIC = b"VPRI"
FORMAT_VERSION = 1


class ChecksumError(IOError):
    """Stored payload checksum does not match the file contents."""


def save_arrays(path, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    """Write ``arrays`` with JSON-serializable ``meta`` to ``path`` atomically."""
    entries = []
    chunks = []
    offset = 0
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        if arr.dtype.byteorder == ">":
            arr = arr.astype(arr.dtype.newbyteorder("<"))
        buf = arr.tobytes()
        entries.append({
            "name": name,
            "dtype": arr.dtype.str,
            "shape": list(arr.shape),
            "offset": offset,
            "nbytes": len(buf),
        })
        chunks.append(buf)
        offset += len(buf)
    payload = b"".join(chunks)
    header = {
        "meta": meta,
        "arrays": entries,
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    blob = (
        MAGIC
        + FORMAT_VERSION.to_bytes(4, "little")
        + len(header_bytes).to_bytes(8, "little")
        + header_bytes
        + payload
    )
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_arrays(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Read a container written by save_arrays; verifies the checksum."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise IOError(f"{path}: not a recognised container (bad magic)")
    version = int.from_bytes(blob[4:8], "little")
    if version != FORMAT_VERSION:
        raise IOError(f"{path}: unsupported container version {version}")
    header_len = int.from_bytes(blob[8:16], "little")
    header = json.loads(blob[16 : 16 + header_len].decode("utf-8"))
    payload = blob[16 + header_len :]
    digest = hashlib.sha256(payload).hexdigest()
    if digest != header["payload_sha256"]:
        raise ChecksumError(f"{path}: payload checksum mismatch (corrupt file?)")
    arrays = {}
    for entry in header["arrays"]:
        start, n = entry["offset"], entry["nbytes"]
        arr = np.frombuffer(payload[start : start + n], dtype=np.dtype(entry["dtype"]))
        arrays[entry["name"]] = arr.reshape(entry["shape"]).copy()
    return header["meta"], arrays


def atomic_write_text(path, text: str) -> None:
    """Write a text file via temp-file-then-rename so readers never observe
    a partial file."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def file_sha256(path) -> str:
    """Checksum of a whole file, used to fingerprint training inputs."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
