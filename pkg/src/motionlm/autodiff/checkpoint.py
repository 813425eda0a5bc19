"""Named-tensor parameter container.

File layout ("MPRM"): magic, u32 record count, then per record a u16
name length, utf-8 name, u8 ndim, u32 dims, and the f64 payload in
little-endian row-major order.
"""
from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

MAGIC = b"MPRM"


def _serialize(named_arrays) -> bytes:
    blob = bytearray(MAGIC)
    blob += struct.pack("<I", len(named_arrays))
    for name in named_arrays:
        arr = np.asarray(named_arrays[name], dtype=np.float64)
        enc = name.encode("utf-8")
        blob += struct.pack("<H", len(enc)) + enc
        blob += struct.pack("<B", arr.ndim)
        blob += struct.pack(f"<{arr.ndim}I", *arr.shape)
        blob += arr.astype("<f8").tobytes()
    return bytes(blob)


def save_params(named_arrays: dict, path) -> None:
    Path(path).write_bytes(_serialize(named_arrays))


def load_params(path) -> dict:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: bad magic {raw[:4]!r}")
    (count,) = struct.unpack_from("<I", raw, 4)
    off = 8
    out = {}
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", raw, off)
        off += 2
        name = raw[off:off + nlen].decode("utf-8")
        off += nlen
        (ndim,) = struct.unpack_from("<B", raw, off)
        off += 1
        shape = struct.unpack_from(f"<{ndim}I", raw, off)
        off += 4 * ndim
        n = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(raw[off:off + 8 * n], dtype="<f8").reshape(shape)
        off += 8 * n
        out[name] = arr.copy()
    if off != len(raw):
        raise ValueError(f"{path}: trailing bytes after {count} records")
    return out


def params_digest(named_arrays: dict) -> str:
    """Content hash of a parameter set (names, shapes, exact values)."""
    return hashlib.sha256(_serialize(dict(sorted(named_arrays.items())))).hexdigest()
