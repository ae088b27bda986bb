"""EEGN checkpoint files: named float32 tensors plus the master seed."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import FormatError

MAGIC = b"EEGN"
VERSION = 1


def encode_checkpoint(params, seed: int) -> bytes:
    items = [(n, np.asarray(params[n])) for n in (params.names() if hasattr(params, "names") else params)]
    out = bytearray(MAGIC + struct.pack("<II", VERSION, len(items)))
    for name, arr in items:
        raw = name.encode("utf-8")
        if len(raw) > 0xFFFF or arr.ndim > 0xFF:
            raise FormatError(f"parameter {name!r} cannot be encoded")
        out += struct.pack("<H", len(raw)) + raw
        out += struct.pack(f"<B{arr.ndim}I", arr.ndim, *arr.shape)
        out += np.ascontiguousarray(arr, dtype="<f4").tobytes()
    out += struct.pack("<Q", int(seed) & 0xFFFFFFFFFFFFFFFF)
    return bytes(out)


def decode_checkpoint(data: bytes) -> tuple[dict[str, np.ndarray], int]:
    if len(data) < 12 or data[:4] != MAGIC:
        raise FormatError("bad magic: not an EEGN checkpoint")
    version, count = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    pos = 12
    params: dict[str, np.ndarray] = {}
    try:
        for _ in range(count):
            (ln,) = struct.unpack_from("<H", data, pos)
            pos += 2
            name = data[pos:pos + ln].decode("utf-8")
            if len(name.encode()) != ln:
                raise FormatError("truncated parameter name")
            pos += ln
            (rank,) = struct.unpack_from("<B", data, pos)
            pos += 1
            shape = struct.unpack_from(f"<{rank}I", data, pos)
            pos += 4 * rank
            size = int(np.prod(shape)) * 4
            if pos + size > len(data):
                raise FormatError(f"truncated data for parameter {name!r}")
            if name in params:
                raise FormatError(f"duplicate parameter {name!r}")
            params[name] = np.frombuffer(data, "<f4", int(np.prod(shape)), pos).reshape(shape).astype(np.float32)
            pos += size
        (seed,) = struct.unpack_from("<Q", data, pos)
    except struct.error as exc:
        raise FormatError(f"truncated checkpoint: {exc}") from None
    pos += 8
    if pos != len(data):
        raise FormatError(f"{len(data) - pos} trailing bytes after checkpoint")
    return params, int(seed)


def save_checkpoint(path, params, seed: int) -> None:
    Path(path).write_bytes(encode_checkpoint(params, seed))


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], int]:
    return decode_checkpoint(Path(path).read_bytes())
