"""EEGF frame files.

Layout (little-endian)::

    b"EEGF"  u32 version=1  u32 n_trials  u32 n_frames  u32 channels=3  u32 height  u32 width
    per trial: u8 label, u16 subject, f32 frames in (frame, channel, row, col) order
"""

from __future__ import annotations

import os
import struct

import numpy as np

from ..errors import FormatError
from ..ingest.data import N_CLASSES, FrameSet

EEGF_MAGIC = b"EEGF"
EEGF_VERSION = 1
_HEADER = struct.Struct("<4sIIIIII")


def encode_frames(frames: FrameSet) -> bytes:
    n, t, c, h, w = frames.frames.shape
    record = np.dtype([("label", "u1"), ("subject", "<u2"), ("frames", "<f4", (t, c, h, w))])
    recs = np.empty(n, dtype=record)
    recs["label"] = frames.labels
    recs["subject"] = frames.subjects
    recs["frames"] = frames.frames
    return _HEADER.pack(EEGF_MAGIC, EEGF_VERSION, n, t, c, h, w) + recs.tobytes()


def decode_frames(buf: bytes) -> FrameSet:
    if len(buf) < _HEADER.size:
        raise FormatError("truncated header")
    magic, version, n, t, c, h, w = _HEADER.unpack_from(buf, 0)
    if magic != EEGF_MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != EEGF_VERSION:
        raise FormatError(f"unsupported version {version}")
    if c != 3:
        raise FormatError(f"expected 3 channels, header says {c}")
    record = np.dtype([("label", "u1"), ("subject", "<u2"), ("frames", "<f4", (t, c, h, w))])
    expected = _HEADER.size + n * record.itemsize
    if len(buf) != expected:
        raise FormatError(f"truncated: expected {expected} bytes, got {len(buf)}" if len(buf) < expected
                          else f"{len(buf) - expected} trailing bytes")
    recs = np.frombuffer(buf, dtype=record, count=n, offset=_HEADER.size)
    if n and recs["label"].max() >= N_CLASSES:
        raise FormatError("label out of range")
    return FrameSet(recs["frames"].astype(np.float32), recs["label"].copy(), recs["subject"].copy())


def save_frames(frames: FrameSet, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_frames(frames))


def load_frames(path: str | os.PathLike) -> FrameSet:
    with open(path, "rb") as fh:
        return decode_frames(fh.read())
