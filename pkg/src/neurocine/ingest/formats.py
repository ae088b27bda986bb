"""Montage CSV and EEGT binary trial files.

EEGT layout (little-endian)::

    b"EEGT"  u32 version=1  u32 n_trials  u32 n_channels  u32 n_samples  f32 fs
    per trial: u8 label, u16 subject, f32[n_channels * n_samples] channel-major
"""

from __future__ import annotations

import csv
import io
import os
import struct

import numpy as np

from ..errors import FormatError
from .data import N_CLASSES, ElectrodeMontage, TrialSet

EEGT_MAGIC = b"EEGT"
EEGT_VERSION = 1
_EEGT_HEADER = struct.Struct("<4sIIIIf")
_TRIAL_HEADER = np.dtype([("label", "u1"), ("subject", "<u2")])


def load_montage(path: str | os.PathLike) -> ElectrodeMontage:
    with open(path, newline="") as fh:
        return parse_montage(fh.read())


def parse_montage(text: str) -> ElectrodeMontage:
    rows = csv.reader(io.StringIO(text))
    header = next(rows, None)
    if header is None or [h.strip().lower() for h in header] != ["name", "x", "y", "z"]:
        raise FormatError("line 1: expected header 'name,x,y,z'")
    names: list[str] = []
    positions: list[tuple[float, float, float]] = []
    seen: set[str] = set()
    for lineno, row in enumerate(rows, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 4:
            raise FormatError(f"line {lineno}: expected 4 fields, got {len(row)}")
        name = row[0].strip()
        if not name:
            raise FormatError(f"line {lineno}: empty electrode name")
        try:
            xyz = tuple(float(v) for v in row[1:])
        except ValueError:
            raise FormatError(f"line {lineno}: malformed coordinate in {row!r}") from None
        if not all(np.isfinite(xyz)):
            raise FormatError(f"line {lineno}: non-finite coordinate")
        if name in seen:
            raise FormatError(f"line {lineno}: duplicate electrode {name!r}")
        if xyz == (0.0, 0.0, 0.0):
            raise FormatError(f"line {lineno}: zero position for electrode {name!r}")
        seen.add(name)
        names.append(name)
        positions.append(xyz)
    if not names:
        raise FormatError("montage has no electrodes")
    return ElectrodeMontage(tuple(names), np.array(positions))


def save_montage(montage: ElectrodeMontage, path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("name,x,y,z\n")
        for name, (x, y, z) in zip(montage.names, montage.positions):
            fh.write(f"{name},{float(x)!r},{float(y)!r},{float(z)!r}\n")


def encode_trials(trials: TrialSet) -> bytes:
    n, c, s = trials.samples.shape
    out = [_EEGT_HEADER.pack(EEGT_MAGIC, EEGT_VERSION, n, c, s, trials.sampling_rate)]
    head = np.empty(1, dtype=_TRIAL_HEADER)
    for i in range(n):
        head["label"] = trials.labels[i]
        head["subject"] = trials.subjects[i]
        out.append(head.tobytes())
        out.append(trials.samples[i].astype("<f4", copy=False).tobytes())
    return b"".join(out)


def decode_trials(buf: bytes) -> TrialSet:
    if len(buf) < _EEGT_HEADER.size:
        raise FormatError("truncated header")
    magic, version, n, c, s, fs = _EEGT_HEADER.unpack_from(buf, 0)
    if magic != EEGT_MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != EEGT_VERSION:
        raise FormatError(f"unsupported version {version}")
    if not fs > 0:
        raise FormatError(f"invalid sampling rate {fs}")
    record = np.dtype([("label", "u1"), ("subject", "<u2"), ("samples", "<f4", (c, s))])
    expected = _EEGT_HEADER.size + n * record.itemsize
    if len(buf) < expected:
        raise FormatError(f"truncated: header declares {n} trials, payload holds "
                          f"{(len(buf) - _EEGT_HEADER.size) // max(record.itemsize, 1)}")
    if len(buf) > expected:
        raise FormatError(f"{len(buf) - expected} trailing bytes after last trial")
    recs = np.frombuffer(buf, dtype=record, count=n, offset=_EEGT_HEADER.size)
    labels = recs["label"].copy()
    bad = np.nonzero(labels >= N_CLASSES)[0]
    if bad.size:
        raise FormatError(f"trial {bad[0]}: label {labels[bad[0]]} >= {N_CLASSES}")
    return TrialSet(float(fs), recs["samples"].astype(np.float32), labels, recs["subject"].copy())


def load_trials(path: str | os.PathLike) -> TrialSet:
    with open(path, "rb") as fh:
        return decode_trials(fh.read())


def save_trials(trials: TrialSet, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_trials(trials))
