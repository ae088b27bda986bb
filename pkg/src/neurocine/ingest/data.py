"""Core data containers: montages, trials and frame sequences."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError

N_CLASSES = 4
BAND_ORDER = ("theta", "alpha", "beta")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ElectrodeMontage:
    names: tuple[str, ...]
    positions: np.ndarray  # (n, 3)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] != len(self.names):
            raise ShapeError(f"positions must be ({len(self.names)}, 3), got {pos.shape}")
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate electrode names")
        if np.any(np.linalg.norm(pos, axis=1) == 0.0):
            raise ValueError("zero position")
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "positions", _frozen(pos))

    def __len__(self) -> int:
        return len(self.names)

    def unit_positions(self) -> np.ndarray:
        return self.positions / np.linalg.norm(self.positions, axis=1, keepdims=True)


@dataclass(frozen=True)
class Trial:
    samples: np.ndarray  # (channels, time), microvolts
    label: int
    subject: int

    def __post_init__(self):
        if not 0 <= int(self.label) < N_CLASSES:
            raise ValueError(f"label {self.label} outside 0..{N_CLASSES - 1}")


@dataclass(frozen=True)
class TrialSet:
    """A batch of equal-shape trials stored as one (n_trials, channels, samples) array."""

    sampling_rate: float
    samples: np.ndarray
    labels: np.ndarray
    subjects: np.ndarray

    def __post_init__(self):
        if not self.sampling_rate > 0:
            raise ValueError("sampling rate must be positive")
        x = np.asarray(self.samples, dtype=np.float32)
        if x.ndim != 3:
            raise ShapeError(f"samples must be (trials, channels, time), got {x.shape}")
        labels = np.asarray(self.labels, dtype=np.uint8)
        subjects = np.asarray(self.subjects, dtype=np.uint16)
        if labels.shape != (x.shape[0],) or subjects.shape != (x.shape[0],):
            raise ShapeError("labels and subjects need one entry per trial")
        if labels.size and labels.max() >= N_CLASSES:
            raise ValueError(f"label {labels.max()} outside 0..{N_CLASSES - 1}")
        object.__setattr__(self, "sampling_rate", float(self.sampling_rate))
        object.__setattr__(self, "samples", _frozen(x))
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "subjects", _frozen(subjects))

    @classmethod
    def from_trials(cls, sampling_rate: float, trials: list[Trial]) -> "TrialSet":
        shapes = {np.shape(t.samples) for t in trials}
        if len(shapes) > 1:
            raise ShapeError(f"trials differ in shape: {sorted(shapes)}")
        return cls(
            sampling_rate,
            np.stack([t.samples for t in trials]) if trials else np.zeros((0, 0, 0), np.float32),
            [t.label for t in trials],
            [t.subject for t in trials],
        )

    def __len__(self) -> int:
        return self.samples.shape[0]

    def __getitem__(self, i: int) -> Trial:
        return Trial(self.samples[i], int(self.labels[i]), int(self.subjects[i]))

    @property
    def n_channels(self) -> int:
        return self.samples.shape[1]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[2]

    def subject_ids(self) -> list[int]:
        return sorted(int(s) for s in np.unique(self.subjects))

    def check_montage(self, montage: ElectrodeMontage) -> None:
        if self.n_channels != len(montage):
            raise ShapeError(f"{self.n_channels} channels but montage has {len(montage)} electrodes")

    def subset(self, index) -> "TrialSet":
        index = np.asarray(index, dtype=np.intp)
        return TrialSet(self.sampling_rate, self.samples[index], self.labels[index], self.subjects[index])

    def with_labels(self, labels) -> "TrialSet":
        return TrialSet(self.sampling_rate, self.samples, labels, self.subjects)


@dataclass(frozen=True)
class FrameSequence:
    frames: np.ndarray  # (n_frames, 3, 32, 32)
    label: int
    subject: int

    def __post_init__(self):
        f = np.asarray(self.frames, dtype=np.float32)
        if f.ndim != 4 or f.shape[1] != 3:
            raise ShapeError(f"frames must be (n_frames, 3, H, W), got {f.shape}")
        if not np.all(np.isfinite(f)):
            raise ValueError("frames contain non-finite values")
        object.__setattr__(self, "frames", _frozen(f))


@dataclass(frozen=True)
class FrameSet:
    """Frame sequences for many trials: frames is (n_trials, n_frames, 3, H, W)."""

    frames: np.ndarray
    labels: np.ndarray
    subjects: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.frames, dtype=np.float32)
        if f.ndim != 5 or f.shape[2] != 3:
            raise ShapeError(f"frames must be (trials, n_frames, 3, H, W), got {f.shape}")
        labels = np.asarray(self.labels, dtype=np.uint8)
        subjects = np.asarray(self.subjects, dtype=np.uint16)
        if labels.shape != (f.shape[0],) or subjects.shape != (f.shape[0],):
            raise ShapeError("labels and subjects need one entry per trial")
        object.__setattr__(self, "frames", _frozen(f))
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "subjects", _frozen(subjects))

    @classmethod
    def from_sequences(cls, seqs: list[FrameSequence]) -> "FrameSet":
        return cls(np.stack([s.frames for s in seqs]), [s.label for s in seqs], [s.subject for s in seqs])

    def __len__(self) -> int:
        return self.frames.shape[0]

    def __getitem__(self, i: int) -> FrameSequence:
        return FrameSequence(self.frames[i], int(self.labels[i]), int(self.subjects[i]))

    @property
    def n_frames(self) -> int:
        return self.frames.shape[1]

    def subset(self, index) -> "FrameSet":
        index = np.asarray(index, dtype=np.intp)
        return FrameSet(self.frames[index], self.labels[index], self.subjects[index])

    def with_labels(self, labels) -> "FrameSet":
        return FrameSet(self.frames, labels, self.subjects)


@dataclass(frozen=True)
class SplitPlan:
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    held_out_subject: int
    seed: int = field(default=0)

    def __post_init__(self):
        for name in ("train", "validation", "test"):
            object.__setattr__(self, name, _frozen(np.asarray(getattr(self, name), dtype=np.intp)))
