"""Seeded synthetic EEG with class-dependent regional band amplitudes.

Each trial is a sum of on-grid sinusoids (one per band) whose amplitude at
an electrode is a weighted sum of Gaussian region masks on the scalp. Subjects
differ by a scalar gain and a per-electrode jitter of the positions used
to evaluate the masks; trials differ by a log-normal amplitude jitter and
white noise.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from .data import BAND_ORDER, N_CLASSES, ElectrodeMontage, TrialSet

# (colatitude, azimuth) in radians; azimuth 0 points to +x (right), pi/2 to +y (nose).
REGION_CENTERS = {
    "frontal": (0.9, np.pi / 2),
    "central": (0.0, 0.0),
    "parietal": (0.9, -np.pi / 2),
    "left_temporal": (1.2, np.pi),
    "right_temporal": (1.2, 0.0),
    "occipital": (1.35, -np.pi / 2),
}
REGION_WIDTH = 0.45
DEFAULT_FREQUENCIES = (6.0, 10.0, 20.0)

_DATA_DIR = Path(__file__).resolve().parent.parent / "data"
DEFAULT_CONFIG_PATH = _DATA_DIR / "default_synth.cfg"


@dataclass(frozen=True)
class ClassProfiles:
    """Amplitudes indexed (class, segment, band, region).

    ``segment`` splits each trial into equal-length pieces; a single
    segment gives stationary class signals.
    """

    regions: tuple[str, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=np.float64)
        if a.ndim != 4 or a.shape[0] != N_CLASSES or a.shape[2] != len(BAND_ORDER) or a.shape[3] != len(self.regions):
            raise ConfigError(f"class profile array has shape {a.shape}")
        unknown = [r for r in self.regions if r != "global" and r not in REGION_CENTERS]
        if unknown:
            raise ConfigError(f"unknown regions {unknown}; known: {sorted(REGION_CENTERS)} and 'global'")
        if np.any(a < 0) or not np.all(np.isfinite(a)):
            raise ConfigError("class amplitudes must be finite and non-negative")
        object.__setattr__(self, "regions", tuple(self.regions))
        object.__setattr__(self, "amplitudes", a)

    @property
    def n_segments(self) -> int:
        return self.amplitudes.shape[1]


def parse_class_profiles(text: str) -> ClassProfiles:
    """Parse ``class,[segment,]band,<region>...`` CSV rows."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise ConfigError("empty class profile file")
    header = [h.strip() for h in rows[0]]
    has_segment = len(header) > 1 and header[1] == "segment"
    lead = 3 if has_segment else 2
    if header[0] != "class" or header[lead - 1] != "band" or len(header) <= lead:
        raise ConfigError("class profile header must be 'class,[segment,]band,<regions...>'")
    regions = tuple(header[lead:])
    entries = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ConfigError(f"class profiles line {lineno}: expected {len(header)} fields")
        try:
            cls = int(row[0])
            seg = int(row[1]) if has_segment else 0
            values = [float(v) for v in row[lead:]]
        except ValueError:
            raise ConfigError(f"class profiles line {lineno}: malformed number") from None
        band = row[lead - 1].strip()
        if band not in BAND_ORDER:
            raise ConfigError(f"class profiles line {lineno}: unknown band {band!r}")
        if not 0 <= cls < N_CLASSES or seg < 0:
            raise ConfigError(f"class profiles line {lineno}: class/segment out of range")
        entries[(cls, seg, BAND_ORDER.index(band))] = values
    n_seg = 1 + max(k[1] for k in entries)
    amps = np.zeros((N_CLASSES, n_seg, len(BAND_ORDER), len(regions)))
    for (c, s, b), values in entries.items():
        amps[c, s, b] = values
    return ClassProfiles(regions, amps)


def format_class_profiles(profiles: ClassProfiles) -> str:
    lines = ["class,segment,band," + ",".join(profiles.regions)]
    a = profiles.amplitudes
    for c in range(a.shape[0]):
        for s in range(a.shape[1]):
            for b, band in enumerate(BAND_ORDER):
                lines.append(f"{c},{s},{band}," + ",".join(repr(float(v)) for v in a[c, s, b]))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SynthConfig:
    class_profiles: ClassProfiles
    n_subjects: int = 13
    trials_per_subject: int = 200
    n_channels: int = 64
    fs: float = 500.0
    trial_seconds: float = 3.5
    noise_sigma: float = 2.0
    subject_gain_range: tuple[float, float] = (0.7, 1.3)
    position_jitter: float = 0.08
    trial_jitter: float = 0.15
    frequencies: tuple[float, float, float] = field(default=DEFAULT_FREQUENCIES)

    def validate(self) -> None:
        for name in ("n_subjects", "trials_per_subject", "n_channels"):
            if int(getattr(self, name)) <= 0:
                raise ConfigError(f"{name} must be positive")
        if not self.fs > 0 or not self.trial_seconds > 0:
            raise ConfigError("fs and trial_seconds must be positive")
        if self.n_samples < 2:
            raise ConfigError("trial shorter than two samples")
        if self.noise_sigma < 0 or self.position_jitter < 0 or self.trial_jitter < 0:
            raise ConfigError("noise and jitter levels must be non-negative")
        lo, hi = self.subject_gain_range
        if not 0 < lo <= hi:
            raise ConfigError("subject_gain_range must satisfy 0 < low <= high")
        if any(not 0 < f < self.fs / 2 for f in self.frequencies):
            raise ConfigError("band frequencies must lie below Nyquist")

    @property
    def n_samples(self) -> int:
        return int(round(self.fs * self.trial_seconds))

    def summary(self) -> dict:
        """JSON-ready resolved values (profiles rendered as their CSV text)."""
        out = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "class_profiles"}
        out["subject_gain_range"] = list(self.subject_gain_range)
        out["frequencies"] = list(self.frequencies)
        out["class_profiles"] = format_class_profiles(self.class_profiles)
        return out


_INT_KEYS = {"n_subjects", "trials_per_subject", "n_channels"}
_FLOAT_KEYS = {"fs", "trial_seconds", "noise_sigma", "position_jitter", "trial_jitter"}


def parse_synth_config(text: str, base_dir: str | os.PathLike = ".") -> SynthConfig:
    values: dict[str, object] = {}
    profiles = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key in _INT_KEYS:
                values[key] = int(value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            elif key in ("subject_gain_range", "frequencies"):
                values[key] = tuple(float(v) for v in value.split(","))
            elif key == "class_profiles":
                path = Path(base_dir) / value
                try:
                    profiles = parse_class_profiles(path.read_text())
                except OSError as exc:
                    raise ConfigError(f"config line {lineno}: cannot read class profiles {path}: {exc}") from None
            else:
                raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"config line {lineno}: bad value for {key}: {value!r}") from None
    if profiles is None:
        raise ConfigError("config lacks class_profiles")
    if len(values.get("subject_gain_range", (1, 1))) != 2 or len(values.get("frequencies", (1, 2, 3))) != 3:
        raise ConfigError("subject_gain_range needs 2 values, frequencies 3")
    cfg = SynthConfig(class_profiles=profiles, **values)
    cfg.validate()
    return cfg


def load_synth_config(path: str | os.PathLike) -> SynthConfig:
    path = Path(path)
    return parse_synth_config(path.read_text(), base_dir=path.parent)


def default_config(**overrides) -> SynthConfig:
    cfg = load_synth_config(DEFAULT_CONFIG_PATH)
    return replace(cfg, **overrides) if overrides else cfg


def hemisphere_montage(n_channels: int) -> ElectrodeMontage:
    """Spiral layout with equal-area spacing over the upper unit hemisphere."""
    i = np.arange(n_channels)
    z = 1.0 - (i + 0.5) / n_channels
    r = np.sqrt(1.0 - z * z)
    phi = i * np.pi * (3.0 - np.sqrt(5.0))
    pos = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    width = len(str(n_channels))
    return ElectrodeMontage(tuple(f"E{k + 1:0{width}d}" for k in i), pos)


def _region_weights(unit_pos: np.ndarray, regions: tuple[str, ...]) -> np.ndarray:
    w = np.empty((len(regions), unit_pos.shape[0]))
    for k, name in enumerate(regions):
        if name == "global":
            w[k] = 1.0
            continue
        colat, az = REGION_CENTERS[name]
        center = np.array([np.sin(colat) * np.cos(az), np.sin(colat) * np.sin(az), np.cos(colat)])
        ang = np.arccos(np.clip(unit_pos @ center, -1.0, 1.0))
        w[k] = np.exp(-0.5 * (ang / REGION_WIDTH) ** 2)
    return w


def _jitter_positions(unit_pos: np.ndarray, scale: float, rng: np.random.Generator) -> np.ndarray:
    step = rng.normal(0.0, scale, size=unit_pos.shape)
    step -= np.sum(step * unit_pos, axis=1, keepdims=True) * unit_pos  # tangent component only
    moved = unit_pos + step
    return moved / np.linalg.norm(moved, axis=1, keepdims=True)


def generate_synthetic(config: SynthConfig, seed: int) -> tuple[TrialSet, ElectrodeMontage]:
    config.validate()
    rng = np.random.default_rng(seed)
    montage = hemisphere_montage(config.n_channels)
    unit = montage.unit_positions()
    prof = config.class_profiles
    n_t = config.n_samples
    t = np.arange(n_t) / config.fs
    seg_of_sample = np.minimum((np.arange(n_t) * prof.n_segments) // n_t, prof.n_segments - 1)
    freqs = np.asarray(config.frequencies)
    n_reg = len(prof.regions)

    base = np.repeat(np.arange(N_CLASSES), -(-config.trials_per_subject // N_CLASSES))
    out = np.empty((config.n_subjects * config.trials_per_subject, config.n_channels, n_t), dtype=np.float32)
    labels = np.empty(out.shape[0], dtype=np.uint8)
    subjects = np.empty(out.shape[0], dtype=np.uint16)
    lo, hi = config.subject_gain_range
    k = 0
    for s in range(config.n_subjects):
        gain = rng.uniform(lo, hi)
        weights = _region_weights(_jitter_positions(unit, config.position_jitter, rng), prof.regions)
        order = rng.permutation(base[: config.trials_per_subject])
        for label in order:
            jit = np.exp(rng.normal(0.0, config.trial_jitter, size=(len(freqs), n_reg)))
            phases = rng.uniform(0.0, 2 * np.pi, size=len(freqs))
            # amplitude (segment, band, channel)
            amp = gain * np.einsum("sbr,br,re->sbe", prof.amplitudes[label], jit, weights)
            carriers = np.sin(2 * np.pi * freqs[:, None] * t[None, :] + phases[:, None])  # (band, time)
            x = np.einsum("bet,bt->et", amp[seg_of_sample].transpose(1, 2, 0), carriers)
            if config.noise_sigma > 0:
                x += rng.normal(0.0, config.noise_sigma, size=x.shape)
            out[k] = x
            labels[k] = label
            subjects[k] = s
            k += 1
    return TrialSet(config.fs, out, labels, subjects), montage
