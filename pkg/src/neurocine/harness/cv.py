"""Leave-subject-out cross-validation."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .._backend import max_workers
from ..architectures import NetworkSpec, build
from ..ingest.data import ElectrodeMontage, FrameSet, TrialSet
from ..ingest.split import split_leave_subject_out
from ..spectral.bands import trial_band_powers
from ..topomap.projection import project
from ..topomap.render import Renderer, Standardizer, render_frames
from .metrics import MetricsLog
from .training import TrainConfig, TrainHistory, evaluate, train


@dataclass
class FoldReport:
    fold: int
    held_out_subject: int
    error_pct: float
    confusion: np.ndarray
    history: TrainHistory
    n_test: int

    def to_dict(self) -> dict:
        return {"fold": self.fold, "held_out_subject": self.held_out_subject, "error_pct": self.error_pct,
                "confusion": self.confusion.tolist(), "n_test": self.n_test, "history": self.history.to_dict()}


def fold_seed(master: int, subject: int) -> int:
    return int(np.random.SeedSequence([int(master), int(subject)]).generate_state(1)[0])


@dataclass(frozen=True)
class CachedBands:
    """Raw per-window band powers for every trial; standardization happens per fold."""
    band_powers: np.ndarray  # (n_trials, n_windows, n_electrodes, n_bands)
    labels: np.ndarray
    subjects: np.ndarray

    @classmethod
    def from_trials(cls, trials: TrialSet, window_seconds: float | None) -> "CachedBands":
        w = trials.n_samples / trials.sampling_rate if window_seconds is None else window_seconds
        bp = trial_band_powers(trials.samples, trials.sampling_rate, w)
        return cls(bp, trials.labels, trials.subjects)

    def subset(self, idx) -> "CachedBands":
        return CachedBands(self.band_powers[idx], self.labels[idx], self.subjects[idx])


def fold_frames(bands: CachedBands, renderer: Renderer, idx_train, parts) -> list[FrameSet]:
    std = Standardizer.fit(bands.band_powers[idx_train])
    return [render_frames(bands.band_powers[i], bands.labels[i], bands.subjects[i], renderer, std) for i in parts]


def run_fold(fold: int, subject: int, bands: CachedBands, renderer: Renderer, spec: NetworkSpec,
             cfg: TrainConfig, master_seed: int, log: MetricsLog | None = None):
    seed = fold_seed(master_seed, subject)
    plan = split_leave_subject_out(bands.subjects, subject, seed)
    tr, va, te = fold_frames(bands, renderer, plan.train, (plan.train, plan.validation, plan.test))
    params, hist = train(spec, tr, va, replace(cfg, seed=seed), log.callback(fold) if log else None)
    ev = evaluate(params, spec, te)
    return FoldReport(fold, int(subject), ev.error_pct, ev.confusion, hist, len(te)), params


def run_cv(trials: TrialSet | CachedBands, montage: ElectrodeMontage | np.ndarray, variant: str | NetworkSpec,
           cfg: TrainConfig, master_seed: int | None = None, projection: str = "aep",
           window_seconds: float | None = 0.5, subjects=None, workers: int | None = None,
           log: MetricsLog | None = None) -> list[FoldReport]:
    """One fold per subject (or per entry of ``subjects``)."""
    spec = build(variant) if isinstance(variant, str) else variant
    master = cfg.seed if master_seed is None else master_seed
    bands = trials if isinstance(trials, CachedBands) else CachedBands.from_trials(trials, window_seconds)
    all_subjects = np.unique(bands.subjects)
    if len(all_subjects) < 2:
        raise ValueError("cross-validation needs at least two subjects")
    chosen = all_subjects if subjects is None else np.asarray(subjects)
    renderer = Renderer(montage if isinstance(montage, np.ndarray) else project(montage, projection))

    def job(k):
        return run_fold(k, int(chosen[k]), bands, renderer, spec, cfg, master, log)[0]

    n_workers = min(workers or max_workers(), len(chosen))
    if n_workers <= 1:
        return [job(k) for k in range(len(chosen))]
    with ThreadPoolExecutor(n_workers) as ex:
        return list(ex.map(job, range(len(chosen))))


def mean_error(reports) -> float:
    return float(np.mean([r.error_pct for r in reports])) if reports else float("nan")
