"""Band powers -> standardized 3-channel topographic frames."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..ingest.data import FrameSequence, FrameSet, Trial, TrialSet
from ..spectral.bands import DEFAULT_BANDS, trial_band_powers
from .clough_tocher import CtGeometry
from .delaunay import delaunay
from .projection import ProjectedMontage

MESH_SIZE = 32
FILL_VALUE = 0.0


def mesh_coordinates(points: np.ndarray, size: int = MESH_SIZE) -> tuple[np.ndarray, np.ndarray]:
    """Pixel-centre coordinates spanning the exact bounding box.

    Row 0 is the largest y (front of the head when +y points to the nose);
    column 0 is the smallest x.
    """
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    if np.any(hi - lo <= 0):
        raise ValueError("degenerate bounding box: projected points have zero width or height")
    xs = np.linspace(lo[0], hi[0], size)
    ys = np.linspace(hi[1], lo[1], size)
    gx, gy = np.meshgrid(xs, ys)
    return gx, gy


class Renderer:
    """Interpolates per-electrode band values onto a square mesh.

    The triangulation, pixel location and element factors depend only on
    the projected montage, so they are computed once and reused for every
    frame.
    """

    def __init__(self, projected: ProjectedMontage | np.ndarray, size: int = MESH_SIZE, fill: float = FILL_VALUE):
        pts = np.asarray(getattr(projected, "points", projected), dtype=np.float64)
        self.size = size
        self.fill = fill
        gx, gy = mesh_coordinates(pts, size)
        self.geometry = CtGeometry.from_triangulation(delaunay(pts))
        self.pixels = np.column_stack([gx.ravel(), gy.ravel()])
        self.simplex, self.bary = self.geometry.locate(self.pixels)
        self.inside = (self.simplex >= 0).reshape(size, size)

    @property
    def n_points(self) -> int:
        return self.geometry.tri.n_points

    def render_maps(self, values: np.ndarray) -> np.ndarray:
        """values (n_points, B) -> images (B, size, size)."""
        grads, _ = self.geometry.gradients(values)
        out = self.geometry.evaluate(self.simplex, self.bary, values, grads)
        out[np.isnan(out)] = self.fill
        return out.T.reshape(-1, self.size, self.size)

    def render(self, band_values: np.ndarray, chunk: int = 4096) -> np.ndarray:
        """(..., n_points, n_bands) -> (..., n_bands, size, size) in float64."""
        band_values = np.asarray(band_values, dtype=np.float64)
        if band_values.shape[-2] != self.n_points:
            raise ValueError(f"expected {self.n_points} electrodes, got {band_values.shape[-2]}")
        if not np.all(np.isfinite(band_values)):
            raise ValueError("band values must be finite")
        lead = band_values.shape[:-2]
        nb = band_values.shape[-1]
        cols = np.moveaxis(band_values.reshape(-1, self.n_points, nb), 1, 0).reshape(self.n_points, -1)
        imgs = np.empty((cols.shape[1], self.size, self.size))
        for s in range(0, cols.shape[1], chunk):
            imgs[s:s + chunk] = self.render_maps(cols[:, s:s + chunk])
        return imgs.reshape(lead + (nb, self.size, self.size))


def render_frame(band_values, projected: ProjectedMontage, size: int = MESH_SIZE) -> np.ndarray:
    """One (n_electrodes, 3) matrix -> (3, size, size) frame."""
    band_values = np.asarray(band_values, dtype=np.float64)
    if band_values.ndim != 2:
        raise ValueError("band_values must be (n_electrodes, n_bands)")
    return Renderer(projected, size).render(band_values)


@dataclass(frozen=True)
class Standardizer:
    """Per-(electrode, band) z-score fitted on training band powers."""

    mean: np.ndarray  # (n_electrodes, n_bands)
    std: np.ndarray

    @classmethod
    def fit(cls, band_powers: np.ndarray) -> "Standardizer":
        """band_powers: (..., n_electrodes, n_bands); all leading axes are pooled."""
        bp = np.asarray(band_powers, dtype=np.float64)
        flat = bp.reshape(-1, bp.shape[-2], bp.shape[-1])
        if flat.shape[0] == 0:
            raise ValueError("cannot fit a standardizer on zero samples")
        mean = flat.mean(axis=0)
        std = flat.std(axis=0)
        std = np.where(std > 0, std, 1.0)
        return cls(mean, std)

    @classmethod
    def identity(cls, n_electrodes: int, n_bands: int = 3) -> "Standardizer":
        return cls(np.zeros((n_electrodes, n_bands)), np.ones((n_electrodes, n_bands)))

    def transform(self, band_powers: np.ndarray) -> np.ndarray:
        return (np.asarray(band_powers, dtype=np.float64) - self.mean) / self.std


def make_movie(trial: Trial, renderer: Renderer, fs: float, window_seconds: float,
               standardizer: Standardizer, bands=DEFAULT_BANDS) -> FrameSequence:
    bp = trial_band_powers(np.asarray(trial.samples)[None], fs, window_seconds, bands)[0]
    frames = renderer.render(standardizer.transform(bp))
    return FrameSequence(frames.astype(np.float32), trial.label, trial.subject)


def render_frames(band_powers: np.ndarray, labels, subjects, renderer: Renderer,
                  standardizer: Standardizer) -> FrameSet:
    """Cached (trials, windows, electrodes, bands) powers -> FrameSet."""
    frames = renderer.render(standardizer.transform(band_powers)).astype(np.float32)
    return FrameSet(frames, labels, subjects)


def make_movies(trials: TrialSet, renderer: Renderer, window_seconds: float,
                standardizer: Standardizer | None = None, bands=DEFAULT_BANDS) -> FrameSet:
    bp = trial_band_powers(trials.samples, trials.sampling_rate, window_seconds, bands)
    if standardizer is None:
        standardizer = Standardizer.fit(bp)
    return render_frames(bp, trials.labels, trials.subjects, renderer, standardizer)
