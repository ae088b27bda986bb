"""Electrode projections from the scalp sphere onto the plane."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..ingest.data import ElectrodeMontage


@dataclass(frozen=True)
class ProjectedMontage:
    points: np.ndarray  # (n, 2)
    names: tuple[str, ...] = ()
    kind: str = "aep"

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or not np.all(np.isfinite(pts)):
            raise ValueError("projected points must be a finite (n, 2) array")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]


def _unit(positions) -> np.ndarray:
    p = np.asarray(positions, dtype=np.float64)
    norm = np.linalg.norm(p, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise ValueError("zero-length electrode position")
    return p / norm


def aep_points(positions) -> np.ndarray:
    """Azimuthal equidistant projection about the top of the head (0, 0, 1).

    The radius of each projected point is its great-circle angle from the
    tangent point; the azimuth is kept. The antipode (0, 0, -1) is singular.
    """
    u = _unit(positions)
    x, y, z = u[..., 0], u[..., 1], u[..., 2]
    rho = np.hypot(x, y)
    if np.any((rho == 0) & (z < 0)):
        raise ValueError("electrode at the antipode of the tangent point; projection is singular")
    colat = np.arctan2(rho, z)  # better conditioned than arccos(z) near the poles
    az = np.arctan2(y, x)
    return np.stack([colat * np.cos(az), colat * np.sin(az)], axis=-1)


def orthographic_points(positions) -> np.ndarray:
    return _unit(positions)[..., :2].copy()


def project_aep(montage: ElectrodeMontage) -> ProjectedMontage:
    return ProjectedMontage(aep_points(montage.positions), montage.names, "aep")


def project_orthographic(montage: ElectrodeMontage) -> ProjectedMontage:
    return ProjectedMontage(orthographic_points(montage.positions), montage.names, "ortho")


PROJECTIONS = {"aep": project_aep, "ortho": project_orthographic}


def project(montage: ElectrodeMontage, kind: str = "aep") -> ProjectedMontage:
    try:
        return PROJECTIONS[kind](montage)
    except KeyError:
        raise ValueError(f"unknown projection {kind!r}; choose from {sorted(PROJECTIONS)}") from None
