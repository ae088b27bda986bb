"""Piecewise-cubic C1 Clough-Tocher interpolation on a Delaunay triangulation.

Vertex gradients come from the global scheme that minimizes an
approximate curvature energy over all triangulation edges. Each triangle
is split at its centroid into three cubic Bezier patches; the remaining
free ordinates are fixed by requiring the cross-boundary derivative to be
linear along every edge, measured toward the neighbouring centroid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import estimate_gradients_batch, hct_evaluate_batch
from .delaunay import Triangulation


class _Outside:
    __slots__ = ()

    def __repr__(self) -> str:
        return "OUTSIDE"

    def __bool__(self) -> bool:
        return False


OUTSIDE = _Outside()

GRADIENT_TOL = 1e-10
GRADIENT_MAXITER = 400


def edge_factors(tri: Triangulation) -> np.ndarray:
    """(m, 3) per-edge direction factors of the Clough-Tocher element.

    Edge k is opposite vertex k. Without a neighbour the derivative is
    taken toward the triangle's own centroid, giving -1/2.
    """
    g = np.full(tri.simplices.shape, -0.5)
    cent = tri.points[tri.simplices].mean(axis=1)
    for t in range(len(tri.simplices)):
        for k in range(3):
            nb = tri.neighbors[t, k]
            if nb < 0:
                continue
            c = tri.barycentric(cent[nb], t)
            if k == 0:
                g[t, k] = (2 * c[2] + c[1] - 1) / (2 - 3 * c[2] - 3 * c[1])
            elif k == 1:
                g[t, k] = (2 * c[0] + c[2] - 1) / (2 - 3 * c[0] - 3 * c[2])
            else:
                g[t, k] = (2 * c[1] + c[0] - 1) / (2 - 3 * c[1] - 3 * c[0])
    return g


@dataclass(frozen=True)
class CtGeometry:
    """Value-independent precomputation shared by all fits on one triangulation."""

    tri: Triangulation
    gfac: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray

    @classmethod
    def from_triangulation(cls, tri: Triangulation) -> "CtGeometry":
        indptr, indices = tri.vertex_neighbors()
        return cls(tri, edge_factors(tri), indptr, indices)

    def locate(self, q) -> tuple[np.ndarray, np.ndarray]:
        q = np.asarray(q, dtype=np.float64).reshape(-1, 2)
        simplex = self.tri.find_simplex(q)
        bary = self.tri.barycentric(q, np.maximum(simplex, 0))
        return simplex, bary

    def gradients(self, values, tol=GRADIENT_TOL, maxiter=GRADIENT_MAXITER):
        """values (n, B) -> gradients (n, 2, B)."""
        return estimate_gradients_batch(self.tri.points, self.indptr, self.indices, values, tol, maxiter)

    def evaluate(self, simplex, bary, values, grads) -> np.ndarray:
        return hct_evaluate_batch(self.tri.points, self.tri.simplices, self.gfac, simplex, bary, values, grads)


@dataclass(frozen=True)
class CtInterpolant:
    geometry: CtGeometry
    values: np.ndarray  # (n,)
    gradients: np.ndarray  # (n, 2)
    sweeps: int

    @property
    def tri(self) -> Triangulation:
        return self.geometry.tri

    def __call__(self, q, simplex=None) -> np.ndarray:
        """Vectorized evaluation at (..., 2) queries; NaN outside the hull.

        ``simplex`` forces the patch used (for checking continuity across edges).
        """
        q = np.asarray(q, dtype=np.float64)
        shape = q.shape[:-1]
        flat = q.reshape(-1, 2)
        if simplex is None:
            s, b = self.geometry.locate(flat)
        else:
            s = np.broadcast_to(np.asarray(simplex, dtype=np.int64), flat.shape[:1]).copy()
            b = self.tri.barycentric(flat, s)
        out = self.geometry.evaluate(s, b, self.values[:, None], self.gradients[:, :, None])
        return out[:, 0].reshape(shape)


def ct_fit(tri: Triangulation | CtGeometry, values, tol=GRADIENT_TOL, maxiter=GRADIENT_MAXITER) -> CtInterpolant:
    geo = tri if isinstance(tri, CtGeometry) else CtGeometry.from_triangulation(tri)
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (geo.tri.n_points,):
        raise ValueError(f"expected {geo.tri.n_points} values, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError("values must be finite")
    grads, sweeps = geo.gradients(values[:, None], tol, maxiter)
    return CtInterpolant(geo, values, grads[:, :, 0], int(sweeps[0]))


def ct_eval(interp: CtInterpolant, query, simplex: int | None = None):
    """Scalar evaluation returning ``OUTSIDE`` beyond the convex hull."""
    v = float(interp(np.asarray(query, dtype=np.float64)[None, :], simplex)[0])
    return OUTSIDE if np.isnan(v) else v
