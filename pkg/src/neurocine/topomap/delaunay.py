"""Delaunay triangulation of a small planar point set.

A lexicographic sweep produces an initial triangulation, then Lawson edge
flips make every edge locally Delaunay. Cocircular quadrilaterals take the
diagonal incident to the lowest vertex index, which makes the result
independent of floating-point accidents and of insertion order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .predicates import incircle, orient2d


@dataclass(frozen=True)
class Triangulation:
    points: np.ndarray  # (n, 2)
    simplices: np.ndarray  # (m, 3) counter-clockwise vertex indices
    neighbors: np.ndarray  # (m, 3) triangle opposite vertex k, -1 on the hull
    hull: np.ndarray  # counter-clockwise boundary vertices

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    def transforms(self) -> np.ndarray:
        """(m, 3, 2): rows 0-1 invert the edge matrix, row 2 is the reference vertex."""
        p = self.points[self.simplices]
        t = np.empty((len(self.simplices), 3, 2))
        m = np.stack([p[:, 0] - p[:, 2], p[:, 1] - p[:, 2]], axis=2)  # columns are edge vectors
        t[:, :2] = np.linalg.inv(m)
        t[:, 2] = p[:, 2]
        return t

    def barycentric(self, q, simplex) -> np.ndarray:
        """Barycentric coordinates of points ``q`` (..., 2) in given simplices."""
        q = np.asarray(q, dtype=np.float64)
        t = self.transforms()[np.asarray(simplex)]
        d = q - t[..., 2, :]
        b01 = np.einsum("...ij,...j->...i", t[..., :2, :], d)
        return np.concatenate([b01, 1.0 - b01.sum(axis=-1, keepdims=True)], axis=-1)

    def find_simplex(self, q, eps: float = 1e-12) -> np.ndarray:
        """Lowest-index triangle containing each query, -1 outside the hull."""
        q = np.asarray(q, dtype=np.float64)
        flat = q.reshape(-1, 2)
        t = self.transforms()
        d = flat[:, None, :] - t[None, :, 2, :]
        b01 = np.einsum("tij,qtj->qti", t[:, :2, :], d)
        b2 = 1.0 - b01.sum(axis=-1)
        inside = (b01 >= -eps).all(axis=-1) & (b2 >= -eps)
        found = np.where(inside.any(axis=1), inside.argmax(axis=1), -1)
        return found.reshape(q.shape[:-1])

    def vertex_neighbors(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR adjacency (indptr, indices) of the triangulation graph, sorted."""
        nbrs = [set() for _ in range(self.n_points)]
        for a, b, c in self.simplices:
            nbrs[a].update((b, c))
            nbrs[b].update((a, c))
            nbrs[c].update((a, b))
        indptr = np.zeros(self.n_points + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(s) for s in nbrs])
        indices = np.array([v for s in nbrs for v in sorted(s)], dtype=np.int64)
        return indptr, indices

    def edges(self) -> np.ndarray:
        e = np.sort(self.simplices[:, [[0, 1], [1, 2], [2, 0]]].reshape(-1, 2), axis=1)
        return np.unique(e, axis=0)


def _initial_triangles(pts: list, order: np.ndarray) -> tuple[list[list[int]], list[int]]:
    s = [int(i) for i in order]
    k = 2
    while k < len(s) and orient2d(pts[s[0]], pts[s[1]], pts[s[k]]) == 0:
        k += 1
    if k == len(s):
        raise ValueError("all points are collinear")
    apex = s[k]
    chain = s[:k]
    tris = []
    for i in range(k - 1):
        a, b = chain[i], chain[i + 1]
        tris.append([a, b, apex] if orient2d(pts[a], pts[b], pts[apex]) > 0 else [b, a, apex])
    hull = chain + [apex] if orient2d(pts[chain[0]], pts[chain[-1]], pts[apex]) > 0 else chain[::-1] + [apex]
    for p in s[k + 1:]:
        h = len(hull)
        visible = [orient2d(pts[hull[i]], pts[hull[(i + 1) % h]], pts[p]) < 0 for i in range(h)]
        # rotate so the visible run starts at index 0 and does not wrap
        start = next(i for i in range(h) if visible[i] and not visible[i - 1])
        hull = hull[start:] + hull[:start]
        visible = visible[start:] + visible[:start]
        run = 0
        while run < h and visible[run]:
            run += 1
        for i in range(run):
            a, b = hull[i], hull[(i + 1) % h]
            tris.append([b, a, p])
        hull = [hull[0], p] + hull[run:] if run < h else [hull[0], p]
    return tris, hull


def _lawson_flip(pts: list, tris: list[list[int]]) -> None:
    owner: dict[tuple[int, int], int] = {}
    for t, (a, b, c) in enumerate(tris):
        owner[(a, b)] = t
        owner[(b, c)] = t
        owner[(c, a)] = t

    def opposite(t: int, u: int, v: int) -> int:
        return next(w for w in tris[t] if w != u and w != v)

    stack = [e for e in owner if e[0] < e[1] and (e[1], e[0]) in owner]
    while stack:
        u, v = stack.pop()
        t1 = owner.get((u, v))
        t2 = owner.get((v, u))
        if t1 is None or t2 is None:
            continue
        w1 = opposite(t1, u, v)
        w2 = opposite(t2, v, u)
        a, b, c = tris[t1]
        s = incircle(pts[a], pts[b], pts[c], pts[w2])
        if s < 0 or (s == 0 and min(w1, w2) > min(u, v)):
            continue
        for e in ((u, v), (v, w1), (w1, u), (v, u), (u, w2), (w2, v)):
            owner.pop(e, None)
        tris[t1] = [u, w2, w1]
        tris[t2] = [w2, v, w1]
        for t in (t1, t2):
            a, b, c = tris[t]
            owner[(a, b)] = t
            owner[(b, c)] = t
            owner[(c, a)] = t
        stack.extend([(u, w2), (w2, v), (v, w1), (w1, u)])


def delaunay(points) -> Triangulation:
    pts = np.ascontiguousarray(np.asarray(getattr(points, "points", points), dtype=np.float64))
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected (n, 2) points, got {pts.shape}")
    if pts.shape[0] < 3:
        raise ValueError("need at least 3 points")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    order = np.lexsort((np.arange(len(pts)), pts[:, 1], pts[:, 0]))
    srt = pts[order]
    dup = np.all(srt[1:] == srt[:-1], axis=1)
    if dup.any():
        i = int(np.argmax(dup))
        raise ValueError(f"duplicate points {order[i]} and {order[i + 1]}")
    coords = [(float(x), float(y)) for x, y in pts]
    tris, hull = _initial_triangles(coords, order)
    _lawson_flip(coords, tris)

    canon = []
    for tri in tris:
        r = tri.index(min(tri))
        canon.append(tri[r:] + tri[:r])
    simplices = np.array(sorted(canon), dtype=np.int64)
    where = {}
    for t, (a, b, c) in enumerate(simplices):
        where[(a, b)] = t
        where[(b, c)] = t
        where[(c, a)] = t
    neighbors = np.full_like(simplices, -1)
    for t, tri in enumerate(simplices):
        for k in range(3):
            u, v = tri[(k + 1) % 3], tri[(k + 2) % 3]
            neighbors[t, k] = where.get((v, u), -1)
    r = hull.index(min(hull))
    hull_arr = np.array(hull[r:] + hull[:r], dtype=np.int64)
    pts.flags.writeable = False
    return Triangulation(pts, simplices, neighbors, hull_arr)
