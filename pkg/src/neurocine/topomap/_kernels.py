"""Clough-Tocher hot loops: numba kernels and numpy fallbacks.

Both operate on batches: ``values`` is (n_points, B) and gradients are
(n_points, 2, B), so many band maps over one triangulation share a call.
"""

from __future__ import annotations

import numpy as np

from .._backend import njit, use_numba


@njit
def _gradients_nb(points, indptr, indices, values, tol, maxiter, grads, sweeps):
    n = points.shape[0]
    nb = values.shape[1]
    for col in range(nb):
        for it in range(maxiter):
            err = 0.0
            for i in range(n):
                q00 = 0.0
                q01 = 0.0
                q11 = 0.0
                s0 = 0.0
                s1 = 0.0
                for jj in range(indptr[i], indptr[i + 1]):
                    j = indices[jj]
                    ex = points[j, 0] - points[i, 0]
                    ey = points[j, 1] - points[i, 1]
                    length = np.sqrt(ex * ex + ey * ey)
                    l3 = length * length * length
                    df2 = -ex * grads[j, 0, col] - ey * grads[j, 1, col]
                    q00 += 4.0 * ex * ex / l3
                    q01 += 4.0 * ex * ey / l3
                    q11 += 4.0 * ey * ey / l3
                    rhs = 6.0 * (values[i, col] - values[j, col]) - 2.0 * df2
                    s0 += rhs * ex / l3
                    s1 += rhs * ey / l3
                det = q00 * q11 - q01 * q01
                r0 = (q11 * s0 - q01 * s1) / det
                r1 = (-q01 * s0 + q00 * s1) / det
                change = max(abs(grads[i, 0, col] + r0), abs(grads[i, 1, col] + r1))
                grads[i, 0, col] = -r0
                grads[i, 1, col] = -r1
                if change > err:
                    err = change
            sweeps[col] = it + 1
            if err < tol:
                break


def _gradients_np(points, indptr, indices, values, tol, maxiter, grads, sweeps):
    n = points.shape[0]
    geo = []
    for i in range(n):
        nbr = indices[indptr[i]:indptr[i + 1]]
        e = points[nbr] - points[i]
        l3 = np.sqrt((e * e).sum(axis=1)) ** 3
        q00 = np.sum(4.0 * e[:, 0] * e[:, 0] / l3)
        q01 = np.sum(4.0 * e[:, 0] * e[:, 1] / l3)
        q11 = np.sum(4.0 * e[:, 1] * e[:, 1] / l3)
        geo.append((nbr, e[:, 0], e[:, 1], l3, q00, q01, q11, q00 * q11 - q01 * q01))
    active = np.arange(values.shape[1])
    for it in range(maxiter):
        if active.size == 0:
            break
        g = grads[:, :, active]
        v = values[:, active]
        err = np.zeros(active.size)
        for i in range(n):
            nbr, ex, ey, l3, q00, q01, q11, det = geo[i]
            df2 = -(ex[:, None] * g[nbr, 0]) - ey[:, None] * g[nbr, 1]
            rhs = 6.0 * (v[i][None, :] - v[nbr]) - 2.0 * df2
            s0 = np.sum(rhs * (ex / l3)[:, None], axis=0)
            s1 = np.sum(rhs * (ey / l3)[:, None], axis=0)
            r0 = (q11 * s0 - q01 * s1) / det
            r1 = (-q01 * s0 + q00 * s1) / det
            err = np.maximum(err, np.maximum(np.abs(g[i, 0] + r0), np.abs(g[i, 1] + r1)))
            g[i, 0] = -r0
            g[i, 1] = -r1
        grads[:, :, active] = g
        sweeps[active] = it + 1
        active = active[err >= tol]


def estimate_gradients_batch(points, indptr, indices, values, tol=1e-10, maxiter=400):
    """Gauss-Seidel sweeps minimizing the global curvature functional.

    Returns (gradients (n, 2, B), sweeps used per column).
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    grads = np.zeros((values.shape[0], 2, values.shape[1]))
    sweeps = np.zeros(values.shape[1], dtype=np.int64)
    fn = _gradients_nb if use_numba() else _gradients_np
    fn(np.ascontiguousarray(points, dtype=np.float64), indptr, indices, values, float(tol), int(maxiter), grads, sweeps)
    return grads, sweeps


@njit
def _hct_nb(points, simplices, gfac, qtri, qbary, f, df, out):
    nq = qtri.shape[0]
    nb = f.shape[1]
    for q in range(nq):
        t = qtri[q]
        if t < 0:
            for col in range(nb):
                out[q, col] = np.nan
            continue
        v0 = simplices[t, 0]
        v1 = simplices[t, 1]
        v2 = simplices[t, 2]
        e12x = points[v1, 0] - points[v0, 0]
        e12y = points[v1, 1] - points[v0, 1]
        e23x = points[v2, 0] - points[v1, 0]
        e23y = points[v2, 1] - points[v1, 1]
        e31x = points[v0, 0] - points[v2, 0]
        e31y = points[v0, 1] - points[v2, 1]
        g0 = gfac[t, 0]
        g1 = gfac[t, 1]
        g2 = gfac[t, 2]
        b0 = qbary[q, 0]
        b1 = qbary[q, 1]
        b2 = qbary[q, 2]
        mn = min(b0, min(b1, b2))
        b1_ = b0 - mn
        b2_ = b1 - mn
        b3_ = b2 - mn
        b4_ = 3.0 * mn
        for col in range(nb):
            f1 = f[v0, col]
            f2 = f[v1, col]
            f3 = f[v2, col]
            df12 = df[v0, 0, col] * e12x + df[v0, 1, col] * e12y
            df21 = -(df[v1, 0, col] * e12x + df[v1, 1, col] * e12y)
            df23 = df[v1, 0, col] * e23x + df[v1, 1, col] * e23y
            df32 = -(df[v2, 0, col] * e23x + df[v2, 1, col] * e23y)
            df31 = df[v2, 0, col] * e31x + df[v2, 1, col] * e31y
            df13 = -(df[v0, 0, col] * e31x + df[v0, 1, col] * e31y)
            c3000 = f1
            c2100 = (df12 + 3.0 * c3000) / 3.0
            c2010 = (df13 + 3.0 * c3000) / 3.0
            c0300 = f2
            c1200 = (df21 + 3.0 * c0300) / 3.0
            c0210 = (df23 + 3.0 * c0300) / 3.0
            c0030 = f3
            c1020 = (df31 + 3.0 * c0030) / 3.0
            c0120 = (df32 + 3.0 * c0030) / 3.0
            c2001 = (c2100 + c2010 + c3000) / 3.0
            c0201 = (c1200 + c0300 + c0210) / 3.0
            c0021 = (c1020 + c0120 + c0030) / 3.0
            c0111 = (g0 * (-c0300 + 3.0 * c0210 - 3.0 * c0120 + c0030)
                     + (-c0300 + 2.0 * c0210 - c0120 + c0021 + c0201)) / 2.0
            c1011 = (g1 * (-c0030 + 3.0 * c1020 - 3.0 * c2010 + c3000)
                     + (-c0030 + 2.0 * c1020 - c2010 + c2001 + c0021)) / 2.0
            c1101 = (g2 * (-c3000 + 3.0 * c2100 - 3.0 * c1200 + c0300)
                     + (-c3000 + 2.0 * c2100 - c1200 + c2001 + c0201)) / 2.0
            c1002 = (c1101 + c1011 + c2001) / 3.0
            c0102 = (c1101 + c0111 + c0201) / 3.0
            c0012 = (c1011 + c0111 + c0021) / 3.0
            c0003 = (c1002 + c0102 + c0012) / 3.0
            out[q, col] = (
                b1_ ** 3 * c3000 + 3.0 * b1_ ** 2 * b2_ * c2100 + 3.0 * b1_ ** 2 * b3_ * c2010
                + 3.0 * b1_ ** 2 * b4_ * c2001 + 3.0 * b1_ * b2_ ** 2 * c1200
                + 6.0 * b1_ * b2_ * b4_ * c1101 + 3.0 * b1_ * b3_ ** 2 * c1020
                + 6.0 * b1_ * b3_ * b4_ * c1011 + 3.0 * b1_ * b4_ ** 2 * c1002
                + b2_ ** 3 * c0300 + 3.0 * b2_ ** 2 * b3_ * c0210 + 3.0 * b2_ ** 2 * b4_ * c0201
                + 3.0 * b2_ * b3_ ** 2 * c0120 + 6.0 * b2_ * b3_ * b4_ * c0111
                + 3.0 * b2_ * b4_ ** 2 * c0102 + b3_ ** 3 * c0030 + 3.0 * b3_ ** 2 * b4_ * c0021
                + 3.0 * b3_ * b4_ ** 2 * c0012 + b4_ ** 3 * c0003
            )


def _hct_np(points, simplices, gfac, qtri, qbary, f, df, out):
    inside = qtri >= 0
    t = qtri[inside]
    if t.size == 0:
        out[:] = np.nan
        return
    v = simplices[t]  # (Q, 3)
    p = points[v]  # (Q, 3, 2)
    e12 = (p[:, 1] - p[:, 0])[:, :, None]
    e23 = (p[:, 2] - p[:, 1])[:, :, None]
    e31 = (p[:, 0] - p[:, 2])[:, :, None]
    d0, d1, d2 = df[v[:, 0]], df[v[:, 1]], df[v[:, 2]]  # (Q, 2, B)
    f1, f2, f3 = f[v[:, 0]], f[v[:, 1]], f[v[:, 2]]
    df12 = (d0 * e12).sum(axis=1)
    df21 = -(d1 * e12).sum(axis=1)
    df23 = (d1 * e23).sum(axis=1)
    df32 = -(d2 * e23).sum(axis=1)
    df31 = (d2 * e31).sum(axis=1)
    df13 = -(d0 * e31).sum(axis=1)
    g0, g1, g2 = (gfac[t, k][:, None] for k in range(3))
    c3000 = f1
    c2100 = (df12 + 3.0 * c3000) / 3.0
    c2010 = (df13 + 3.0 * c3000) / 3.0
    c0300 = f2
    c1200 = (df21 + 3.0 * c0300) / 3.0
    c0210 = (df23 + 3.0 * c0300) / 3.0
    c0030 = f3
    c1020 = (df31 + 3.0 * c0030) / 3.0
    c0120 = (df32 + 3.0 * c0030) / 3.0
    c2001 = (c2100 + c2010 + c3000) / 3.0
    c0201 = (c1200 + c0300 + c0210) / 3.0
    c0021 = (c1020 + c0120 + c0030) / 3.0
    c0111 = (g0 * (-c0300 + 3.0 * c0210 - 3.0 * c0120 + c0030)
             + (-c0300 + 2.0 * c0210 - c0120 + c0021 + c0201)) / 2.0
    c1011 = (g1 * (-c0030 + 3.0 * c1020 - 3.0 * c2010 + c3000)
             + (-c0030 + 2.0 * c1020 - c2010 + c2001 + c0021)) / 2.0
    c1101 = (g2 * (-c3000 + 3.0 * c2100 - 3.0 * c1200 + c0300)
             + (-c3000 + 2.0 * c2100 - c1200 + c2001 + c0201)) / 2.0
    c1002 = (c1101 + c1011 + c2001) / 3.0
    c0102 = (c1101 + c0111 + c0201) / 3.0
    c0012 = (c1011 + c0111 + c0021) / 3.0
    c0003 = (c1002 + c0102 + c0012) / 3.0
    b = qbary[inside]
    mn = b.min(axis=1)
    b1, b2, b3 = ((b[:, k] - mn)[:, None] for k in range(3))
    b4 = (3.0 * mn)[:, None]
    val = (
        b1 ** 3 * c3000 + 3.0 * b1 ** 2 * b2 * c2100 + 3.0 * b1 ** 2 * b3 * c2010
        + 3.0 * b1 ** 2 * b4 * c2001 + 3.0 * b1 * b2 ** 2 * c1200
        + 6.0 * b1 * b2 * b4 * c1101 + 3.0 * b1 * b3 ** 2 * c1020
        + 6.0 * b1 * b3 * b4 * c1011 + 3.0 * b1 * b4 ** 2 * c1002
        + b2 ** 3 * c0300 + 3.0 * b2 ** 2 * b3 * c0210 + 3.0 * b2 ** 2 * b4 * c0201
        + 3.0 * b2 * b3 ** 2 * c0120 + 6.0 * b2 * b3 * b4 * c0111
        + 3.0 * b2 * b4 ** 2 * c0102 + b3 ** 3 * c0030 + 3.0 * b3 ** 2 * b4 * c0021
        + 3.0 * b3 * b4 ** 2 * c0012 + b4 ** 3 * c0003
    )
    out[inside] = val
    out[~inside] = np.nan


def hct_evaluate_batch(points, simplices, gfac, qtri, qbary, f, df) -> np.ndarray:
    """Evaluate Clough-Tocher patches at located queries; NaN where qtri < 0."""
    f = np.ascontiguousarray(f, dtype=np.float64)
    df = np.ascontiguousarray(df, dtype=np.float64)
    out = np.empty((qtri.shape[0], f.shape[1]))
    fn = _hct_nb if use_numba() else _hct_np
    fn(np.ascontiguousarray(points, dtype=np.float64), np.ascontiguousarray(simplices, dtype=np.int64),
       np.ascontiguousarray(gfac, dtype=np.float64), np.ascontiguousarray(qtri, dtype=np.int64),
       np.ascontiguousarray(qbary, dtype=np.float64), f, df, out)
    return out
