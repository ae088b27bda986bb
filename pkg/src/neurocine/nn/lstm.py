"""LSTM layer with diagonal peephole connections.

Gates per step::

    i = sig(Wxi x + Whi h + wci * c_prev + bi)
    f = sig(Wxf x + Whf h + wcf * c_prev + bf)
    c = f * c_prev + i * tanh(Wxc x + Whc h + bc)
    o = sig(Wxo x + Who h + wco * c + bo)
    h = o * tanh(c)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError

GATES = ("i", "f", "c", "o")
PARAM_NAMES = (
    "W_xi", "W_xf", "W_xc", "W_xo",
    "W_hi", "W_hf", "W_hc", "W_ho",
    "w_ci", "w_cf", "w_co",
    "b_i", "b_f", "b_c", "b_o",
)


@dataclass(frozen=True)
class LstmState:
    h: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        if np.shape(self.h) != np.shape(self.c):
            raise ShapeError("LSTM hidden and cell vectors must have equal shape")

    @classmethod
    def zeros(cls, cells: int, batch: int | None = None, dtype=np.float64) -> "LstmState":
        shape = (cells,) if batch is None else (batch, cells)
        return cls(np.zeros(shape, dtype), np.zeros(shape, dtype))


def param_shapes(input_dim: int, cells: int) -> dict[str, tuple[int, ...]]:
    shapes = {}
    for g in GATES:
        shapes[f"W_x{g}"] = (cells, input_dim)
        shapes[f"W_h{g}"] = (cells, cells)
    for g in ("i", "f", "o"):
        shapes[f"w_c{g}"] = (cells,)
    for g in GATES:
        shapes[f"b_{g}"] = (cells,)
    return {k: shapes[k] for k in PARAM_NAMES}


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _check(params, d):
    cells = params["b_i"].shape[0]
    for name, shape in param_shapes(d, cells).items():
        if params[name].shape != shape:
            raise ShapeError(f"LSTM parameter {name} has shape {params[name].shape}, expected {shape}")
    return cells


def lstm_forward(x: np.ndarray, params: dict, state: LstmState | None = None):
    """x (N, T, d) -> hidden sequence (N, T, cells) and a cache for BPTT."""
    if x.ndim != 3:
        raise ShapeError(f"lstm expects (N, T, d), got {x.shape}")
    n, t, d = x.shape
    cells = _check(params, d)
    wx = np.concatenate([params[f"W_x{g}"] for g in GATES]).astype(x.dtype, copy=False)
    wh = np.concatenate([params[f"W_h{g}"] for g in GATES]).astype(x.dtype, copy=False)
    bias = np.concatenate([params[f"b_{g}"] for g in GATES]).astype(x.dtype, copy=False)
    wci, wcf, wco = (params[k].astype(x.dtype, copy=False) for k in ("w_ci", "w_cf", "w_co"))
    zx = (x.reshape(n * t, d) @ wx.T).reshape(n, t, 4 * cells) + bias
    if state is None:
        state = LstmState.zeros(cells, n, x.dtype)
    h = np.broadcast_to(state.h, (n, cells)).astype(x.dtype)
    c = np.broadcast_to(state.c, (n, cells)).astype(x.dtype)
    hs = np.empty((n, t, cells), dtype=x.dtype)
    acts = np.empty((t, 4, n, cells), dtype=x.dtype)  # i, f, g, o
    cs = np.empty((t + 1, n, cells), dtype=x.dtype)
    h_prev = np.empty((t, n, cells), dtype=x.dtype)
    cs[0] = c
    for s in range(t):
        h_prev[s] = h
        z = zx[:, s] + h @ wh.T
        i = _sigmoid(z[:, :cells] + wci * c)
        f = _sigmoid(z[:, cells:2 * cells] + wcf * c)
        g = np.tanh(z[:, 2 * cells:3 * cells])
        c = f * c + i * g
        o = _sigmoid(z[:, 3 * cells:] + wco * c)
        h = o * np.tanh(c)
        acts[s] = (i, f, g, o)
        cs[s + 1] = c
        hs[:, s] = h
    cache = (x, wx, wh, wci, wcf, wco, acts, cs, h_prev)
    return hs, LstmState(h, c), cache


def lstm_backward(dhs: np.ndarray, cache, dstate: LstmState | None = None):
    """Backpropagation through time given gradients w.r.t. every h_t.

    Returns (dx, dparams, dstate0).
    """
    x, wx, wh, wci, wcf, wco, acts, cs, h_prev = cache
    n, t, d = x.shape
    cells = wci.shape[0]
    dz_all = np.empty((n, t, 4 * cells), dtype=dhs.dtype)
    dwh = np.zeros_like(wh)
    dwci = np.zeros(cells, dtype=dhs.dtype)
    dwcf = np.zeros(cells, dtype=dhs.dtype)
    dwco = np.zeros(cells, dtype=dhs.dtype)
    dh_next = np.zeros((n, cells), dtype=dhs.dtype) if dstate is None else np.array(dstate.h, dtype=dhs.dtype)
    dc_next = np.zeros((n, cells), dtype=dhs.dtype) if dstate is None else np.array(dstate.c, dtype=dhs.dtype)
    for s in range(t - 1, -1, -1):
        i, f, g, o = acts[s]
        c_prev, c = cs[s], cs[s + 1]
        tc = np.tanh(c)
        dh = dhs[:, s] + dh_next
        dzo = dh * tc * o * (1 - o)
        dc = dc_next + dh * o * (1 - tc * tc) + dzo * wco
        dzi = dc * g * i * (1 - i)
        dzf = dc * c_prev * f * (1 - f)
        dzg = dc * i * (1 - g * g)
        dc_next = dc * f + dzi * wci + dzf * wcf
        dwci += (dzi * c_prev).sum(axis=0)
        dwcf += (dzf * c_prev).sum(axis=0)
        dwco += (dzo * c).sum(axis=0)
        dz = np.concatenate([dzi, dzf, dzg, dzo], axis=1)
        dz_all[:, s] = dz
        dwh += dz.T @ h_prev[s]
        dh_next = dz @ wh
    dz2 = dz_all.reshape(n * t, 4 * cells)
    dwx = dz2.T @ x.reshape(n * t, d)
    dbias = dz2.sum(axis=0)
    dx = (dz2 @ wx).reshape(n, t, d)
    grads = {}
    for k, gname in enumerate(GATES):
        sl = slice(k * cells, (k + 1) * cells)
        grads[f"W_x{gname}"] = dwx[sl]
        grads[f"W_h{gname}"] = dwh[sl]
        grads[f"b_{gname}"] = dbias[sl]
    grads["w_ci"], grads["w_cf"], grads["w_co"] = dwci, dwcf, dwco
    return dx, grads, LstmState(dh_next, dc_next)


def lstm_step(x: np.ndarray, state: LstmState, params: dict):
    """A single unbatched step: returns (h_t, new state)."""
    x = np.asarray(x, dtype=np.float64)
    st = LstmState(np.asarray(state.h, dtype=np.float64)[None], np.asarray(state.c, dtype=np.float64)[None])
    hs, new, _ = lstm_forward(x[None, None], params, st)
    return hs[0, 0], LstmState(new.h[0], new.c[0])
