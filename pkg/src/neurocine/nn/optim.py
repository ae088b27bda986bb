"""Named parameter storage and the Adam update."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError

ADAM_EPS = 1e-8


class ParameterStore:
    """Ordered named parameters with paired gradients and Adam moments."""

    def __init__(self, params: dict[str, np.ndarray] | None = None, dtype=np.float32):
        self.dtype = np.dtype(dtype)
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0
        for name, value in (params or {}).items():
            self.add(name, value)

    def add(self, name: str, value) -> np.ndarray:
        if name in self.params:
            raise ValueError(f"duplicate parameter name {name!r}")
        arr = np.array(value, dtype=self.dtype)
        self.params[name] = arr
        self.grads[name] = np.zeros_like(arr)
        self.m[name] = np.zeros_like(arr)
        self.v[name] = np.zeros_like(arr)
        return arr

    def __getitem__(self, name):
        return self.params[name]

    def __contains__(self, name):
        return name in self.params

    def __iter__(self):
        return iter(self.params)

    def __len__(self):
        return len(self.params)

    def names(self) -> list[str]:
        return list(self.params)

    def n_scalars(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def zero_grad(self) -> None:
        for g in self.grads.values():
            g.fill(0)

    def set_grads(self, grads: dict[str, np.ndarray]) -> None:
        for name, g in grads.items():
            if self.grads[name].shape != np.shape(g):
                raise ShapeError(f"gradient for {name} has shape {np.shape(g)}, expected {self.grads[name].shape}")
            self.grads[name][...] = g

    def snapshot(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}

    def load(self, values: dict[str, np.ndarray]) -> None:
        if set(values) != set(self.params):
            raise ValueError("parameter names do not match the store")
        for k, v in values.items():
            if self.params[k].shape != np.shape(v):
                raise ShapeError(f"parameter {k} has shape {np.shape(v)}, expected {self.params[k].shape}")
            self.params[k][...] = v


def adam_step(store: ParameterStore, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = ADAM_EPS) -> ParameterStore:
    """One bias-corrected Adam update of every parameter, in place."""
    store.t += 1
    c1 = 1.0 - beta1 ** store.t
    c2 = 1.0 - beta2 ** store.t
    for name, p in store.params.items():
        g = store.grads[name]
        m, v = store.m[name], store.v[name]
        m *= beta1
        m += (1 - beta1) * g
        v *= beta2
        v += (1 - beta2) * g * g
        p -= (lr * (m / c1) / (np.sqrt(v / c2) + eps)).astype(p.dtype, copy=False)
    return store
