"""Network graphs: single-frame VGG configs A-D and the multi-frame
aggregators (temporal maxpool, 1-D temporal convolution, LSTM, mix),
plus an executable model with hand-written backward passes.

Convolutional stacks run channels-last internally; the flattened
per-frame feature vector uses (C, H, W) order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError
from .ingest.data import N_CLASSES
from .nn import layers as L
from .nn.lstm import lstm_backward, lstm_forward, param_shapes as lstm_param_shapes
from .nn.optim import ParameterStore

INPUT_SHAPE = (3, 32, 32)
N_FRAMES = 7
FC_UNITS = 512
DROPOUT = 0.5
LSTM_CELLS = 128

# per config: conv widths per stack, each stack followed by a 2x2 maxpool
CONFIGS = {
    "A": ((32, 32),),
    "B": ((32, 32), (64, 64)),
    "C": ((32, 32), (64, 64), (128,)),
    "D": ((32, 32, 32, 32), (64, 64), (128,)),
}

SINGLE_VARIANTS = tuple(f"single-{c.lower()}" for c in CONFIGS)
MULTI_VARIANTS = ("multi-maxpool", "multi-conv16", "multi-conv32", "multi-lstm", "multi-mix")
VARIANTS = SINGLE_VARIANTS + MULTI_VARIANTS


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    name: str
    attrs: dict = field(default_factory=dict)
    params: tuple = ()  # ((name, shape), ...)

    def n_params(self) -> int:
        return int(sum(np.prod(s) for _, s in self.params))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "name": self.name, "attrs": dict(self.attrs),
                "params": [[n, list(s)] for n, s in self.params]}


@dataclass(frozen=True)
class NetworkSpec:
    variant: str
    layers: tuple
    n_frames: int
    n_classes: int = N_CLASSES
    input_shape: tuple = INPUT_SHAPE

    def __post_init__(self):
        names = [n for layer in self.layers for n, _ in layer.params]
        if len(names) != len(set(names)):
            raise ConfigError(f"duplicate parameter names in {self.variant}")
        self.shapes()  # validates compatibility

    @property
    def frame_layers(self) -> tuple:
        return tuple(l for l in self.layers if l.kind in ("conv", "maxpool"))

    @property
    def conv_layers(self) -> tuple:
        return tuple(l for l in self.layers if l.kind == "conv")

    def stack_outputs(self) -> tuple[int, ...]:
        """1-based indices of the last convolution in each stack."""
        out, idx = [], 0
        for l in self.frame_layers:
            if l.kind == "conv":
                idx += 1
            elif idx and (not out or out[-1] != idx):
                out.append(idx)
        return tuple(out)

    def param_shapes(self) -> dict[str, tuple]:
        return {n: tuple(s) for layer in self.layers for n, s in layer.params}

    def shapes(self) -> list[tuple]:
        """Output shape of every layer for one sample (frames axis first)."""
        c, h, w = self.input_shape
        t = self.n_frames
        shape: tuple = (t, c, h, w)
        out = []
        for l in self.layers:
            a = l.attrs
            if l.kind == "conv":
                if shape[1] != a["c_in"]:
                    raise ShapeError(f"{l.name}: expects {a['c_in']} channels, gets {shape[1]}")
                shape = (t, a["c_out"], shape[2], shape[3])
            elif l.kind == "maxpool":
                if shape[2] % 2 or shape[3] % 2:
                    raise ShapeError(f"{l.name}: odd spatial size {shape[2:]}")
                shape = (t, shape[1], shape[2] // 2, shape[3] // 2)
            elif l.kind == "flatten":
                shape = (t, int(np.prod(shape[1:])))
            elif l.kind == "squeeze":
                if t != 1:
                    raise ShapeError("single-frame networks take exactly one frame")
                shape = (shape[1],)
            elif l.kind == "temporal_maxpool":
                shape = (shape[1],)
            elif l.kind in ("temporal_conv", "lstm", "mix"):
                if shape[1] != a["d"]:
                    raise ShapeError(f"{l.name}: expects {a['d']} features, gets {shape[1]}")
                shape = (self._temporal_width(l, t),)
            elif l.kind == "dropout":
                pass
            elif l.kind == "dense":
                if shape != (a["n_in"],):
                    raise ShapeError(f"{l.name}: expects {a['n_in']} inputs, gets {shape}")
                shape = (a["n_out"],)
            else:
                raise ConfigError(f"unknown layer kind {l.kind!r}")
            out.append(shape)
        if out and out[-1] != (self.n_classes,):
            raise ShapeError(f"network output {out[-1]} is not ({self.n_classes},)")
        return out

    @staticmethod
    def _temporal_width(l: LayerSpec, t: int) -> int:
        a = l.attrs
        if l.kind == "lstm":
            return a["cells"]
        if t < 3:
            raise ShapeError(f"{l.name}: temporal convolution needs at least 3 frames")
        conv = (t - 2) * a["kernels"]
        return conv + a["cells"] if l.kind == "mix" else conv

    def to_dict(self) -> dict:
        return {"variant": self.variant, "n_frames": self.n_frames, "n_classes": self.n_classes,
                "input_shape": list(self.input_shape), "layers": [l.to_dict() for l in self.layers]}


def _conv_net(config: str) -> list[LayerSpec]:
    if config not in CONFIGS:
        raise ConfigError(f"unknown ConvNet config {config!r}; choose one of {sorted(CONFIGS)}")
    out, c_in, k = [], INPUT_SHAPE[0], 0
    for s, stack in enumerate(CONFIGS[config], 1):
        for c_out in stack:
            k += 1
            out.append(LayerSpec("conv", f"conv{k}", {"c_in": c_in, "c_out": c_out},
                                 ((f"conv{k}.W", (c_out, c_in, 3, 3)), (f"conv{k}.b", (c_out,)))))
            c_in = c_out
        out.append(LayerSpec("maxpool", f"pool{s}"))
    out.append(LayerSpec("flatten", "flatten"))
    return out


def _flat_size(config: str) -> int:
    stacks = CONFIGS[config]
    side = INPUT_SHAPE[1] // 2 ** len(stacks)
    return stacks[-1][-1] * side * side


def _head(n_in: int) -> list[LayerSpec]:
    return [
        LayerSpec("dropout", "fc.dropout", {"p": DROPOUT}),
        LayerSpec("dense", "fc", {"n_in": n_in, "n_out": FC_UNITS, "activation": "relu"},
                  (("fc.W", (FC_UNITS, n_in)), ("fc.b", (FC_UNITS,)))),
        LayerSpec("dropout", "out.dropout", {"p": DROPOUT}),
        LayerSpec("dense", "out", {"n_in": FC_UNITS, "n_out": N_CLASSES, "activation": "none"},
                  (("out.W", (N_CLASSES, FC_UNITS)), ("out.b", (N_CLASSES,)))),
    ]


def build_single_frame(config: str) -> NetworkSpec:
    config = config.upper()
    layers = _conv_net(config) + [LayerSpec("squeeze", "squeeze")] + _head(_flat_size(config))
    return NetworkSpec(f"single-{config.lower()}", tuple(layers), n_frames=1)


def _tconv_params(d: int, k: int) -> tuple:
    return (("tconv.W", (k, d, 3)), ("tconv.b", (k,)))


def _lstm_params(d: int, cells: int) -> tuple:
    return tuple((f"lstm.{n}", s) for n, s in lstm_param_shapes(d, cells).items())


def build_multi_frame(variant: str, n_frames: int = N_FRAMES) -> NetworkSpec:
    d = _flat_size("D")
    if variant == "multi-maxpool":
        temporal = LayerSpec("temporal_maxpool", "tmax")
    elif variant in ("multi-conv16", "multi-conv32"):
        k = int(variant[len("multi-conv"):])
        temporal = LayerSpec("temporal_conv", "tconv", {"d": d, "kernels": k}, _tconv_params(d, k))
    elif variant == "multi-lstm":
        temporal = LayerSpec("lstm", "lstm", {"d": d, "cells": LSTM_CELLS}, _lstm_params(d, LSTM_CELLS))
    elif variant == "multi-mix":
        temporal = LayerSpec("mix", "mix", {"d": d, "cells": LSTM_CELLS, "kernels": 32},
                             _lstm_params(d, LSTM_CELLS) + _tconv_params(d, 32))
    else:
        raise ConfigError(f"unknown multi-frame variant {variant!r}; valid: {', '.join(MULTI_VARIANTS)}")
    spec = NetworkSpec(variant, (), n_frames)  # placeholder for width arithmetic
    width = spec._temporal_width(temporal, n_frames) if temporal.kind != "temporal_maxpool" else d
    layers = _conv_net("D") + [temporal] + _head(width)
    return NetworkSpec(variant, tuple(layers), n_frames=n_frames)


def build(variant: str) -> NetworkSpec:
    if variant in SINGLE_VARIANTS:
        return build_single_frame(variant[-1])
    if variant in MULTI_VARIANTS:
        return build_multi_frame(variant)
    raise ConfigError(f"unknown variant {variant!r}; valid names: {', '.join(VARIANTS)}")


@dataclass(frozen=True)
class ParameterCount:
    total: int
    conv: int
    per_layer: dict


def count_parameters(spec: NetworkSpec) -> ParameterCount:
    per = {l.name: l.n_params() for l in spec.layers if l.params}
    conv = sum(l.n_params() for l in spec.conv_layers)
    return ParameterCount(int(sum(per.values())), int(conv), per)


def _glorot(rng, shape, fan_in, fan_out, dtype):
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=shape).astype(dtype)


def init_parameters(spec: NetworkSpec, seed: int, dtype=np.float32) -> ParameterStore:
    """Glorot-uniform conv/dense weights, uniform +-sqrt(1/cells) LSTM weights, zero biases."""
    rng = np.random.default_rng(seed)
    store = ParameterStore(dtype=dtype)
    for l in spec.layers:
        for name, shape in l.params:
            short = name.split(".", 1)[1]
            if short.startswith("b") or short.startswith("b_"):
                store.add(name, np.zeros(shape, dtype))
            elif name.startswith("lstm."):
                lim = np.sqrt(1.0 / l.attrs["cells"])
                store.add(name, rng.uniform(-lim, lim, size=shape).astype(dtype))
            elif l.kind == "conv":
                store.add(name, _glorot(rng, shape, shape[1] * 9, shape[0] * 9, dtype))
            elif name.startswith("tconv."):
                store.add(name, _glorot(rng, shape, shape[1] * 3, shape[0] * 3, dtype))
            else:
                store.add(name, _glorot(rng, shape, shape[1], shape[0], dtype))
    return store


class Model:
    """Executable network for a spec. One forward/backward pair at a time."""

    def __init__(self, spec: NetworkSpec):
        self.spec = spec
        self._cache = None

    def _frames(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.ndim == 4 and self.spec.n_frames == 1:
            x = x[:, None]
        if x.ndim != 5 or x.shape[1] != self.spec.n_frames or x.shape[2:] != self.spec.input_shape:
            raise ShapeError(f"{self.spec.variant} expects (N, {self.spec.n_frames}, "
                             f"{', '.join(map(str, self.spec.input_shape))}) input, got {x.shape}")
        return x

    def conv_features(self, params, x: np.ndarray, upto: int | None = None, cache: list | None = None):
        """Run the frame ConvNet on (M, 3, H, W) frames; returns NHWC activations.

        ``upto`` stops after the ReLU of that 1-based conv layer (pooling
        that directly follows it is applied too, since it is the stack output).
        """
        h = np.ascontiguousarray(np.asarray(x).transpose(0, 2, 3, 1))
        k = 0
        for l in self.spec.frame_layers:
            if l.kind == "conv":
                if upto is not None and k == upto:
                    break
                k += 1
                y, xp = L.conv2d_nhwc_forward(h, params[f"{l.name}.W"], params[f"{l.name}.b"])
                mask = y > 0
                np.maximum(y, 0, out=y)
                if cache is not None:
                    cache.append(("conv", l.name, xp, mask))
                h = y
            else:
                h, idx = L.maxpool_nhwc_forward(h)
                if cache is not None:
                    cache.append(("pool", l.name, idx))
        return h

    def forward(self, params, x, train: bool = False, rng: np.random.Generator | None = None,
                keep: bool = False) -> np.ndarray:
        x = self._frames(x)
        n, t = x.shape[:2]
        dtype = np.result_type(x.dtype, np.float32)
        convc: list = []
        h = self.conv_features(params, x.reshape((n * t,) + x.shape[2:]).astype(dtype, copy=False),
                               cache=convc if keep else None)
        fshape = h.shape
        feats = h.transpose(0, 3, 1, 2).reshape(n, t, -1)
        caches = []
        out = feats
        for l in self.spec.layers:
            if l.kind in ("conv", "maxpool", "flatten"):
                continue
            if l.kind == "squeeze":
                out = out[:, 0]
                c = None
            elif l.kind == "temporal_maxpool":
                out, c = L.temporal_maxpool_forward(out)
            elif l.kind == "temporal_conv":
                out, c = self._tconv_fwd(params, out)
            elif l.kind == "lstm":
                out, c = self._lstm_fwd(params, out)
            elif l.kind == "mix":
                a, ca = self._lstm_fwd(params, out)
                b, cb = self._tconv_fwd(params, out)
                out, c = np.concatenate([a, b], axis=1), (ca, cb, a.shape[1])
            elif l.kind == "dropout":
                out, c = L.dropout_forward(out, l.attrs["p"], train, rng)
            elif l.kind == "dense":
                out, c = L.dense_forward(out, params[f"{l.name}.W"], params[f"{l.name}.b"])
                if l.attrs["activation"] == "relu":
                    out, m = L.relu_forward(out)
                    c = (c, m)
            caches.append((l, c))
        self._cache = (convc, caches, (n, t), fshape) if keep else None
        return out

    def _tconv_fwd(self, params, x):
        y, c = L.temporal_conv1d_forward(x, params["tconv.W"], params["tconv.b"])
        y, m = L.relu_forward(y)
        return y.reshape(y.shape[0], -1), (c, m, y.shape)

    def _tconv_bwd(self, params, dy, cache, grads):
        c, m, shape = cache
        dx, dk, db = L.temporal_conv1d_backward(L.relu_backward(dy.reshape(shape), m), c, params["tconv.W"])
        grads["tconv.W"], grads["tconv.b"] = dk, db
        return dx

    def _lstm_fwd(self, params, x):
        p = {n: params[f"lstm.{n}"] for n in lstm_param_shapes(1, 1)}
        hs, _, c = lstm_forward(x, p)
        return hs[:, -1], (c, hs.shape)

    def _lstm_bwd(self, dy, cache, grads):
        c, shape = cache
        dhs = np.zeros(shape, dtype=dy.dtype)
        dhs[:, -1] = dy
        dx, g, _ = lstm_backward(dhs, c)
        for k, v in g.items():
            grads[f"lstm.{k}"] = v
        return dx

    def backward(self, params, dlogits: np.ndarray) -> dict[str, np.ndarray]:
        if self._cache is None:
            raise RuntimeError("backward needs a preceding forward(keep=True)")
        convc, caches, (n, t), fshape = self._cache
        grads: dict[str, np.ndarray] = {}
        g = dlogits
        for l, c in reversed(caches):
            if l.kind == "dense":
                if l.attrs["activation"] == "relu":
                    c, m = c
                    g = L.relu_backward(g, m)
                g, dw, db = L.dense_backward(g, c, params[f"{l.name}.W"])
                grads[f"{l.name}.W"], grads[f"{l.name}.b"] = dw, db
            elif l.kind == "dropout":
                g = L.dropout_backward(g, c)
            elif l.kind == "squeeze":
                g = g[:, None]
            elif l.kind == "temporal_maxpool":
                g = L.temporal_maxpool_backward(g, c)
            elif l.kind == "temporal_conv":
                g = self._tconv_bwd(params, g, c, grads)
            elif l.kind == "lstm":
                g = self._lstm_bwd(g, c, grads)
            elif l.kind == "mix":
                ca, cb, w = c
                g = self._lstm_bwd(g[:, :w], ca, grads) + self._tconv_bwd(params, g[:, w:], cb, grads)
        # frame sharing: the conv stack sees all frames as one batch, so its
        # parameter gradients sum over frames automatically
        g = np.ascontiguousarray(g.reshape(n * t, fshape[3], fshape[1], fshape[2]).transpose(0, 2, 3, 1))
        for i, entry in enumerate(reversed(convc)):
            if entry[0] == "pool":
                g = L.maxpool_nhwc_backward(g, entry[2])
            else:
                _, name, xp, mask = entry
                g *= mask
                first = i == len(convc) - 1
                g, dw, db = L.conv2d_nhwc_backward(g, xp, params[f"{name}.W"], need_dx=not first)
                grads[f"{name}.W"], grads[f"{name}.b"] = dw, db
        self._cache = None
        return grads

    def loss_and_grads(self, params, x, labels, rng=None, train: bool = True):
        logits = self.forward(params, x, train=train, rng=rng, keep=True)
        loss, _, dlogits = L.softmax_cross_entropy(logits, labels)
        return loss, self.backward(params, dlogits.astype(logits.dtype, copy=False))

    def predict_logits(self, params, x, batch: int = 50) -> np.ndarray:
        x = self._frames(x)
        outs = [self.forward(params, x[s:s + batch]) for s in range(0, len(x), batch)]
        return np.concatenate(outs) if outs else np.zeros((0, self.spec.n_classes), np.float32)
