"""Deconvnet back-projection of ConvNet feature maps and PNG output.

Feature maps are taken at stack outputs (after the stack's max-pool).
Back-projection walks the frame ConvNet in reverse: pooling is undone by
x2 bicubic (Catmull-Rom, edge-clamped) upsampling, and each convolution
by rectifying the map and applying the transposed filter bank. Biases are
not used, so the projection is positively homogeneous in the map.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .architectures import Model, NetworkSpec
from .errors import ConfigError, ShapeError
from .ingest.data import FrameSet
from .nn.layers import conv_transpose_nhwc

CATMULL_ROM_A = -0.5


@dataclass(frozen=True)
class TopActivation:
    trial: int
    score: float
    frame: int  # frame of the trial with the largest mean activation


@dataclass(frozen=True)
class BackProjection:
    map: np.ndarray  # (3, 32, 32)
    layer: int
    kernel: int
    trial: int = -1

    def __post_init__(self):
        if self.map.ndim != 3 or self.map.shape[0] != 3:
            raise ShapeError(f"back projection must be 3xHxW, got {self.map.shape}")


def _cubic(t: np.ndarray, a: float = CATMULL_ROM_A) -> np.ndarray:
    t = np.abs(t)
    return np.where(t <= 1, (a + 2) * t ** 3 - (a + 3) * t ** 2 + 1,
                    np.where(t < 2, a * t ** 3 - 5 * a * t ** 2 + 8 * a * t - 4 * a, 0.0))


def upsample_matrix(n: int, factor: int = 2) -> np.ndarray:
    """(factor*n, n) bicubic resampling matrix with half-pixel alignment and clamped edges."""
    m = factor * n
    u = (np.arange(m) + 0.5) / factor - 0.5
    base = np.floor(u).astype(int)
    out = np.zeros((m, n))
    for off in range(-1, 3):
        src = base + off
        w = _cubic(u - src)
        np.add.at(out, (np.arange(m), np.clip(src, 0, n - 1)), w)
    return out


def bicubic_upsample(x: np.ndarray, factor: int = 2) -> np.ndarray:
    """Upsample NHWC maps spatially."""
    uh = upsample_matrix(x.shape[1], factor)
    uw = upsample_matrix(x.shape[2], factor)
    return np.einsum("ih,nhwc,jw->nijc", uh, x, uw, optimize=True).astype(x.dtype, copy=False)


def _valid_layers(spec: NetworkSpec) -> tuple[int, ...]:
    return spec.stack_outputs()


def _check_layer(spec: NetworkSpec, layer: int) -> None:
    valid = _valid_layers(spec)
    if layer not in valid:
        raise ConfigError(f"layer {layer} is not a stack output; valid layers: {{{', '.join(map(str, valid))}}}")


def _images(dataset) -> tuple[np.ndarray, int]:
    frames = dataset.frames if isinstance(dataset, FrameSet) else np.asarray(dataset)
    if frames.ndim == 4:
        frames = frames[:, None]
    if frames.ndim != 5:
        raise ShapeError(f"expected (N, T, 3, H, W) or (N, 3, H, W) frames, got {frames.shape}")
    return frames, frames.shape[1]


def feature_maps(params, spec: NetworkSpec, images: np.ndarray, layer: int, batch: int = 64) -> np.ndarray:
    """(M, 3, H, W) images -> NHWC stack-output maps after ``layer``."""
    _check_layer(spec, layer)
    model = Model(spec)
    outs = [model.conv_features(params, np.asarray(images[s:s + batch], np.float32), upto=layer)
            for s in range(0, len(images), batch)]
    return np.concatenate(outs)


def select_top_activations(params, spec: NetworkSpec, dataset, layer: int, kernel: int,
                           k: int = 9) -> list[TopActivation]:
    """Trials ranked by mean (post-ReLU) activation of one kernel; ties by trial id."""
    _check_layer(spec, layer)
    frames, t = _images(dataset)
    n_kernels = next(l for l in spec.conv_layers if l.name == f"conv{layer}").attrs["c_out"]
    if not 0 <= kernel < n_kernels:
        raise ConfigError(f"kernel {kernel} out of range 0..{n_kernels - 1} for layer {layer}")
    if k > len(frames):
        raise ValueError(f"requested top {k} of only {len(frames)} trials")
    fm = feature_maps(params, spec, frames.reshape((-1,) + frames.shape[2:]), layer)
    per_frame = fm[..., kernel].astype(np.float64).mean(axis=(1, 2)).reshape(len(frames), t)
    scores = per_frame.mean(axis=1)
    order = np.lexsort((np.arange(len(scores)), -scores))[:k]
    return [TopActivation(int(i), float(scores[i]), int(per_frame[i].argmax())) for i in order]


def _reverse_steps(spec: NetworkSpec, layer: int) -> list:
    """Frame layers from the stack output of ``layer`` back to the input, reversed."""
    steps, k = [], 0
    for l in spec.frame_layers:
        if l.kind == "conv":
            if k == layer:
                break
            k += 1
        steps.append(l)
    return steps[::-1]


def deconv_chain(fmap: np.ndarray, steps, params) -> np.ndarray:
    """Apply inverse steps (conv / maxpool LayerSpecs, already reversed) to NHWC maps."""
    h = fmap
    for l in steps:
        if l.kind == "maxpool":
            h = bicubic_upsample(h)
        else:
            h = conv_transpose_nhwc(np.maximum(h, 0), np.asarray(params[f"{l.name}.W"], dtype=h.dtype))
    return h


def back_project(params, spec: NetworkSpec, frame: np.ndarray, layer: int, kernel: int,
                 trial: int = -1) -> BackProjection:
    """Project one kernel's stack-output map of a single 3x32x32 frame to input space."""
    if f"conv{layer}" not in {l.name for l in spec.conv_layers}:
        raise ConfigError(f"layer {layer} is not a convolution layer of {spec.variant}")
    _check_layer(spec, layer)
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape != spec.input_shape:
        raise ShapeError(f"frame must be {spec.input_shape}, got {frame.shape}")
    fm = Model(spec).conv_features(params, frame[None], upto=layer)
    if not 0 <= kernel < fm.shape[3]:
        raise ConfigError(f"kernel {kernel} out of range 0..{fm.shape[3] - 1}")
    iso = np.zeros_like(fm)
    iso[..., kernel] = fm[..., kernel]
    out = deconv_chain(iso, _reverse_steps(spec, layer), params)
    return BackProjection(out[0].transpose(2, 0, 1).copy(), layer, kernel, trial)


def to_uint8(channel: np.ndarray) -> np.ndarray:
    """Min-max scale to 0..255; a constant channel becomes 128."""
    c = np.asarray(channel, dtype=np.float64)
    if not np.all(np.isfinite(c)):
        raise ValueError("cannot render a non-finite map")
    lo, hi = c.min(), c.max()
    if hi == lo:
        return np.full(c.shape, 128, np.uint8)
    return np.rint((c - lo) / (hi - lo) * 255.0).astype(np.uint8)


def emit_image(m, path, scale: int = 1) -> Path:
    """Write a 3xHxW map (theta, alpha, beta -> R, G, B) or an HxW map (grayscale) as PNG."""
    arr = m.map if isinstance(m, BackProjection) else np.asarray(m)
    if scale < 1:
        raise ValueError("scale must be a positive integer")
    if arr.ndim == 3:
        px = np.stack([to_uint8(ch) for ch in arr], axis=-1)
    elif arr.ndim == 2:
        px = to_uint8(arr)
    else:
        raise ShapeError(f"cannot render array of shape {arr.shape}")
    if scale > 1:
        px = px.repeat(scale, axis=0).repeat(scale, axis=1)
    path = Path(path)
    Image.fromarray(np.ascontiguousarray(px)).save(path, format="PNG")
    return path


def image_name(layer: int, kernel: int, rank: int, part: str = "") -> str:
    return f"layer{layer}_kernel{kernel}_rank{rank}{'_' + part if part else ''}.png"
