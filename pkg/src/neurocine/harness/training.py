"""Mini-batch Adam training with early stopping, evaluation, noise augmentation."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from ..architectures import Model, NetworkSpec, init_parameters
from ..errors import ConfigError, ShapeError
from ..ingest.data import N_CLASSES, FrameSet
from ..nn.layers import softmax_cross_entropy
from ..nn.optim import ADAM_EPS, ParameterStore, adam_step

EVAL_BATCH = 50


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = ADAM_EPS
    batch_size: int = 20
    max_epochs: int = 60
    patience: int = 5
    seed: int = 0
    augment_sigma: float = 0.0
    # optional hard cap on optimizer steps across all epochs (None = no cap)
    max_steps: int | None = None

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")
        if self.augment_sigma < 0:
            raise ConfigError("augment_sigma must be >= 0")
        if self.max_steps is not None and self.max_steps < 1:
            raise ConfigError("max_steps must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    val_err: list = field(default_factory=list)
    best_epoch: int = -1
    steps: int = 0

    def record(self, train_loss: float, val_loss: float, val_err: float) -> None:
        self.train_loss.append(float(train_loss))
        self.val_loss.append(float(val_loss))
        self.val_err.append(float(val_err))
        if self.best_epoch < 0 or val_loss < self.val_loss[self.best_epoch]:
            self.best_epoch = len(self.val_loss) - 1

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EvalResult:
    error_pct: float
    confusion: np.ndarray  # rows: true class, columns: predicted class
    loss: float
    predictions: np.ndarray


def _seeds(seed: int):
    init, shuffle, dropout, noise = np.random.SeedSequence(seed).spawn(4)
    return (int(init.generate_state(1)[0]), np.random.default_rng(shuffle),
            np.random.default_rng(dropout), np.random.default_rng(noise))


def _check_frames(spec: NetworkSpec, data: FrameSet, what: str) -> None:
    if data.n_frames != spec.n_frames:
        raise ShapeError(f"{what} has {data.n_frames} frames per trial; {spec.variant} needs {spec.n_frames}")


def augment_noise(frames, sigma: float, seed) -> np.ndarray:
    """Add i.i.d. zero-mean Gaussian noise of std ``sigma`` to every pixel."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    frames = np.asarray(frames)
    if sigma == 0:
        return frames.copy()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return (frames + rng.normal(0.0, sigma, size=frames.shape)).astype(frames.dtype)


def evaluate(params, spec: NetworkSpec, test: FrameSet, model: Model | None = None) -> EvalResult:
    """Eval-mode forward, argmax prediction (ties to the lowest class)."""
    model = model or Model(spec)
    logits = model.predict_logits(params, test.frames, EVAL_BATCH)
    labels = np.asarray(test.labels, dtype=np.int64)
    conf = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    if len(labels) == 0:
        return EvalResult(0.0, conf, 0.0, np.zeros(0, np.int64))
    pred = logits.argmax(axis=1)
    np.add.at(conf, (labels, pred), 1)
    loss = softmax_cross_entropy(logits.astype(np.float64), labels)[0]
    err = 100.0 * float(np.mean(pred != labels))
    return EvalResult(err, conf, loss, pred)


def train(spec: NetworkSpec, train_set: FrameSet, val_set: FrameSet | None, cfg: TrainConfig,
          on_epoch: Callable[[int, float, float, float], None] | None = None):
    """Train from a fresh initialization; returns (best parameters, history).

    Without a validation set the training set is monitored instead.
    """
    if len(train_set) == 0:
        raise ValueError("training set is empty")
    _check_frames(spec, train_set, "training set")
    if val_set is not None:
        _check_frames(spec, val_set, "validation set")
    monitor = val_set if val_set is not None and len(val_set) else train_set
    init_seed, shuffle_rng, drop_rng, noise_rng = _seeds(cfg.seed)
    store = init_parameters(spec, init_seed)
    model = Model(spec)
    hist = TrainHistory()
    best = None
    x_all = train_set.frames
    y_all = np.asarray(train_set.labels, dtype=np.int64)
    n = len(y_all)
    for epoch in range(cfg.max_epochs):
        order = shuffle_rng.permutation(n)
        total, seen = 0.0, 0
        for s in range(0, n, cfg.batch_size):
            if cfg.max_steps is not None and hist.steps >= cfg.max_steps:
                break
            idx = np.sort(order[s:s + cfg.batch_size])
            xb = np.asarray(x_all[idx], dtype=np.float32)
            if cfg.augment_sigma > 0:
                xb = augment_noise(xb, cfg.augment_sigma, noise_rng)
            loss, grads = model.loss_and_grads(store, xb, y_all[idx], drop_rng)
            store.set_grads(grads)
            adam_step(store, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
            hist.steps += 1
            total += loss * len(idx)
            seen += len(idx)
        if seen == 0:
            break
        ev = evaluate(store, spec, monitor, model)
        hist.record(total / seen, ev.loss, ev.error_pct)
        if on_epoch is not None:
            on_epoch(epoch, total / seen, ev.loss, ev.error_pct)
        if hist.best_epoch == epoch:
            best = store.snapshot()
        elif epoch - hist.best_epoch >= cfg.patience:
            break
        if cfg.max_steps is not None and hist.steps >= cfg.max_steps:
            break
    store.load(best)
    return store, hist
