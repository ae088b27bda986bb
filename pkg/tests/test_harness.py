import json

import numpy as np
import pytest

from neurocine.architectures import Model, build, init_parameters
from neurocine.errors import ConfigError, FormatError, ShapeError
from neurocine.harness import (MetricsLog, TrainConfig, augment_noise, decode_checkpoint, encode_checkpoint,
                               evaluate, fold_table, read_metrics, run_cv, train)
from neurocine.harness.cv import fold_seed
from neurocine.ingest.data import FrameSet
from neurocine.nn.layers import softmax_cross_entropy
from neurocine.nn.optim import adam_step

TINY = TrainConfig(max_epochs=3, patience=1, max_steps=3, batch_size=4, seed=7)


def test_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(batch_size=0)
    with pytest.raises(ConfigError):
        TrainConfig(patience=0)
    with pytest.raises(ConfigError):
        TrainConfig(augment_sigma=-1)
    cfg = TrainConfig()
    assert (cfg.lr, cfg.beta1, cfg.beta2, cfg.batch_size, cfg.max_epochs, cfg.patience) == (1e-3, 0.9, 0.999, 20, 60, 5)


def test_train_is_deterministic(small_frames):
    spec = build("multi-maxpool")
    tr, va = small_frames.subset(np.arange(12)), small_frames.subset(np.arange(12, 16))
    p1, h1 = train(spec, tr, va, TINY)
    p2, h2 = train(spec, tr, va, TINY)
    assert h1.to_dict() == h2.to_dict()
    assert all(np.array_equal(p1[n], p2[n]) for n in p1)


def test_early_stopping_returns_best(small_frames):
    spec = build("single-a")
    frames = FrameSet(small_frames.frames[:, :1], small_frames.labels, small_frames.subjects)
    tr, va = frames.subset(np.arange(16)), frames.subset(np.arange(16, 24))
    params, hist = train(spec, tr, va, TrainConfig(max_epochs=6, patience=2, batch_size=4, seed=1))
    assert hist.best_epoch == int(np.argmin(hist.val_loss))
    assert len(hist.val_loss) <= 6
    assert evaluate(params, spec, va).loss == pytest.approx(hist.val_loss[hist.best_epoch], rel=1e-5)
    stopped_early = len(hist.val_loss) < 6
    assert not stopped_early or len(hist.val_loss) - 1 - hist.best_epoch == 2


def test_train_errors(small_frames):
    spec = build("multi-lstm")
    with pytest.raises(ValueError):
        train(spec, small_frames.subset(np.arange(0)), None, TINY)
    one = FrameSet(small_frames.frames[:, :1], small_frames.labels, small_frames.subjects)
    with pytest.raises(ShapeError):
        train(spec, one, None, TINY)


def test_uniform_model_is_chance(small_frames):
    spec = build("multi-maxpool")
    params = init_parameters(spec, 0)
    params["out.W"][:] = 0
    balanced = small_frames.subset(np.arange(24))
    ev = evaluate(params, spec, balanced)
    assert ev.error_pct == pytest.approx(75.0)
    assert ev.confusion.sum() == 24
    assert np.trace(ev.confusion) / 24 == pytest.approx(1 - ev.error_pct / 100)
    assert np.all(ev.predictions == 0)


def oracle_problem():
    """Single-frame images whose channel 0 is constant (c + 1) for class c."""
    labels = np.tile(np.arange(4), 3).astype(np.uint8)
    x = np.zeros((12, 1, 3, 32, 32), np.float32)
    x[:, 0, 0] = (labels + 1)[:, None, None]
    spec = build("single-a")
    p = init_parameters(spec, 0)
    for n in p:
        p[n][...] = 0
    p["conv1.W"][0, 0, 1, 1] = 1
    p["conv2.W"][0, 0, 1, 1] = 1
    p["fc.W"][0, 0] = 1  # kernel 0, pooled pixel (0, 0)
    k = np.arange(1, 5)
    p["out.W"][:, 0] = 2 * k
    p["out.b"][:] = -(k ** 2)
    return spec, p, FrameSet(x, labels, np.zeros(12, np.uint16))


def test_oracle_parameters_perfect():
    spec, params, data = oracle_problem()
    ev = evaluate(params, spec, data)
    assert ev.error_pct == 0
    np.testing.assert_array_equal(ev.confusion, 3 * np.eye(4))


def test_loss_decreases_on_fixed_batch(small_frames):
    spec = build("single-a")
    x = small_frames.frames[:8, :1]
    y = np.asarray(small_frames.labels[:8], np.int64)
    ok = 0
    for seed in range(5):
        store = init_parameters(spec, seed)
        model = Model(spec)
        rng = np.random.default_rng(seed)
        before = softmax_cross_entropy(model.forward(store, x).astype(np.float64), y)[0]
        for _ in range(10):
            _, g = model.loss_and_grads(store, x, y, rng)
            store.set_grads(g)
            adam_step(store)
        after = softmax_cross_entropy(model.forward(store, x).astype(np.float64), y)[0]
        ok += after < before
    assert ok >= 4


def test_augment_noise():
    x = np.random.default_rng(0).normal(size=(10, 7, 3, 32, 32)).astype(np.float32)
    np.testing.assert_array_equal(augment_noise(x, 0.0, 1), x)
    np.testing.assert_array_equal(augment_noise(x, 0.5, 3), augment_noise(x, 0.5, 3))
    z = np.zeros((1_000_000,), np.float64)
    noise = augment_noise(z, 1.0, 4)
    assert abs(noise.mean()) < 0.01 and noise.std() == pytest.approx(1.0, abs=0.01)
    # additive only: the residual is independent of the image (no flips / zooms)
    resid = augment_noise(x, 1.0, 5).astype(np.float64) - x
    assert abs(np.corrcoef(resid.ravel(), x.ravel())[0, 1]) < 0.01
    with pytest.raises(ValueError):
        augment_noise(x, -1, 0)


def test_checkpoint_roundtrip():
    store = init_parameters(build("multi-conv16"), 3)
    blob = encode_checkpoint(store, 2 ** 40 + 5)
    assert blob[:4] == b"EEGN"
    params, seed = decode_checkpoint(blob)
    assert seed == 2 ** 40 + 5 and list(params) == store.names()
    assert all(np.array_equal(params[n], store[n]) for n in params)
    assert encode_checkpoint(params, seed) == blob
    for bad in (b"XXXX" + blob[4:], blob[:-3], blob + b"\0"):
        with pytest.raises(FormatError):
            decode_checkpoint(bad)


def test_checkpoint_layout():
    blob = encode_checkpoint({"a.W": np.arange(6, dtype=np.float32).reshape(2, 3)}, 9)
    assert blob[4:12] == (1).to_bytes(4, "little") + (1).to_bytes(4, "little")
    assert blob[12:14] == (3).to_bytes(2, "little") and blob[14:17] == b"a.W"
    assert blob[17] == 2 and blob[18:26] == (2).to_bytes(4, "little") + (3).to_bytes(4, "little")
    assert len(blob) == 26 + 24 + 8 and blob[-8:] == (9).to_bytes(8, "little")


def test_metrics_log(tmp_path):
    log = MetricsLog()
    log.add(1, 0, 1.0, 2.0, 50.0)
    log.add(0, 1, 0.5, 0.7, 25.0)
    log.add(0, 0, 0.9, 1.0, 30.0)
    path = tmp_path / "m.jsonl"
    log.write(path)
    recs = read_metrics(path)
    assert [(r["fold"], r["epoch"]) for r in recs] == [(0, 0), (0, 1), (1, 0)]
    assert set(json.loads(path.read_text().splitlines()[0])) == {"fold", "epoch", "train_loss", "val_loss", "val_err"}


def test_fold_seeds_differ():
    assert fold_seed(1, 0) != fold_seed(1, 1) and fold_seed(1, 0) == fold_seed(1, 0)


def test_run_cv_small(small_dataset, small_bands):
    trials, montage = small_dataset
    cfg = TrainConfig(max_epochs=1, patience=1, max_steps=1, batch_size=8, seed=3)
    log = MetricsLog()
    reports = run_cv(small_bands, montage, "multi-conv16", cfg, log=log)
    assert [r.held_out_subject for r in reports] == [0, 1, 2]
    for r in reports:
        assert r.confusion.sum() == r.n_test == 8
        assert r.error_pct == pytest.approx(100 * (1 - np.trace(r.confusion) / r.n_test))
    assert len(log.records) == 3
    again = run_cv(small_bands, montage, "multi-conv16", cfg)
    assert [r.to_dict() for r in reports] == [r.to_dict() for r in again]
    table = fold_table(reports, "multi-conv16")
    assert "S1" in table and "S3" in table and "Mean" in table


def test_run_cv_needs_two_subjects(small_dataset, small_bands):
    keep = np.flatnonzero(small_bands.subjects == 0)
    with pytest.raises(ValueError):
        run_cv(small_bands.subset(keep), small_dataset[1], "multi-maxpool", TINY)
