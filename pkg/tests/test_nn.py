import numpy as np
import pytest
from hypothesis import given, strategies as st

from neurocine._backend import backend
from neurocine.errors import ShapeError
from neurocine.nn import (LstmState, ParameterStore, adam_step, conv2d, conv2d_backward, conv2d_forward, dense,
                          dense_backward, dense_forward, dropout, grad_check, lstm_backward, lstm_forward,
                          lstm_step, maxpool2d, maxpool2d_backward, maxpool2d_forward, relu, relu_backward,
                          relu_forward, softmax, softmax_cross_entropy, temporal_conv1d_backward,
                          temporal_conv1d_forward, temporal_maxpool_backward, temporal_maxpool_forward)
from neurocine.nn.lstm import param_shapes


def distinct(rng, shape):
    # well-separated values so max routing is stable under finite differences
    return (rng.permutation(int(np.prod(shape))).reshape(shape) * 0.1 + 0.01).astype(np.float64)


# conv2d

def test_conv_delta_kernel_is_identity(rng):
    x = rng.normal(size=(1, 5, 6))
    w = np.zeros((1, 1, 3, 3))
    w[0, 0, 1, 1] = 1
    np.testing.assert_array_equal(conv2d(x, w, np.zeros(1)), x)


def test_conv_delta_sums_channels(rng):
    x = rng.normal(size=(3, 4, 4))
    w = np.zeros((1, 3, 3, 3))
    w[0, :, 1, 1] = 1
    np.testing.assert_allclose(conv2d(x, w, np.zeros(1))[0], x.sum(axis=0), atol=1e-12)


def test_conv_ones_on_constant():
    c = 2.5
    y = conv2d(np.full((1, 6, 6), c), np.ones((1, 1, 3, 3)), np.zeros(1))[0]
    assert np.allclose(y[1:-1, 1:-1], 9 * c)
    for corner in (y[0, 0], y[0, -1], y[-1, 0], y[-1, -1]):
        assert corner == pytest.approx(4 * c)
    assert y[0, 2] == pytest.approx(6 * c)


def test_conv_matches_direct_loop(rng):
    x = rng.normal(size=(2, 3, 5, 4))
    w = rng.normal(size=(4, 3, 3, 3))
    b = rng.normal(size=4)
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    ref = np.zeros((2, 4, 5, 4))
    for i in range(5):
        for j in range(4):
            ref[:, :, i, j] = np.einsum("nckl,ockl->no", xp[:, :, i:i + 3, j:j + 3], w) + b
    np.testing.assert_allclose(conv2d(x, w, b), ref, atol=1e-12)


def test_conv_channel_mismatch():
    with pytest.raises(ShapeError):
        conv2d(np.zeros((2, 4, 4)), np.zeros((1, 3, 3, 3)), np.zeros(1))


@given(h=st.integers(1, 7), w=st.integers(1, 7))
def test_conv_preserves_spatial_shape(h, w):
    assert conv2d(np.ones((2, h, w)), np.ones((3, 2, 3, 3)), np.zeros(3)).shape == (3, h, w)


@pytest.mark.parametrize("seed", range(5))
def test_conv_gradcheck(seed):
    r = np.random.default_rng(seed)
    x, w, b = r.normal(size=(2, 3, 5, 5)), r.normal(size=(4, 3, 3, 3)), r.normal(size=4)
    R = r.normal(size=(2, 4, 5, 5))
    y, cache = conv2d_forward(x, w, b)
    dx, dw, db = conv2d_backward(R, cache, w)
    rep = grad_check(lambda: float((conv2d_forward(x, w, b)[0] * R).sum()), {"x": x, "w": w, "b": b},
                     {"x": dx, "w": dw, "b": db})
    assert rep.passed, rep


# relu

def test_relu_values():
    np.testing.assert_array_equal(relu(np.array([-1.0, 0.0, 2.0])), [0, 0, 2])


def test_relu_all_negative():
    x = -np.abs(np.random.default_rng(0).normal(size=10)) - 0.1
    y, mask = relu_forward(x)
    assert not y.any() and not relu_backward(np.ones(10), mask).any()


@pytest.mark.parametrize("seed", range(5))
def test_relu_gradcheck(seed):
    r = np.random.default_rng(seed)
    x = r.normal(size=(4, 6))
    R = r.normal(size=x.shape)
    y, mask = relu_forward(x)
    # the kink is excluded: entries within one finite-difference step of 0
    rep = grad_check(lambda: float((relu_forward(x)[0] * R).sum()), {"x": x}, {"x": relu_backward(R, mask)},
                     exclude={"x": np.abs(x) <= 1e-3})
    assert rep.passed


def test_gradcheck_excludes_exact_zero():
    x = np.array([0.0, 1.0, -1.0])
    _, mask = relu_forward(x)
    rep = grad_check(lambda: float(relu_forward(x)[0].sum()), {"x": x}, {"x": relu_backward(np.ones(3), mask)},
                     exclude={"x": np.abs(x) <= 1e-6})
    assert rep.passed and rep.n_excluded == 1


# maxpool

@pytest.mark.parametrize("name", ["numba", "numpy"])
def test_maxpool_block(name):
    with backend(name):
        assert maxpool2d(np.array([[[1.0, 2.0], [3.0, 4.0]]]))[0, 0, 0] == 4


@pytest.mark.parametrize("name", ["numba", "numpy"])
def test_maxpool_tie_routes_first(name):
    with backend(name):
        y, cache = maxpool2d_forward(np.array([[[5.0, 5.0], [1.0, 1.0]]]))
        np.testing.assert_array_equal(maxpool2d_backward(np.ones((1, 1, 1)), cache), [[[1, 0], [0, 0]]])


def test_maxpool_shape_and_odd():
    assert maxpool2d(np.zeros((3, 32, 32))).shape == (3, 16, 16)
    with pytest.raises(ShapeError):
        maxpool2d(np.zeros((1, 3, 4)))


@pytest.mark.parametrize("seed", range(5))
def test_maxpool_gradcheck(seed):
    r = np.random.default_rng(seed)
    x = distinct(r, (2, 3, 4, 6))
    R = r.normal(size=(2, 3, 2, 3))
    _, cache = maxpool2d_forward(x)
    rep = grad_check(lambda: float((maxpool2d_forward(x)[0] * R).sum()), {"x": x},
                     {"x": maxpool2d_backward(R, cache)})
    assert rep.passed


def test_maxpool_backends_agree(rng):
    x = rng.normal(size=(3, 8, 6, 4))
    with backend("numba"):
        a, ca = maxpool2d_forward(x)
        ga = maxpool2d_backward(np.ones_like(a), ca)
    with backend("numpy"):
        b, cb = maxpool2d_forward(x)
        gb = maxpool2d_backward(np.ones_like(b), cb)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(ga, gb)


# dense

def test_dense_identity_and_bias(rng):
    x = rng.normal(size=5)
    np.testing.assert_array_equal(dense(x, np.eye(5), np.zeros(5)), x)
    b = rng.normal(size=3)
    np.testing.assert_array_equal(dense(np.zeros(4), rng.normal(size=(3, 4)), b), b)
    with pytest.raises(ShapeError):
        dense(np.zeros(4), np.zeros((3, 5)), np.zeros(3))


def _dense_case(seed):
    r = np.random.default_rng(seed)
    x, w, b = r.normal(size=(3, 5)), r.normal(size=(4, 5)), r.normal(size=4)
    R = r.normal(size=(3, 4))
    dx, dw, db = dense_backward(R, x, w)
    return x, w, b, R, {"x": dx, "w": dw, "b": db}


@pytest.mark.parametrize("seed", range(5))
def test_dense_gradcheck(seed):
    x, w, b, R, grads = _dense_case(seed)
    rep = grad_check(lambda: float((dense_forward(x, w, b)[0] * R).sum()), {"x": x, "w": w, "b": b}, grads)
    assert rep.passed


def test_gradcheck_catches_sign_flip():
    x, w, b, R, grads = _dense_case(0)
    grads["w"] = -grads["w"]
    rep = grad_check(lambda: float((dense_forward(x, w, b)[0] * R).sum()), {"x": x, "w": w, "b": b}, grads)
    assert not rep.passed


# dropout

def test_dropout_modes(rng):
    x = rng.normal(size=(4, 7))
    np.testing.assert_array_equal(dropout(x, 0.5, "eval"), x)
    np.testing.assert_array_equal(dropout(x, 0.0, "train", seed=3), x)
    np.testing.assert_array_equal(dropout(x, 0.5, "train", seed=3), dropout(x, 0.5, "train", seed=3))
    with pytest.raises(ValueError):
        dropout(x, 1.0)


def test_dropout_expectation():
    x = np.array([1.0, -2.0, 0.5, 3.0])
    draws = dropout(np.broadcast_to(x, (100_000, 4)).copy(), 0.5, "train", seed=11)
    np.testing.assert_allclose(draws.mean(axis=0), x, rtol=0.02)
    assert set(np.unique(draws[:, 0])) <= {0.0, 2.0}


# LSTM

def zero_params(d, cells):
    return {k: np.zeros(s) for k, s in param_shapes(d, cells).items()}


def test_lstm_zero_everything():
    h, st_ = lstm_step(np.zeros(2), LstmState.zeros(3), zero_params(2, 3))
    np.testing.assert_array_equal(h, 0)
    np.testing.assert_array_equal(st_.c, 0)


def test_lstm_closed_form():
    h, st_ = lstm_step(np.ones(2), LstmState(np.zeros(3), np.ones(3)), zero_params(2, 3))
    np.testing.assert_allclose(st_.c, 0.5, atol=1e-15)
    np.testing.assert_allclose(h, 0.5 * np.tanh(0.5), atol=1e-15)
    assert h[0] == pytest.approx(0.2311, abs=1e-4)


def test_lstm_state_shapes():
    with pytest.raises(ShapeError):
        LstmState(np.zeros(3), np.zeros(4))
    p = zero_params(2, 3)
    p["W_xi"] = np.zeros((3, 5))
    with pytest.raises(ShapeError):
        lstm_step(np.zeros(2), LstmState.zeros(3), p)


@given(seed=st.integers(0, 10_000))
def test_lstm_output_bounded(seed):
    r = np.random.default_rng(seed)
    p = {k: r.normal(size=s) * 3 for k, s in param_shapes(4, 5).items()}
    hs, _, _ = lstm_forward(r.normal(size=(2, 6, 4)) * 3, p)
    assert np.all(np.abs(hs) < 1)


@pytest.mark.parametrize("seed", range(5))
def test_lstm_bptt_gradcheck(seed):
    r = np.random.default_rng(seed)
    p = {k: r.normal(size=s) * 0.5 for k, s in param_shapes(4, 3).items()}
    x = r.normal(size=(2, 4, 4))
    R = r.normal(size=(2, 4, 3))
    _, _, cache = lstm_forward(x, p)
    dx, grads, _ = lstm_backward(R, cache)
    rep = grad_check(lambda: float((lstm_forward(x, p)[0] * R).sum()), {"x": x, **p}, {"x": dx, **grads})
    assert rep.passed, rep.per_input


def test_lstm_step_matches_sequence(rng):
    p = {k: rng.normal(size=s) for k, s in param_shapes(3, 2).items()}
    xs = rng.normal(size=(5, 3))
    state = LstmState.zeros(2)
    for t in range(5):
        h, state = lstm_step(xs[t], state, p)
    hs, _, _ = lstm_forward(xs[None], p)
    np.testing.assert_allclose(h, hs[0, -1], atol=1e-14)


# temporal layers

def test_temporal_conv_length_and_middle(rng):
    x = rng.normal(size=(1, 7, 4))
    k = np.zeros((4, 4, 3))
    k[np.arange(4), np.arange(4), 1] = 1
    y, _ = temporal_conv1d_forward(x, k, np.zeros(4))
    assert y.shape == (1, 5, 4)
    np.testing.assert_array_equal(y[0], x[0, 1:6])
    with pytest.raises(ShapeError):
        temporal_conv1d_forward(x[:, :2], k, np.zeros(4))


@pytest.mark.parametrize("seed", range(5))
def test_temporal_conv_gradcheck(seed):
    r = np.random.default_rng(seed)
    x, k, b = r.normal(size=(2, 7, 4)), r.normal(size=(3, 4, 3)), r.normal(size=3)
    R = r.normal(size=(2, 5, 3))
    _, cache = temporal_conv1d_forward(x, k, b)
    dx, dk, db = temporal_conv1d_backward(R, cache, k)
    rep = grad_check(lambda: float((temporal_conv1d_forward(x, k, b)[0] * R).sum()), {"x": x, "k": k, "b": b},
                     {"x": dx, "k": dk, "b": db})
    assert rep.passed


def test_temporal_maxpool_properties(rng):
    x = rng.normal(size=(2, 7, 5))
    y, cache = temporal_maxpool_forward(x)
    np.testing.assert_array_equal(y, temporal_maxpool_forward(x[:, rng.permutation(7)])[0])
    np.testing.assert_array_equal(temporal_maxpool_forward(x[:, :1])[0], x[:, 0])
    g = temporal_maxpool_backward(np.ones((2, 5)), cache)
    np.testing.assert_array_equal((g != 0).sum(axis=1), 1)
    tie = np.ones((1, 3, 1))
    _, c = temporal_maxpool_forward(tie)
    np.testing.assert_array_equal(temporal_maxpool_backward(np.ones((1, 1)), c)[0, :, 0], [1, 0, 0])


@pytest.mark.parametrize("seed", range(5))
def test_temporal_maxpool_gradcheck(seed):
    r = np.random.default_rng(seed)
    x = distinct(r, (2, 7, 4))
    R = r.normal(size=(2, 4))
    _, cache = temporal_maxpool_forward(x)
    rep = grad_check(lambda: float((temporal_maxpool_forward(x)[0] * R).sum()), {"x": x},
                     {"x": temporal_maxpool_backward(R, cache)})
    assert rep.passed


# softmax / cross-entropy

def test_softmax_ce_uniform_and_stable():
    loss, p, _ = softmax_cross_entropy(np.zeros(4), 0)
    assert loss == pytest.approx(np.log(4), abs=1e-12)
    np.testing.assert_allclose(p, 0.25)
    loss, p, _ = softmax_cross_entropy(np.array([1000.0, 0, 0, 0]), 0)
    assert np.isfinite(loss) and loss == pytest.approx(0, abs=1e-12)
    with pytest.raises(ValueError):
        softmax_cross_entropy(np.zeros(4), 4)


@given(seed=st.integers(0, 10_000), scale=st.floats(0.1, 50))
def test_softmax_normalized_positive(seed, scale):
    p = softmax(np.random.default_rng(seed).normal(size=(3, 4)) * scale)
    assert np.all(p > 0)
    np.testing.assert_allclose(p.sum(axis=1), 1, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_softmax_ce_gradcheck(seed):
    r = np.random.default_rng(seed)
    z = r.normal(size=(3, 4))
    y = r.integers(0, 4, 3)
    _, _, g = softmax_cross_entropy(z, y)
    assert grad_check(lambda: softmax_cross_entropy(z, y)[0], {"z": z}, {"z": g}).passed


# Adam

def test_adam_first_step_is_lr_sign():
    for g in (0.3, -2.0, 1e-3):
        store = ParameterStore({"w": np.array([1.0])}, dtype=np.float64)
        store.grads["w"][:] = g
        adam_step(store)
        assert store["w"][0] - 1.0 == pytest.approx(-1e-3 * np.sign(g), abs=1e-3 * 1e-8 / abs(g) + 1e-15)


def test_adam_zero_gradient_counts_step():
    store = ParameterStore({"w": np.array([2.0, -1.0])}, dtype=np.float64)
    adam_step(store)
    np.testing.assert_array_equal(store["w"], [2.0, -1.0])
    assert store.t == 1


def test_adam_constant_gradient_monotone():
    store = ParameterStore({"w": np.array([0.0])}, dtype=np.float64)
    values = []
    for _ in range(100):
        store.grads["w"][:] = 0.7
        adam_step(store)
        values.append(store["w"][0])
    assert np.all(np.diff(values) < 0)


def test_parameter_store_validation():
    store = ParameterStore({"a": np.zeros(3)})
    with pytest.raises(ValueError):
        store.add("a", np.zeros(1))
    with pytest.raises(ShapeError):
        store.set_grads({"a": np.zeros(4)})
