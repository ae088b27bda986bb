import numpy as np
import pytest
from PIL import Image

from neurocine.architectures import build, init_parameters
from neurocine.deconv import (BackProjection, back_project, bicubic_upsample, deconv_chain, emit_image,
                              image_name, select_top_activations, upsample_matrix)
from neurocine.errors import ConfigError
from neurocine.nn.layers import conv2d_nhwc_forward


@pytest.fixture(scope="module")
def net_d():
    spec = build("single-d")
    return spec, init_parameters(spec, 4)


def test_upsample_matrix_rows_sum_to_one():
    for n in (1, 4, 8, 16):
        u = upsample_matrix(n)
        assert u.shape == (2 * n, n)
        np.testing.assert_allclose(u.sum(axis=1), 1, atol=1e-14)


def test_upsample_reproduces_linear_interior():
    x = np.arange(8.0)
    y = upsample_matrix(8) @ x
    # Catmull-Rom reproduces linear data away from the clamped edges
    np.testing.assert_allclose(y[3:-3], ((np.arange(16) + 0.5) / 2 - 0.5)[3:-3], atol=1e-12)


def test_bicubic_constant_preserved():
    x = np.full((1, 4, 4, 2), 3.0)
    np.testing.assert_allclose(bicubic_upsample(x), 3.0)


def test_delta_filter_backprojection_is_identity(rng):
    spec = build("single-a")
    w = np.zeros((1, 1, 3, 3))
    w[0, 0, 1, 1] = 1
    fmap = np.abs(rng.normal(size=(1, 5, 5, 1)))
    out = deconv_chain(fmap, [spec.conv_layers[0]], {"conv1.W": w})
    np.testing.assert_array_equal(out, fmap)


def test_transpose_is_adjoint(rng):
    from neurocine.nn.layers import conv_transpose_nhwc
    w = rng.normal(size=(4, 3, 3, 3))
    x = rng.normal(size=(2, 6, 5, 3))
    y = rng.normal(size=(2, 6, 5, 4))
    conv = conv2d_nhwc_forward(x, w, np.zeros(4))[0]
    assert np.sum(conv * y) == pytest.approx(np.sum(x * conv_transpose_nhwc(y, w)), rel=1e-12)


@pytest.mark.parametrize("layer", [4, 6, 7])
def test_back_projection_shape(net_d, rng, layer):
    spec, params = net_d
    bp = back_project(params, spec, rng.normal(size=(3, 32, 32)), layer, 3)
    assert isinstance(bp, BackProjection) and bp.map.shape == (3, 32, 32)


def test_back_projection_homogeneous_and_zero(net_d, rng):
    spec, params = net_d
    frame = rng.normal(size=(3, 32, 32))
    base = back_project(params, spec, frame, 7, 5).map
    # scaling the input by a > 0 scales every bias-free ReLU/conv/pool stage; biases are zero at init
    np.testing.assert_allclose(back_project(params, spec, 2.5 * frame, 7, 5).map, 2.5 * base, rtol=1e-9, atol=1e-12)
    np.testing.assert_array_equal(back_project(params, spec, np.zeros((3, 32, 32)), 7, 5).map, 0)


def test_back_projection_rejects_layers(net_d):
    spec, params = net_d
    with pytest.raises(ConfigError, match="4, 6, 7"):
        back_project(params, spec, np.zeros((3, 32, 32)), 5, 0)
    with pytest.raises(ConfigError):
        back_project(params, spec, np.zeros((3, 32, 32)), 9, 0)
    with pytest.raises(ConfigError):
        back_project(params, spec, np.zeros((3, 32, 32)), 7, 128)


def test_select_top_activations(net_d, rng):
    spec, params = net_d
    frames = np.zeros((6, 1, 3, 32, 32), np.float32)
    hits = select_top_activations(params, spec, frames, 4, 2, k=3)
    assert [h.trial for h in hits] == [0, 1, 2] and all(h.score == 0 for h in hits)
    frames = np.abs(rng.normal(size=(6, 1, 3, 32, 32))).astype(np.float32)
    scores = [h.score for h in select_top_activations(params, spec, frames, 4, 2, k=6)]
    assert scores == sorted(scores, reverse=True) and min(scores) >= 0
    with pytest.raises(ValueError):
        select_top_activations(params, spec, frames, 4, 2, k=7)
    with pytest.raises(ConfigError):
        select_top_activations(params, spec, frames, 4, 32, k=1)


def test_select_top_saturating_trial():
    spec = build("single-a")
    params = init_parameters(spec, 0)
    for n in params:
        params[n][...] = 0
    params["conv1.W"][0, 0, 1, 1] = 1
    params["conv2.W"][1, 0, 1, 1] = 1
    frames = np.zeros((5, 1, 3, 32, 32), np.float32)
    frames[3, 0, 0] = 10.0
    frames[1, 0, 0, :4, :4] = 1.0
    hits = select_top_activations(params, spec, frames, 2, 1, k=2)
    assert [h.trial for h in hits] == [3, 1]


def test_emit_image(tmp_path, rng):
    m = rng.normal(size=(3, 32, 32))
    m[0, 0, 0] = 100.0  # theta maximum -> red
    p1 = emit_image(m, tmp_path / "a.png", scale=2)
    p2 = emit_image(BackProjection(m, 7, 1), tmp_path / "b.png", scale=2)
    assert p1.read_bytes() == p2.read_bytes()
    img = np.asarray(Image.open(p1))
    assert img.shape == (64, 64, 3)
    assert tuple(img[0, 0]) == (255,) + tuple(img[0, 0, 1:]) and img[..., 0].max() == 255
    const = np.asarray(Image.open(emit_image(np.full((3, 32, 32), 4.2), tmp_path / "c.png")))
    assert np.all(const == 128)
    gray = np.asarray(Image.open(emit_image(rng.normal(size=(8, 8)), tmp_path / "g.png")))
    assert gray.shape == (8, 8) and gray.min() == 0 and gray.max() == 255
    with pytest.raises(ValueError):
        emit_image(np.full((3, 4, 4), np.nan), tmp_path / "n.png")


def test_image_names():
    assert image_name(7, 12, 1) == "layer7_kernel12_rank1.png"
    assert image_name(4, 0, 9, "input") == "layer4_kernel0_rank9_input.png"
