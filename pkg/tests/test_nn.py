from __future__ import annotations

import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _oracles import ALPHAS, LAYER_MATRIX, gradient_check, make_mask, naive_forward
from xnet.accounting import LayerSpec, count
from xnet.errors import FormatError, InvalidParameterError, InvalidStateError, TrainingDivergedError
from xnet.masks import dense_mask, group_mask, xlinear_mask
from xnet.nn import (
    AlphaSchedule,
    Dataset,
    MaskedLinearLayer,
    MaskedMLP,
    TrainConfig,
    build_mlp,
    gaussian_mixture,
    grouped_inference,
    load_checkpoint,
    load_idx_dataset,
    parity,
    save_checkpoint,
    train,
)
from xnet.nn.data import write_idx
from xnet.nn.layers import backward, forward, sparse_forward
from xnet.nn.train import softmax_cross_entropy


def random_layer(mask, alpha=1.0, activation="relu", seed=0):
    rng = np.random.default_rng(seed)
    return MaskedLinearLayer(
        rng.standard_normal((mask.n_out, mask.n_in)), rng.standard_normal(mask.n_out),
        mask, alpha, activation,
    )


# --- schedule -------------------------------------------------------------------------


def test_linear_schedule_midpoint():
    s = AlphaSchedule(10)
    assert s.value(0) == 1.0 and s.value(5) == 0.5 and s.value(10) == 0.0


def test_default_schedule_halves():
    s = AlphaSchedule.default(20)
    assert s.decay_epochs == 10 and s.finetune_epochs == 10 and s.total_epochs == 20
    vals = s.values()
    assert len(vals) == 20 and all(v == 0 for v in vals[10:])


@settings(max_examples=40, deadline=None)
@given(decay=st.integers(1, 50), fine=st.integers(0, 20), curve=st.sampled_from(["linear", "cosine"]))
def test_schedule_invariants(decay, fine, curve):
    s = AlphaSchedule(decay, fine, curve)
    vals = s.values()
    assert vals[0] == 1.0
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert all(v == 0.0 for v in vals[decay:])
    assert all(0.0 <= v <= 1.0 for v in vals)


def test_schedule_validation():
    with pytest.raises(InvalidParameterError):
        AlphaSchedule(0)
    with pytest.raises(InvalidParameterError):
        AlphaSchedule(3, curve="step")


# --- forward --------------------------------------------------------------------------


def test_alpha_one_is_plain_dense():
    layer = random_layer(group_mask(8, 8, 2), alpha=1.0)
    x = np.random.default_rng(1).standard_normal((4, 8))
    assert np.array_equal(forward(layer, x), np.maximum(x @ layer.weights.T + layer.bias, 0))


def test_alpha_zero_group_is_two_half_layers():
    layer = random_layer(group_mask(8, 8, 2), alpha=0.0, activation="none")
    x = np.random.default_rng(2).standard_normal((3, 8))
    w, b = layer.weights, layer.bias
    top = x[:, :4] @ w[:4, :4].T + b[:4]
    bottom = x[:, 4:] @ w[4:, 4:].T + b[4:]
    assert np.allclose(layer.forward(x), np.hstack([top, bottom]), atol=1e-12)


def test_forward_matches_triple_loop():
    mask = xlinear_mask(8, 8, 3, 4)
    layer = random_layer(mask, alpha=0.5, seed=3)
    x = np.random.default_rng(3).standard_normal((4, 8))
    ref = naive_forward(layer.weights, layer.bias, mask.to_dense(), 0.5, x, relu=True)
    assert np.allclose(layer.forward(x), ref, atol=1e-12)


def test_forward_shape_error():
    with pytest.raises(InvalidParameterError):
        random_layer(dense_mask(3, 4)).forward(np.ones((2, 5)))


def test_alpha_range():
    layer = random_layer(dense_mask(2, 2))
    with pytest.raises(InvalidParameterError):
        layer.alpha = 1.5


# --- backward -------------------------------------------------------------------------


def test_backward_needs_forward():
    with pytest.raises(InvalidStateError):
        backward(random_layer(dense_mask(3, 3)), np.ones((1, 3)))


def test_alpha_zero_off_mask_gradient_is_zero():
    mask = group_mask(8, 8, 4)
    layer = random_layer(mask, alpha=0.0)
    x = np.random.default_rng(0).standard_normal((6, 8))
    layer.forward(x)
    d_w, _, _ = layer.backward(np.ones((6, 8)))
    assert np.all(d_w[~mask.to_dense()] == 0.0)


def test_alpha_one_gradients_are_dense():
    mask = group_mask(8, 8, 2)
    layer = random_layer(mask, alpha=1.0)
    plain = random_layer(dense_mask(8, 8), alpha=1.0)
    x = np.random.default_rng(0).standard_normal((6, 8))
    g = np.random.default_rng(1).standard_normal((6, 8))
    layer.forward(x)
    plain.forward(x)
    for a, b in zip(layer.backward(g), plain.backward(g)):
        assert np.array_equal(a, b)


@pytest.mark.parametrize("kind, param", LAYER_MATRIX)
@pytest.mark.parametrize("alpha", ALPHAS)
def test_gradient_matrix(kind, param, alpha):
    assert gradient_check(kind, param, alpha) == 0


def test_model_gradient_through_loss():
    rng = np.random.default_rng(5)
    model = build_mlp([6, 8, 8, 3], ["group", "expander", "dense"], seed=5, groups=2, fan_in=3)
    model.set_alpha(0.3)
    x = rng.standard_normal((7, 6))
    y = rng.integers(0, 3, size=7)
    _, grad = softmax_cross_entropy(model.forward(x), y)
    grads = model.backward(grad)
    eps = 1e-6
    for layer, (d_w, _) in zip(model.layers, grads):
        for idx in [(0, 0), (1, 2), (layer.n_out - 1, layer.n_in - 1)]:
            old = layer.weights[idx]
            layer.weights[idx] = old + eps
            up = softmax_cross_entropy(model.forward(x), y)[0]
            layer.weights[idx] = old - eps
            down = softmax_cross_entropy(model.forward(x), y)[0]
            layer.weights[idx] = old
            fd = (up - down) / (2 * eps)
            assert abs(fd - d_w[idx]) <= 1e-5 * max(abs(fd), abs(d_w[idx])) + 1e-9


# --- grouped inference ----------------------------------------------------------------


@pytest.mark.parametrize("kind, param", LAYER_MATRIX)
def test_sparse_forward_matches_masked_dense(kind, param):
    layer = random_layer(make_mask(kind, 8, param, 1), alpha=0.0)
    x = np.random.default_rng(2).standard_normal((5, 8))
    assert np.max(np.abs(sparse_forward(layer, x) - layer.forward(x))) <= 1e-6


def test_sparse_forward_dense_is_exact():
    layer = random_layer(dense_mask(6, 6), alpha=0.0)
    x = np.random.default_rng(2).standard_normal((5, 6))
    assert np.array_equal(layer.sparse_forward(x), layer.forward(x))


def test_sparse_forward_gather_oracle():
    mask = xlinear_mask(12, 20, 4, 9)
    layer = random_layer(mask, alpha=0.0, activation="none")
    x = np.random.default_rng(4).standard_normal((3, 20))
    ref = np.zeros((3, 12))
    for i, row in enumerate(mask.rows):
        ref[:, i] = x[:, row] @ layer.weights[i, row] + layer.bias[i]
    assert np.max(np.abs(layer.sparse_forward(x) - ref)) <= 1e-12


def test_sparse_forward_needs_alpha_zero():
    with pytest.raises(InvalidStateError):
        random_layer(group_mask(4, 4, 2), alpha=0.2).sparse_forward(np.ones((1, 4)))
    model = build_mlp([4, 4, 2], ["group", "dense"], seed=0, groups=2)
    with pytest.raises(InvalidStateError):
        grouped_inference(model, np.ones((1, 4)))


# --- training -------------------------------------------------------------------------


def small_run(seed=0, schedule=True, epochs=6):
    data = gaussian_mixture(300, 3, 8, seed=1)
    model = build_mlp([8, 16, 16, 3], ["group", "group", "dense"], seed=seed, groups=4)
    cfg = TrainConfig(seed=seed, epochs=epochs, learning_rate=5e-3,
                      alpha_schedule=AlphaSchedule.default(epochs) if schedule else None)
    return model, train(model, data, cfg)


def test_training_is_deterministic():
    _, a = small_run(3)
    _, b = small_run(3)
    assert a.losses == b.losses
    assert a.to_csv() == b.to_csv()


def test_alpha_column_matches_schedule():
    _, rep = small_run(epochs=6)
    assert rep.alphas == AlphaSchedule.default(6).values()
    assert len(rep.epochs) == 6


def test_direct_grouping_keeps_alpha_zero():
    _, rep = small_run(schedule=False)
    assert set(rep.alphas) == {0.0}


def test_active_params_match_accounting():
    model, rep = small_run(epochs=4)
    specs = [
        LayerSpec("grouped_pointwise", 8, 16, group_count=4),
        LayerSpec("grouped_pointwise", 16, 16, group_count=4),
        LayerSpec("linear", 16, 3),
    ]
    grouped = sum(count(s).params for s in specs)
    dense = sum(count(LayerSpec("linear", s.c_in, s.c_out)).params for s in specs)
    assert rep.epochs[0].active_params == dense
    assert rep.epochs[-1].active_params == grouped == model.active_params()


def test_report_csv_layout():
    _, rep = small_run(epochs=2)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "epoch,loss,acc,alpha,active_params"
    assert len(lines) == 3
    assert 0.0 <= rep.final_grouped_accuracy <= 1.0


def test_final_model_is_grouped():
    model, rep = small_run()
    assert all(layer.alpha == 0.0 for layer in model.layers)
    x = gaussian_mixture(300, 3, 8, seed=1).x
    assert np.max(np.abs(grouped_inference(model, x) - model.forward(x))) <= 1e-6


def test_divergence_reports_epoch():
    data = gaussian_mixture(50, 2, 4, seed=0)
    bad = Dataset(np.where(np.arange(50)[:, None] == 7, np.nan, data.x), data.y, 2)
    model = build_mlp([4, 4, 2], ["dense", "dense"], seed=0)
    with pytest.raises(TrainingDivergedError) as info:
        train(model, bad, TrainConfig(seed=0, epochs=2))
    assert info.value.epoch == 0


def test_frozen_layers_barely_move():
    data = gaussian_mixture(200, 2, 4, seed=0)
    model = build_mlp([4, 8, 2], ["dense", "dense"], seed=1)
    before = [l.weights.copy() for l in model.layers]
    train(model, data, TrainConfig(seed=0, epochs=1, frozen_layers=(0,)))
    assert np.allclose(model.layers[0].weights, before[0], rtol=0, atol=1e-15)
    assert not np.allclose(model.layers[1].weights, before[1])


def test_train_config_validation():
    with pytest.raises(InvalidParameterError):
        TrainConfig(seed=0, learning_rate=0)
    with pytest.raises(InvalidParameterError):
        TrainConfig(seed=0, optimizer="rmsprop")
    assert TrainConfig(seed=0, epochs=25, frozen_layers=(0,)).frozen_epoch_count() == 3


def test_model_width_mismatch():
    a = MaskedLinearLayer(np.zeros((3, 2)), np.zeros(3))
    b = MaskedLinearLayer(np.zeros((2, 4)), np.zeros(2))
    with pytest.raises(InvalidParameterError):
        MaskedMLP([a, b])


def test_sgd_runs():
    data = parity(64, 4, seed=0)
    model = build_mlp([4, 8, 2], ["dense", "dense"], seed=0)
    rep = train(model, data, TrainConfig(seed=0, epochs=2, optimizer="sgd", learning_rate=0.1))
    assert len(rep.losses) == 2


# --- checkpoints ----------------------------------------------------------------------


def test_checkpoint_round_trip(tmp_path):
    model, _ = small_run(epochs=2)
    paths = save_checkpoint(model, tmp_path / "model.ckpt")
    assert len(paths) == 4 and all(p.exists() for p in paths)
    back = load_checkpoint(tmp_path / "model.ckpt")
    for a, b in zip(model.layers, back.layers):
        assert np.array_equal(a.weights, b.weights) and np.array_equal(a.bias, b.bias)
        assert a.mask == b.mask and a.alpha == b.alpha and a.activation == b.activation
    raw = (tmp_path / "model.ckpt").read_bytes()
    assert raw[:8] == b"XNETCKPT"
    assert struct.unpack("<II", raw[8:16]) == (1, 3)


def test_checkpoint_errors(tmp_path):
    model, _ = small_run(epochs=2)
    path = tmp_path / "m.ckpt"
    save_checkpoint(model, path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-5])
    with pytest.raises(FormatError) as info:
        load_checkpoint(path)
    assert info.value.offset is not None
    path.write_bytes(b"NOTACKPT" + raw[8:])
    with pytest.raises(FormatError):
        load_checkpoint(path)
    path.write_bytes(raw + b"\0")
    with pytest.raises(FormatError):
        load_checkpoint(path)


# --- data -----------------------------------------------------------------------------


def test_idx_round_trip(tmp_path):
    images = np.arange(12, dtype=np.uint8).reshape(3, 2, 2) * 20
    write_idx(tmp_path / "img", images)
    write_idx(tmp_path / "lab", np.array([0, 2, 1], dtype=np.uint8))
    data = load_idx_dataset(tmp_path / "img", tmp_path / "lab")
    assert data.x.shape == (3, 4) and len(data) == 3
    assert data.x.max() <= 1.0 and data.x[0, 1] == pytest.approx(20 / 255)
    assert data.y.tolist() == [0, 2, 1] and data.n_classes == 3


def test_idx_wrong_magic(tmp_path):
    write_idx(tmp_path / "img", np.zeros((2, 2, 2), dtype=np.uint8))
    write_idx(tmp_path / "lab", np.zeros(2, dtype=np.uint8))
    with pytest.raises(FormatError) as info:
        load_idx_dataset(tmp_path / "lab", tmp_path / "img")
    assert info.value.offset == 0
    assert "offset 0" in str(info.value)


def test_idx_truncated(tmp_path):
    write_idx(tmp_path / "img", np.zeros((2, 2, 2), dtype=np.uint8))
    write_idx(tmp_path / "lab", np.zeros(2, dtype=np.uint8))
    raw = (tmp_path / "img").read_bytes()
    (tmp_path / "img").write_bytes(raw[:-3])
    with pytest.raises(FormatError) as info:
        load_idx_dataset(tmp_path / "img", tmp_path / "lab")
    assert info.value.offset == len(raw) - 3


def test_idx_count_mismatch(tmp_path):
    write_idx(tmp_path / "img", np.zeros((3, 2, 2), dtype=np.uint8))
    write_idx(tmp_path / "lab", np.zeros(2, dtype=np.uint8))
    with pytest.raises(FormatError):
        load_idx_dataset(tmp_path / "img", tmp_path / "lab")


def test_synthetic_data_seeded():
    a = gaussian_mixture(100, 4, 5, seed=2)
    b = gaussian_mixture(100, 4, 5, seed=2)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)
    p = parity(32, 5, seed=1)
    assert np.array_equal(p.y, p.x.sum(axis=1).astype(int) % 2)
    tr, te = a.split(0.25, seed=0)
    assert len(tr) == 75 and len(te) == 25
