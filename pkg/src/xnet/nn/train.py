"""Deterministic mini-batch trainer with gradual grouping.

During training every masked layer multiplies its off-mask weights by a
shared ``alpha`` taken from an :class:`~xnet.nn.schedule.AlphaSchedule`,
updated once per epoch.  Without a schedule the model trains directly in
its grouped form (``alpha = 0`` throughout).  The final model is evaluated
with :func:`grouped_inference`, which only computes on-mask products.
"""

from __future__ import annotations

import csv
import io
import math
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import FormatError, InvalidParameterError, InvalidStateError, TrainingDivergedError
from ..masks import ConnectivityMask, dense_mask, group_mask, read_xmask, write_xmask, xlinear_mask
from .data import Dataset
from .layers import MaskedLinearLayer
from .schedule import AlphaSchedule

__all__ = [
    "MaskedMLP",
    "build_mlp",
    "TrainConfig",
    "EpochRecord",
    "TrainReport",
    "train",
    "grouped_inference",
    "softmax_cross_entropy",
    "save_checkpoint",
    "load_checkpoint",
]


class MaskedMLP:
    """A stack of :class:`MaskedLinearLayer`; the last layer emits logits."""

    def __init__(self, layers: Sequence[MaskedLinearLayer]):
        layers = list(layers)
        if not layers:
            raise InvalidParameterError("a model needs at least one layer")
        for i, (a, b) in enumerate(zip(layers, layers[1:])):
            if a.n_out != b.n_in:
                raise InvalidParameterError(f"layer {i} outputs {a.n_out} but layer {i + 1} expects {b.n_in}")
        self.layers = layers

    def set_alpha(self, alpha: float) -> None:
        for layer in self.layers:
            layer.alpha = alpha

    def forward(self, x: np.ndarray) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, grad: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
        grads = []
        for layer in reversed(self.layers):
            d_w, d_b, grad = layer.backward(grad)
            grads.append((d_w, d_b))
        return grads[::-1]

    def active_params(self) -> int:
        return sum(layer.active_params() for layer in self.layers)

    def copy(self) -> MaskedMLP:
        return MaskedMLP([
            MaskedLinearLayer(l.weights.copy(), l.bias.copy(), l.mask, l.alpha, l.activation)
            for l in self.layers
        ])


def build_mlp(sizes: Sequence[int], masks: Sequence[str | ConnectivityMask | None], seed: int,
              groups: int = 1, fan_in: int | None = None) -> MaskedMLP:
    """Build an MLP with widths ``sizes`` and one mask spec per layer.

    A mask spec is a :class:`ConnectivityMask`, ``None``/``"dense"``,
    ``"group"`` (uses ``groups``) or ``"expander"`` (uses ``fan_in``).
    Hidden layers use ReLU; the last layer is linear.
    """
    if len(masks) != len(sizes) - 1:
        raise InvalidParameterError("need one mask spec per layer")
    rng = np.random.default_rng(seed)
    layers = []
    for i, (n_in, n_out, spec) in enumerate(zip(sizes[:-1], sizes[1:], masks)):
        if spec is None or spec == "dense":
            mask = dense_mask(n_out, n_in)
        elif spec == "group":
            mask = group_mask(n_out, n_in, groups)
        elif spec == "expander":
            if fan_in is None:
                raise InvalidParameterError("expander layers need fan_in")
            mask = xlinear_mask(n_out, n_in, fan_in, int(rng.integers(2**31)))
        elif isinstance(spec, ConnectivityMask):
            mask = spec
        else:
            raise InvalidParameterError(f"unknown mask spec {spec!r}")
        act = "none" if i == len(masks) - 1 else "relu"
        layers.append(MaskedLinearLayer.initialise(n_in, n_out, mask, rng, act))
    return MaskedMLP(layers)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient with respect to the logits."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_p = shifted - log_z
    n = logits.shape[0]
    loss = -float(log_p[np.arange(n), labels].mean())
    grad = np.exp(log_p)
    grad[np.arange(n), labels] -= 1.0
    return loss, grad / n


@dataclass(frozen=True)
class TrainConfig:
    """Optimiser and schedule settings.

    ``alpha_schedule=None`` trains the grouped model directly.  Layers in
    ``frozen_layers`` use ``frozen_lr`` for the first ``frozen_epochs``
    epochs (default: 10% of training, at least one epoch).
    """

    seed: int
    epochs: int = 20
    learning_rate: float = 5e-4
    optimizer: str = "adam"
    batch_size: int = 32
    alpha_schedule: AlphaSchedule | None = None
    frozen_lr: float = 5e-20
    frozen_layers: tuple[int, ...] = ()
    frozen_epochs: int | None = None
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.seed is None:
            raise InvalidParameterError("an explicit seed is required")
        if self.learning_rate <= 0 or self.frozen_lr <= 0:
            raise InvalidParameterError("learning rates must be positive")
        if self.optimizer not in ("adam", "sgd"):
            raise InvalidParameterError(f"unknown optimizer {self.optimizer!r}")
        if self.epochs < 1 or self.batch_size < 1:
            raise InvalidParameterError("epochs and batch_size must be positive")

    def frozen_epoch_count(self) -> int:
        if not self.frozen_layers:
            return 0
        if self.frozen_epochs is not None:
            return self.frozen_epochs
        return max(1, math.ceil(0.1 * self.epochs))


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss: float
    accuracy: float
    alpha: float
    active_params: int


@dataclass
class TrainReport:
    epochs: list[EpochRecord] = field(default_factory=list)
    final_grouped_accuracy: float = float("nan")

    @property
    def losses(self) -> list[float]:
        return [r.loss for r in self.epochs]

    @property
    def alphas(self) -> list[float]:
        return [r.alpha for r in self.epochs]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["epoch", "loss", "acc", "alpha", "active_params"])
        for r in self.epochs:
            writer.writerow([r.epoch, repr(r.loss), repr(r.accuracy), repr(r.alpha), r.active_params])
        return buf.getvalue()


class _Adam:
    def __init__(self, shapes, beta1, beta2, eps):
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0
        self.beta1, self.beta2, self.eps = beta1, beta2, eps

    def step(self, params, grads, lrs):
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v, lr in zip(params, grads, self.m, self.v, lrs):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class _SGD:
    def step(self, params, grads, lrs):
        for p, g, lr in zip(params, grads, lrs):
            p -= lr * g


def _accuracy(logits: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(np.argmax(logits, axis=1) == labels))


def train(model: MaskedMLP, dataset: Dataset, config: TrainConfig,
          eval_set: Dataset | None = None) -> TrainReport:
    """Train ``model`` in place and return per-epoch statistics.

    Accuracy is measured on ``eval_set`` (default: the training set) after
    each epoch.  After the last epoch ``alpha`` is forced to 0 and the
    final accuracy comes from :func:`grouped_inference`.
    """
    if model.layers[0].n_in != dataset.n_features:
        raise InvalidParameterError(
            f"model expects {model.layers[0].n_in} features, dataset has {dataset.n_features}"
        )
    eval_set = dataset if eval_set is None else eval_set
    rng = np.random.default_rng(config.seed)
    params = [p for l in model.layers for p in (l.weights, l.bias)]
    if config.optimizer == "adam":
        opt = _Adam([p.shape for p in params], config.beta1, config.beta2, config.eps)
    else:
        opt = _SGD()
    frozen_until = config.frozen_epoch_count()
    schedule = config.alpha_schedule

    report = TrainReport()
    n = len(dataset)
    for epoch in range(config.epochs):
        alpha = schedule.value(epoch) if schedule is not None else 0.0
        model.set_alpha(alpha)
        lrs = []
        for i, _ in enumerate(model.layers):
            lr = config.frozen_lr if (i in config.frozen_layers and epoch < frozen_until) else config.learning_rate
            lrs += [lr, lr]
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            logits = model.forward(dataset.x[idx])
            loss, grad = softmax_cross_entropy(logits, dataset.y[idx])
            if not math.isfinite(loss):
                raise TrainingDivergedError(epoch, loss)
            total += loss * idx.size
            grads = [g for pair in model.backward(grad) for g in pair]
            opt.step(params, grads, lrs)
        mean_loss = total / n
        if not math.isfinite(mean_loss):
            raise TrainingDivergedError(epoch, mean_loss)
        acc = _accuracy(model.forward(eval_set.x), eval_set.y)
        report.epochs.append(EpochRecord(epoch, mean_loss, acc, alpha, model.active_params()))

    model.set_alpha(0.0)
    report.final_grouped_accuracy = _accuracy(grouped_inference(model, eval_set.x), eval_set.y)
    return report


def grouped_inference(model: MaskedMLP, x: np.ndarray) -> np.ndarray:
    """Forward pass computing only on-mask products; every ``alpha`` must be 0."""
    for i, layer in enumerate(model.layers):
        if layer.alpha != 0.0:
            raise InvalidStateError(f"layer {i} has alpha={layer.alpha}; grouped inference needs 0")
    for layer in model.layers:
        x = layer.sparse_forward(x)
    return x


# ======================================================================================
# Checkpoints
# ======================================================================================
#
# Little-endian binary:
#   b"XNETCKPT", u32 version, u32 n_layers, then per layer
#   u32 n_out, u32 n_in, u8 activation (0 none, 1 relu), f64 alpha,
#   u16 len + utf-8 mask file name (relative to the checkpoint),
#   f64[n_out * n_in] weights (row-major), f64[n_out] bias

_CKPT_MAGIC = b"XNETCKPT"
_CKPT_VERSION = 1
_ACT_CODES = {"none": 0, "relu": 1}


def save_checkpoint(model: MaskedMLP, path: str | os.PathLike) -> list[Path]:
    """Write the checkpoint and one XMASK file per layer; returns all paths."""
    path = Path(path)
    written = [path]
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<II", _CKPT_VERSION, len(model.layers)))
        for i, layer in enumerate(model.layers):
            mask_name = f"{path.name}.layer{i}.xmask"
            write_xmask(layer.mask, path.parent / mask_name)
            written.append(path.parent / mask_name)
            ref = mask_name.encode()
            fh.write(struct.pack("<IIBd", layer.n_out, layer.n_in, _ACT_CODES[layer.activation], layer.alpha))
            fh.write(struct.pack("<H", len(ref)))
            fh.write(ref)
            fh.write(layer.weights.astype("<f8").tobytes())
            fh.write(layer.bias.astype("<f8").tobytes())
    return written


def load_checkpoint(path: str | os.PathLike) -> MaskedMLP:
    path = Path(path)
    raw = path.read_bytes()
    pos = 0

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(raw):
            raise FormatError("checkpoint truncated", pos)
        chunk = raw[pos:pos + n]
        pos += n
        return chunk

    if take(8) != _CKPT_MAGIC:
        raise FormatError("not an xnet checkpoint", 0)
    version, n_layers = struct.unpack("<II", take(8))
    if version != _CKPT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version}", 8)
    codes = {v: k for k, v in _ACT_CODES.items()}
    layers = []
    for _ in range(n_layers):
        n_out, n_in, act, alpha = struct.unpack("<IIBd", take(struct.calcsize("<IIBd")))
        (ref_len,) = struct.unpack("<H", take(2))
        mask = read_xmask(path.parent / take(ref_len).decode())
        w = np.frombuffer(take(8 * n_out * n_in), dtype="<f8").reshape(n_out, n_in).astype(np.float64)
        b = np.frombuffer(take(8 * n_out), dtype="<f8").astype(np.float64)
        if act not in codes:
            raise FormatError(f"unknown activation code {act}")
        layers.append(MaskedLinearLayer(w, b, mask, alpha, codes[act]))
    if pos != len(raw):
        raise FormatError("trailing bytes after last layer", pos)
    return MaskedMLP(layers)
