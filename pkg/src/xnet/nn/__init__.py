"""Masked fully connected layers and a deterministic gradual-grouping trainer."""

from __future__ import annotations

from .data import Dataset, gaussian_mixture, load_idx_dataset, parity
from .layers import MaskedLinearLayer
from .schedule import AlphaSchedule
from .train import (
    MaskedMLP,
    TrainConfig,
    TrainReport,
    build_mlp,
    grouped_inference,
    load_checkpoint,
    save_checkpoint,
    train,
)
