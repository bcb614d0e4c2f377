"""Per-epoch schedule for the off-mask weight multiplier ``alpha``."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import InvalidParameterError


@dataclass(frozen=True)
class AlphaSchedule:
    """``alpha`` decays from 1 to 0 over ``decay_epochs``, then stays 0.

    The ``finetune_epochs`` that follow train the already-grouped model.
    ``curve`` is ``"linear"`` or ``"cosine"``.
    """

    decay_epochs: int
    finetune_epochs: int = 0
    curve: str = "linear"

    def __post_init__(self):
        if self.decay_epochs < 1:
            raise InvalidParameterError("decay_epochs must be at least 1")
        if self.finetune_epochs < 0:
            raise InvalidParameterError("finetune_epochs must be non-negative")
        if self.curve not in ("linear", "cosine"):
            raise InvalidParameterError(f"unknown curve {self.curve!r}")

    @classmethod
    def default(cls, total_epochs: int, curve: str = "linear") -> AlphaSchedule:
        """Decay over the first half of training, fine-tune over the rest."""
        if total_epochs < 2:
            raise InvalidParameterError("gradual grouping needs at least 2 epochs")
        decay = total_epochs // 2
        return cls(decay, total_epochs - decay, curve)

    @property
    def total_epochs(self) -> int:
        return self.decay_epochs + self.finetune_epochs

    def value(self, epoch: int) -> float:
        if epoch < 0:
            raise InvalidParameterError("epoch must be non-negative")
        if epoch >= self.decay_epochs:
            return 0.0
        frac = epoch / self.decay_epochs
        if self.curve == "linear":
            return 1.0 - frac
        return 0.5 * (1.0 + math.cos(math.pi * frac))

    def values(self) -> list[float]:
        return [self.value(e) for e in range(self.total_epochs)]
