"""Fully connected layer whose off-mask weights are scaled by ``alpha``.

The effective weight is ``W_eff = M * W + alpha * (1 - M) * W`` where ``M``
is the 0/1 connectivity mask.  At ``alpha = 1`` this is an ordinary dense
layer; at ``alpha = 0`` it computes exactly what the grouped/sparse layer
computes, which :func:`sparse_forward` evaluates without the zero products.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidParameterError, InvalidStateError
from ..masks import DENSE, EXPANDER, GROUP, ConnectivityMask, dense_mask

__all__ = ["MaskedLinearLayer", "forward", "backward", "sparse_forward"]

ACTIVATIONS = ("relu", "none")


class MaskedLinearLayer:
    """``y = act(x @ W_eff.T + b)`` for a batch ``x`` of shape ``(B, n_in)``."""

    def __init__(self, weights, bias, mask: ConnectivityMask | None = None,
                 alpha: float = 1.0, activation: str = "relu"):
        weights = np.array(weights, dtype=np.float64)
        bias = np.array(bias, dtype=np.float64)
        n_out, n_in = weights.shape
        if bias.shape != (n_out,):
            raise InvalidParameterError(f"bias shape {bias.shape} != ({n_out},)")
        if mask is None:
            mask = dense_mask(n_out, n_in)
        if (mask.n_out, mask.n_in) != (n_out, n_in):
            raise InvalidParameterError(
                f"mask is {mask.n_out}x{mask.n_in} but weights are {n_out}x{n_in}"
            )
        if activation not in ACTIVATIONS:
            raise InvalidParameterError(f"activation must be one of {ACTIVATIONS}")
        self.weights = weights
        self.bias = bias
        self.mask = mask
        self.activation = activation
        self.alpha = float(alpha)
        self._mask_matrix = mask.to_dense().astype(np.float64)
        self._cache = None

    @classmethod
    def initialise(cls, n_in: int, n_out: int, mask: ConnectivityMask | None,
                   rng: np.random.Generator, activation: str = "relu") -> MaskedLinearLayer:
        """He-normal weights scaled to the mask's fan-in, zero bias."""
        fan_in = n_in if mask is None else mask.fan_in
        w = rng.standard_normal((n_out, n_in)) * np.sqrt(2.0 / fan_in)
        return cls(w, np.zeros(n_out), mask, 1.0, activation)

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]

    @property
    def alpha(self) -> float:
        return self._alpha

    @alpha.setter
    def alpha(self, value: float) -> None:
        if not 0.0 <= value <= 1.0:
            raise InvalidParameterError("alpha must lie in [0, 1]")
        self._alpha = float(value)

    def multiplier(self) -> np.ndarray:
        """``M + alpha (1 - M)``, the factor applied to ``W`` elementwise."""
        m = self._mask_matrix
        return m + self.alpha * (1.0 - m)

    def effective_weights(self) -> np.ndarray:
        return self.weights * self.multiplier()

    def active_params(self) -> int:
        """Weights that influence the output at the current ``alpha``."""
        if self.alpha == 0.0:
            return self.mask.n_out * self.mask.fan_in
        return self.n_out * self.n_in

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise InvalidParameterError(f"expected input of shape (B, {self.n_in}), got {x.shape}")
        z = x @ self.effective_weights().T + self.bias
        self._cache = (x, z)
        return np.maximum(z, 0.0) if self.activation == "relu" else z

    def backward(self, grad_out: np.ndarray):
        """Gradients ``(dW, db, dx)`` for the cached forward pass.

        ``alpha`` is a constant: ``dL/dW = (M + alpha (1 - M)) * (delta^T x)``.
        """
        if self._cache is None:
            raise InvalidStateError("backward called before forward")
        x, z = self._cache
        delta = np.asarray(grad_out, dtype=np.float64)
        if delta.shape != z.shape:
            raise InvalidParameterError(f"gradient shape {delta.shape} != output shape {z.shape}")
        if self.activation == "relu":
            delta = delta * (z > 0)
        mult = self.multiplier()
        d_w = mult * (delta.T @ x)
        d_b = delta.sum(axis=0)
        d_x = delta @ (self.weights * mult)
        return d_w, d_b, d_x

    def sparse_forward(self, x: np.ndarray) -> np.ndarray:
        """Evaluate only the on-mask products; requires ``alpha == 0``.

        Group masks run one dense multiply per block, expander masks gather
        their ``fan_in`` inputs per output, dense masks multiply directly.
        """
        if self.alpha != 0.0:
            raise InvalidStateError(f"sparse evaluation needs alpha == 0, layer has {self.alpha}")
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise InvalidParameterError(f"expected input of shape (B, {self.n_in}), got {x.shape}")
        kind = self.mask.kind
        if kind == DENSE:
            z = x @ self.weights.T
        elif kind == GROUP:
            g = self.mask.group_count
            bo, bi = self.n_out // g, self.n_in // g
            z = np.empty((x.shape[0], self.n_out))
            for k in range(g):
                w_blk = self.weights[k * bo:(k + 1) * bo, k * bi:(k + 1) * bi]
                z[:, k * bo:(k + 1) * bo] = x[:, k * bi:(k + 1) * bi] @ w_blk.T
        elif kind == EXPANDER:
            rows = self.mask.rows
            w_active = np.take_along_axis(self.weights, rows, axis=1)
            z = np.einsum("bof,of->bo", x[:, rows], w_active)
        else:  # pragma: no cover
            raise InvalidParameterError(kind)
        z = z + self.bias
        return np.maximum(z, 0.0) if self.activation == "relu" else z


def forward(layer: MaskedLinearLayer, x: np.ndarray) -> np.ndarray:
    return layer.forward(x)


def backward(layer: MaskedLinearLayer, grad_out: np.ndarray):
    return layer.backward(grad_out)


def sparse_forward(layer: MaskedLinearLayer, x: np.ndarray) -> np.ndarray:
    return layer.sparse_forward(x)
