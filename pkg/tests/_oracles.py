"""Independent reference implementations shared by the test modules."""

from __future__ import annotations

import numpy as np

from xnet.masks import dense_mask, group_mask, xlinear_mask
from xnet.nn.layers import MaskedLinearLayer


def naive_forward(w, b, m, alpha, x, relu):
    """Triple loop over batch, outputs and inputs."""
    bsz, n_in = x.shape
    n_out = w.shape[0]
    out = np.zeros((bsz, n_out))
    for s in range(bsz):
        for i in range(n_out):
            acc = b[i]
            for j in range(n_in):
                scale = 1.0 if m[i, j] else alpha
                acc += scale * w[i, j] * x[s, j]
            out[s, i] = max(acc, 0.0) if relu else acc
    return out


def make_mask(kind, n, param, seed=0):
    if kind == "dense":
        return dense_mask(n, n)
    if kind == "group":
        return group_mask(n, n, param)
    return xlinear_mask(n, n, param, seed)


LAYER_MATRIX = (
    [("dense", None)]
    + [("group", g) for g in (2, 4, 8)]
    + [("expander", d) for d in (2, 4)]
)
ALPHAS = (0.0, 0.3, 1.0)


def gradient_check(kind, param, alpha, seed=0, n=8, batch=5, eps=1e-6, rtol=1e-5):
    """Compare backward() with central differences of ``sum(c * y)``.

    Returns the number of entries outside ``rtol`` relative error.
    """
    rng = np.random.default_rng(seed)
    mask = make_mask(kind, n, param, seed)
    layer = MaskedLinearLayer(rng.standard_normal((n, n)), rng.standard_normal(n), mask, alpha, "relu")
    x = rng.standard_normal((batch, n))
    c = rng.standard_normal((batch, n))

    def loss():
        return float(np.sum(c * layer.forward(x)))

    # keep pre-activations away from the ReLU kink
    z = x @ layer.effective_weights().T + layer.bias
    layer.bias = layer.bias + np.where(np.abs(z).min(axis=0) < 1e-3, 0.01, 0.0)

    loss()
    d_w, d_b, d_x = layer.backward(c)
    failures = 0
    for arr, grad in ((layer.weights, d_w), (layer.bias, d_b), (x, d_x)):
        fd = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = arr[idx]
            arr[idx] = old + eps
            up = loss()
            arr[idx] = old - eps
            down = loss()
            arr[idx] = old
            fd[idx] = (up - down) / (2 * eps)
        err = np.abs(fd - grad)
        scale = np.maximum(np.abs(fd), np.abs(grad))
        failures += int(np.sum(err > rtol * scale + 1e-10))
    return failures
