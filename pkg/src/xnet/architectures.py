"""Layer tables for the reference models: AlexNet, VGG-16 (CIFAR) and ERFNet.

The X-variants keep the dense model's output widths and replace the input
width of selected layers with an expander fan-in ``D``.
"""

from __future__ import annotations

from .accounting import LayerSpec
from .errors import InvalidParameterError

__all__ = ["alexnet", "vgg16_cifar", "erfnet"]

# (c_out, c_in, kernel, output side) of the convolutional trunk
_ALEXNET_CONV = [
    (64, 3, 11, 55),
    (192, 64, 5, 27),
    (384, 192, 3, 13),
    (256, 384, 3, 13),
    (256, 256, 3, 13),
]
# (c_in, c_out) of the classifier, then fan-in per variant
_ALEXNET_LINEAR = [(9216, 4096), (4096, 4096), (4096, 1000)]
_ALEXNET_FAN_IN = {"x1": (1024, 512, 1024), "x2": (512, 512, 1024)}

_VGG_CONV = [
    (64, 3, 32), (64, 64, 32),
    (128, 64, 16), (128, 128, 16),
    (256, 128, 8), (256, 256, 8), (256, 256, 8),
    (512, 256, 4), (512, 512, 4), (512, 512, 4),
    (512, 512, 2), (512, 512, 2), (512, 512, 2),
]
_VGG_FAN_IN = {
    "x1": (3, 64, 64, 64, 32, 32, 32, 32, 32, 32, 32, 32, 32),
    "x2": (3, 64, 64, 64, 16, 16, 16, 16, 16, 16, 16, 16, 16),
}
_VGG_LINEAR = [(512, 512, {"dense": 512, "x1": 128, "x2": 128}), (512, 10, None)]


def _check_variant(variant: str) -> None:
    if variant not in ("dense", "x1", "x2"):
        raise InvalidParameterError(f"variant must be 'dense', 'x1' or 'x2', got {variant!r}")


def alexnet(variant: str = "dense", linear_only: bool = False) -> list[LayerSpec]:
    """AlexNet on 224x224 ImageNet; X-variants sparsify the three linear layers."""
    _check_variant(variant)
    specs = []
    if not linear_only:
        for i, (co, ci, k, side) in enumerate(_ALEXNET_CONV):
            specs.append(LayerSpec("dense_conv", ci, co, k, (side, side), name=f"conv{i + 1}"))
    for i, (ci, co) in enumerate(_ALEXNET_LINEAR):
        name = f"fc{i + 6}"
        if variant == "dense":
            specs.append(LayerSpec("linear", ci, co, name=name))
        else:
            d = _ALEXNET_FAN_IN[variant][i]
            specs.append(LayerSpec("masked_linear", ci, co, fan_in=d, name=name))
    return specs


def vgg16_cifar(variant: str = "dense", conv_only: bool = False) -> list[LayerSpec]:
    """VGG-16 on 32x32 CIFAR-10 with 3x3 convolutions."""
    _check_variant(variant)
    specs = []
    for i, (co, ci, side) in enumerate(_VGG_CONV):
        name = f"conv{i + 1}"
        d = ci if variant == "dense" else _VGG_FAN_IN[variant][i]
        if d == ci:
            specs.append(LayerSpec("dense_conv", ci, co, 3, (side, side), name=name))
        else:
            specs.append(LayerSpec("masked_conv", ci, co, 3, (side, side), fan_in=d, name=name))
    if conv_only:
        return specs
    for i, (ci, co, fan) in enumerate(_VGG_LINEAR):
        name = f"fc{i + 1}"
        d = ci if fan is None else fan[variant]
        if d == ci:
            specs.append(LayerSpec("linear", ci, co, name=name))
        else:
            specs.append(LayerSpec("masked_linear", ci, co, fan_in=d, name=name))
    return specs


def erfnet(num_classes: int = 19, width: int = 1024, height: int = 512) -> list[LayerSpec]:
    """ERFNet encoder-decoder for a ``width x height`` input.

    Downsampler blocks concatenate a strided 3x3 convolution producing
    ``c_out - c_in`` maps with a max-pool of the input, so only the
    convolution is counted.  Upsampling layers are stride-2 transposed
    convolutions (3x3, and 2x2 for the final classifier).
    """
    w2, h2 = width // 2, height // 2
    w4, h4 = width // 4, height // 4
    w8, h8 = width // 8, height // 8
    specs = [
        LayerSpec("dense_conv", 3, 13, 3, (h2, w2), name="down1"),
        LayerSpec("dense_conv", 16, 48, 3, (h4, w4), name="down2"),
    ]
    specs += [LayerSpec("non_bt_1d", 64, 64, 3, (h4, w4), name=f"nb64_{i}") for i in range(5)]
    specs.append(LayerSpec("dense_conv", 64, 64, 3, (h8, w8), name="down3"))
    for i, dil in enumerate((2, 4, 8, 16, 2, 4, 8, 16)):
        specs.append(LayerSpec("non_bt_1d", 128, 128, 3, (h8, w8), name=f"nb128_d{dil}_{i}"))
    specs.append(LayerSpec("deconv", 128, 64, 3, (h4, w4), name="up1"))
    specs += [LayerSpec("non_bt_1d", 64, 64, 3, (h4, w4), name=f"dec64_{i}") for i in range(2)]
    specs.append(LayerSpec("deconv", 64, 16, 3, (h2, w2), name="up2"))
    specs += [LayerSpec("non_bt_1d", 16, 16, 3, (h2, w2), name=f"dec16_{i}") for i in range(2)]
    specs.append(LayerSpec("deconv", 16, num_classes, 2, (height, width), name="classifier"))
    return specs
