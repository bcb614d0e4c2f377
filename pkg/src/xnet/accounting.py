"""Parameter and multiply-accumulate counts for dense and structured layers.

All counts are exact integers.  ``macs`` counts multiply-accumulates; the
two FLOP conventions found in the literature are both reported:
``flops_multadd`` (one per MAC) and ``flops_2x`` (two per MAC).  Bias terms
are excluded unless ``include_bias=True``; activations are never counted.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import FormatError, InvalidParameterError

__all__ = [
    "KINDS",
    "LayerSpec",
    "CostReport",
    "count",
    "count_model",
    "count_layers",
    "depthwise_separable_ratio",
    "dumps_layer_specs",
    "loads_layer_specs",
    "read_layer_specs",
    "write_layer_specs",
    "cost_table_dict",
    "cost_table_json",
    "cost_table_csv",
    "MAC_CONVENTION",
]

KINDS = (
    "dense_conv",
    "depthwise_separable",
    "grouped_pointwise",
    "non_bt_1d",
    "masked_linear",
    "masked_conv",
    "linear",
    "deconv",
)
_MASKED = ("masked_linear", "masked_conv")
_LINEAR = ("linear", "masked_linear")

MAC_CONVENTION = (
    "macs = multiply-accumulates; flops_multadd = macs (mult-add convention); "
    "flops_2x = 2 * macs; biases and activations excluded unless stated"
)


def _pair(value) -> tuple[int, int]:
    if isinstance(value, int):
        return (value, value)
    a, b = value
    return (int(a), int(b))


@dataclass(frozen=True)
class LayerSpec:
    """One layer's shape.

    ``spatial`` is the output ``(H, W)``.  For ``deconv`` the input grid is
    ``spatial / stride``.  ``non_bt_1d`` is the factorised residual block
    (``Kx1, 1xK, Kx1, 1xK`` at constant width); dilation does not change
    its cost.
    """

    kind: str
    c_in: int
    c_out: int
    kernel: tuple[int, int] = (1, 1)
    spatial: tuple[int, int] = (1, 1)
    group_count: int = 1
    fan_in: int | None = None
    stride: int = 2
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "kernel", _pair(self.kernel))
        object.__setattr__(self, "spatial", _pair(self.spatial))
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown layer kind {self.kind!r}")
        dims = (self.c_in, self.c_out, *self.kernel, *self.spatial, self.group_count, self.stride)
        if any(int(d) < 1 for d in dims):
            raise InvalidParameterError("all layer dimensions must be positive")
        g = self.group_count
        if g > 1 and self.kind not in ("grouped_pointwise",):
            raise InvalidParameterError(f"group_count only applies to grouped_pointwise, not {self.kind}")
        if self.kind == "grouped_pointwise" and (self.c_in % g or self.c_out % g):
            raise InvalidParameterError(f"g={g} must divide c_in={self.c_in} and c_out={self.c_out}")
        if self.kind in _MASKED:
            if self.fan_in is None or not 1 <= self.fan_in <= self.c_in:
                raise InvalidParameterError("masked layers need 1 <= fan_in <= c_in")
        elif self.fan_in is not None:
            raise InvalidParameterError(f"fan_in only applies to masked kinds, not {self.kind}")
        if self.kind == "non_bt_1d" and self.c_in != self.c_out:
            raise InvalidParameterError("non_bt_1d keeps the channel count")
        if self.kind in _LINEAR and (self.kernel != (1, 1) or self.spatial != (1, 1)):
            raise InvalidParameterError("linear layers have no kernel or spatial extent")
        if self.kind == "deconv" and (self.spatial[0] % self.stride or self.spatial[1] % self.stride):
            raise InvalidParameterError("deconv output size must be a multiple of the stride")


@dataclass(frozen=True)
class CostReport:
    params: int
    macs: int
    flops_multadd: int = field(init=False)
    flops_2x: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "flops_multadd", self.macs)
        object.__setattr__(self, "flops_2x", 2 * self.macs)

    def __add__(self, other: CostReport) -> CostReport:
        return CostReport(self.params + other.params, self.macs + other.macs)


def _weights_and_bias(spec: LayerSpec) -> tuple[int, int]:
    kh, kw = spec.kernel
    k2 = kh * kw
    ci, co = spec.c_in, spec.c_out
    kind = spec.kind
    if kind in ("dense_conv", "deconv", "linear"):
        return k2 * ci * co, co
    if kind == "depthwise_separable":
        return k2 * ci + ci * co, ci + co
    if kind == "grouped_pointwise":
        return k2 * ci * co // spec.group_count, co
    if kind == "non_bt_1d":
        # two Kx1 and two 1xK convolutions, c -> c
        return 2 * (kh + kw) * ci * co, 4 * co
    if kind in _MASKED:
        return k2 * spec.fan_in * co, co
    raise InvalidParameterError(kind)  # pragma: no cover


def count(spec: LayerSpec, include_bias: bool = False) -> CostReport:
    """Exact parameter and MAC count of one layer."""
    weights, bias = _weights_and_bias(spec)
    h, w = spec.spatial
    if spec.kind == "deconv":
        positions = (h // spec.stride) * (w // spec.stride)
    else:
        positions = h * w
    params = weights + (bias if include_bias else 0)
    return CostReport(params=params, macs=weights * positions)


def count_layers(specs: Sequence[LayerSpec], include_bias: bool = False) -> list[CostReport]:
    return [count(s, include_bias) for s in specs]


def count_model(specs: Sequence[LayerSpec], include_bias: bool = False) -> CostReport:
    """Field-wise sum over layers."""
    if not specs:
        raise InvalidParameterError("a model needs at least one layer")
    total = CostReport(0, 0)
    for rep in count_layers(specs, include_bias):
        total = total + rep
    return total


def depthwise_separable_ratio(c_in: int, c_out: int, kernel: int, spatial=(1, 1)) -> Fraction:
    """Exact MAC ratio of a depthwise-separable layer to its dense equivalent."""
    sep = count(LayerSpec("depthwise_separable", c_in, c_out, kernel, spatial))
    dense = count(LayerSpec("dense_conv", c_in, c_out, kernel, spatial))
    return Fraction(sep.macs, dense.macs)


# ======================================================================================
# Layer-spec text files
# ======================================================================================
#
# One layer per line:  kind c_in c_out K H W g D [stride=S] [name=N]
# K is "3" or "3x1"; g and D may be "-".  '#' starts a comment.


def _fmt_kernel(k: tuple[int, int]) -> str:
    return str(k[0]) if k[0] == k[1] else f"{k[0]}x{k[1]}"


def dumps_layer_specs(specs: Iterable[LayerSpec]) -> str:
    lines = ["# kind c_in c_out K H W g D"]
    for s in specs:
        parts = [
            s.kind, str(s.c_in), str(s.c_out), _fmt_kernel(s.kernel),
            str(s.spatial[0]), str(s.spatial[1]),
            str(s.group_count) if s.kind == "grouped_pointwise" else "-",
            str(s.fan_in) if s.fan_in is not None else "-",
        ]
        if s.kind == "deconv":
            parts.append(f"stride={s.stride}")
        if s.name:
            parts.append(f"name={s.name}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def loads_layer_specs(text: str) -> list[LayerSpec]:
    specs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        extras = {}
        while tokens and "=" in tokens[-1]:
            key, _, value = tokens.pop().partition("=")
            extras[key] = value
        if len(tokens) not in (6, 7, 8):
            raise FormatError(f"line {lineno}: expected 6-8 fields, found {len(tokens)}")
        tokens += ["-"] * (8 - len(tokens))
        kind, c_in, c_out, k, h, w, g, d = tokens
        try:
            kernel = tuple(int(x) for x in k.split("x")) if "x" in k else int(k)
            spec = LayerSpec(
                kind=kind,
                c_in=int(c_in),
                c_out=int(c_out),
                kernel=kernel,
                spatial=(int(h), int(w)),
                group_count=1 if g == "-" else int(g),
                fan_in=None if d == "-" else int(d),
                stride=int(extras.get("stride", 2)),
                name=extras.get("name", ""),
            )
        except (ValueError, InvalidParameterError) as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
        specs.append(spec)
    return specs


def read_layer_specs(path: str | os.PathLike) -> list[LayerSpec]:
    with open(path, encoding="utf-8") as fh:
        return loads_layer_specs(fh.read())


def write_layer_specs(specs: Iterable[LayerSpec], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_layer_specs(specs))


def cost_table_dict(specs: Sequence[LayerSpec], include_bias: bool = False) -> dict:
    """Per-layer and total costs, with the counting convention spelled out."""
    rows = []
    for i, (spec, rep) in enumerate(zip(specs, count_layers(specs, include_bias))):
        rows.append({"index": i, "name": spec.name, "kind": spec.kind, **asdict(rep)})
    return {
        "convention": MAC_CONVENTION,
        "include_bias": include_bias,
        "layers": rows,
        "total": asdict(count_model(specs, include_bias)),
    }


def cost_table_json(specs: Sequence[LayerSpec], include_bias: bool = False) -> str:
    return json.dumps(cost_table_dict(specs, include_bias), indent=2)


def cost_table_csv(specs: Sequence[LayerSpec], include_bias: bool = False) -> str:
    table = cost_table_dict(specs, include_bias)
    buf = io.StringIO()
    fields = ["index", "name", "kind", "params", "macs", "flops_multadd", "flops_2x"]
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in table["layers"]:
        writer.writerow(row)
    writer.writerow({"index": "total", "name": "", "kind": "", **table["total"]})
    return buf.getvalue()
