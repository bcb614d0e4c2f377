"""Connectivity masks for X-Linear, X-Conv, grouped and shuffled layers.

A mask says which inputs each output reads.  It is stored row-sparse: row
``i`` lists the ``fan_in`` input indices output ``i`` is connected to.
Convolution masks work at the channel level and are replicated over every
kernel position.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import FormatError, InvalidParameterError
from .graphs import BipartiteGraph, build_random_regular_bipartite

__all__ = [
    "EXPANDER",
    "GROUP",
    "DENSE",
    "ConnectivityMask",
    "xlinear_mask",
    "xconv_mask",
    "group_mask",
    "dense_mask",
    "shuffle_permutation",
    "permutation_matrix",
    "compose_reachability",
    "dumps_xmask",
    "loads_xmask",
    "write_xmask",
    "read_xmask",
]

EXPANDER = "expander"
GROUP = "group"
DENSE = "dense"


@dataclass(frozen=True, eq=False)
class ConnectivityMask:
    """Per-output active input lists for one layer.

    ``rows`` has shape ``(n_out, fan_in)``; every row is strictly
    increasing.  ``kernel`` is ``(K_h, K_w)`` for convolution masks.
    """

    n_out: int
    n_in: int
    fan_in: int
    kind: str
    rows: np.ndarray
    kernel: tuple[int, int] | None = None
    group_count: int | None = None
    source_graph_id: str | None = None

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.int64, copy=True)
        if rows.shape != (self.n_out, self.fan_in):
            raise InvalidParameterError(
                f"rows shape {rows.shape} does not match ({self.n_out}, {self.fan_in})"
            )
        if not 1 <= self.fan_in <= self.n_in:
            raise InvalidParameterError("fan_in must lie in [1, n_in]")
        rows.sort(axis=1)
        if rows.min() < 0 or rows.max() >= self.n_in:
            raise InvalidParameterError("mask entry outside [0, n_in)")
        if self.fan_in > 1 and np.any(rows[:, 1:] == rows[:, :-1]):
            raise InvalidParameterError("mask rows must not repeat an input")
        if self.kind not in (EXPANDER, GROUP, DENSE):
            raise InvalidParameterError(f"unknown mask kind {self.kind!r}")
        if (self.kind == DENSE) != (self.fan_in == self.n_in):
            raise InvalidParameterError("kind 'dense' is used exactly when fan_in == n_in")
        if self.kind == GROUP:
            g = self.group_count
            if not g or self.n_in % g or self.n_out % g:
                raise InvalidParameterError("group count must divide n_in and n_out")
            block = np.arange(self.n_out) // (self.n_out // g)
            if np.any(rows // (self.n_in // g) != block[:, None]):
                raise InvalidParameterError("group mask row leaves its block")
        if self.kernel is not None:
            kh, kw = (self.kernel, self.kernel) if isinstance(self.kernel, int) else self.kernel
            if kh < 1 or kw < 1:
                raise InvalidParameterError("kernel dims must be positive")
            object.__setattr__(self, "kernel", (int(kh), int(kw)))
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    def __eq__(self, other):
        if not isinstance(other, ConnectivityMask):
            return NotImplemented
        return (
            (self.n_out, self.n_in, self.fan_in, self.kind, self.kernel, self.group_count)
            == (other.n_out, other.n_in, other.fan_in, other.kind, other.kernel, other.group_count)
            and np.array_equal(self.rows, other.rows)
        )

    __hash__ = None

    @property
    def kernel_size(self) -> int:
        return 1 if self.kernel is None else self.kernel[0] * self.kernel[1]

    @property
    def active_count(self) -> int:
        """Number of active weights, counting every kernel position."""
        return self.n_out * self.fan_in * self.kernel_size

    @property
    def dense_count(self) -> int:
        return self.n_out * self.n_in * self.kernel_size

    def to_dense(self) -> np.ndarray:
        """Boolean ``(n_out, n_in)`` channel mask."""
        out = np.zeros((self.n_out, self.n_in), dtype=bool)
        out[np.repeat(np.arange(self.n_out), self.fan_in), self.rows.ravel()] = True
        return out

    def column_degrees(self) -> np.ndarray:
        return np.bincount(self.rows.ravel(), minlength=self.n_in)


def dense_mask(n_out: int, n_in: int, kernel=None) -> ConnectivityMask:
    return ConnectivityMask(
        n_out, n_in, n_in, DENSE, np.tile(np.arange(n_in), (n_out, 1)), kernel=kernel
    )


def _balanced_rows(n_out: int, n_in: int, fan_in: int, rng: np.random.Generator) -> np.ndarray:
    """Deal seeded permutations of the inputs to outputs, ``fan_in`` at a time.

    Each full permutation adds one to every column degree, so column
    degrees differ by at most one.  When a row straddles two permutations
    the next one is reordered so that its head avoids the tail just used.
    """
    total = n_out * fan_in
    stream = np.empty(total, dtype=np.int64)
    pos = 0
    while pos < total:
        perm = rng.permutation(n_in)
        offset = pos % fan_in
        if offset:
            tail = stream[pos - offset : pos]
            clash = np.isin(perm, tail)
            perm = np.concatenate([perm[~clash], perm[clash]])
        take = min(n_in, total - pos)
        stream[pos : pos + take] = perm[:take]
        pos += take
    return stream.reshape(n_out, fan_in)


def xlinear_mask(
    n_out: int,
    n_in: int,
    fan_in: int,
    source: BipartiteGraph | int | None = None,
    *,
    kernel: tuple[int, int] | None = None,
) -> ConnectivityMask:
    """Expander connectivity keeping ``fan_in`` of ``n_in`` inputs per output.

    ``source`` is either a bipartite graph whose left side indexes outputs
    (``n_left = n_out``, ``n_right = n_in``, degree ``fan_in``, no parallel
    edges) or an integer seed.  With a seed and ``n_out == n_in`` the rows
    come from a seeded simple ``fan_in``-regular bipartite graph; for
    rectangular shapes a column-balanced assignment is used instead.
    """
    if not 1 <= fan_in <= n_in:
        raise InvalidParameterError(f"fan_in must lie in [1, {n_in}], got {fan_in}")
    if n_out < 1:
        raise InvalidParameterError("n_out must be positive")
    if fan_in == n_in:
        return dense_mask(n_out, n_in, kernel)
    graph_id = None
    if isinstance(source, BipartiteGraph):
        g = source
        if (g.n_left, g.n_right, g.degree) != (n_out, n_in, fan_in):
            raise InvalidParameterError(
                f"graph is {g.n_left}x{g.n_right} of degree {g.degree}, "
                f"mask needs {n_out}x{n_in} of degree {fan_in}"
            )
        if g.has_parallel_edges:
            raise InvalidParameterError("mask source graph has parallel edges")
        rows = g.adjacency
        graph_id = g.graph_id
    else:
        seed = 0 if source is None else int(source)
        if n_out == n_in:
            g = build_random_regular_bipartite(n_out, fan_in, seed, dedup=True)
            rows = g.adjacency
            graph_id = g.graph_id
        else:
            rows = _balanced_rows(n_out, n_in, fan_in, np.random.default_rng(seed))
    return ConnectivityMask(
        n_out, n_in, fan_in, EXPANDER, rows, kernel=kernel, source_graph_id=graph_id
    )


def xconv_mask(
    c_out: int,
    c_in: int,
    fan_in: int,
    kernel: tuple[int, int] | int = (3, 3),
    source: BipartiteGraph | int | None = None,
) -> ConnectivityMask:
    """Channel-level expander mask replicated over a ``K_h x K_w`` kernel."""
    if isinstance(kernel, int):
        kernel = (kernel, kernel)
    return xlinear_mask(c_out, c_in, fan_in, source, kernel=tuple(kernel))


def group_mask(c_out: int, c_in: int, g: int, kernel=None) -> ConnectivityMask:
    """Block-diagonal mask with ``g`` groups (``g = 1`` is dense)."""
    if g < 1 or c_in % g or c_out % g:
        raise InvalidParameterError(f"group count {g} must divide c_in={c_in} and c_out={c_out}")
    if g == 1:
        return dense_mask(c_out, c_in, kernel)
    per_in = c_in // g
    block = np.arange(c_out) // (c_out // g)
    rows = block[:, None] * per_in + np.arange(per_in)[None, :]
    return ConnectivityMask(c_out, c_in, per_in, GROUP, rows, kernel=kernel, group_count=g)


def shuffle_permutation(channels: int, g: int) -> np.ndarray:
    """Channel shuffle as an index array: position ``j`` takes channel ``perm[j]``.

    Equivalent to reshaping to ``(g, channels // g)``, transposing and
    flattening.
    """
    if g < 1 or channels < 1 or channels % g:
        raise InvalidParameterError(f"group count {g} must divide channels={channels}")
    perm = np.arange(channels).reshape(g, channels // g).T.ravel()
    perm.setflags(write=False)
    return perm


def permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    """Boolean matrix ``P`` with ``(P @ x)[j] = x[perm[j]]``."""
    perm = np.asarray(perm)
    mat = np.zeros((perm.size, perm.size), dtype=bool)
    mat[np.arange(perm.size), perm] = True
    return mat


def compose_reachability(*stages) -> np.ndarray:
    """Which inputs reach which outputs through a chain of masks/permutations.

    Stages are applied first to last; each is a :class:`ConnectivityMask`
    or a permutation index array.  Returns a boolean ``(n_out, n_in)``
    matrix.
    """
    reach = None
    for stage in stages:
        mat = stage.to_dense() if isinstance(stage, ConnectivityMask) else permutation_matrix(stage)
        mat = mat.astype(np.int64)
        reach = mat if reach is None else (mat @ reach > 0).astype(np.int64)
    return reach.astype(bool)


# ======================================================================================
# XMASK text format
# ======================================================================================


def dumps_xmask(mask: ConnectivityMask) -> str:
    header = ["XMASK", "1", str(mask.n_out), str(mask.n_in), str(mask.fan_in)]
    if mask.kernel is not None:
        header += [str(mask.kernel[0]), str(mask.kernel[1])]
    if mask.kind == GROUP:
        header.append(f"group={mask.group_count}")
    buf = io.StringIO()
    buf.write(" ".join(header) + "\n")
    for row in mask.rows:
        buf.write(" ".join(map(str, row.tolist())) + "\n")
    return buf.getvalue()


def loads_xmask(text: str) -> ConnectivityMask:
    lines = text.splitlines()
    if not lines:
        raise FormatError("empty XMASK document", 0)
    head = lines[0].split()
    if len(head) < 5 or head[:2] != ["XMASK", "1"]:
        raise FormatError("missing 'XMASK 1 <n_out> <n_in> <fan_in>' header", 0)
    group = None
    try:
        if head[-1].startswith("group="):
            group = int(head.pop()[len("group="):])
        nums = [int(x) for x in head[2:]]
    except ValueError as exc:
        raise FormatError(f"bad header field: {exc}", 0) from None
    if len(nums) == 3:
        (n_out, n_in, fan_in), kernel = nums, None
    elif len(nums) == 5:
        n_out, n_in, fan_in = nums[:3]
        kernel = (nums[3], nums[4])
    else:
        raise FormatError("header must carry 3 or 5 integers", 0)
    body = lines[1:]
    if len(body) != n_out:
        raise FormatError(f"expected {n_out} mask rows, found {len(body)}")
    rows = []
    for i, line in enumerate(body):
        try:
            row = [int(x) for x in line.split()]
        except ValueError:
            raise FormatError(f"line {i + 2}: non-integer input index") from None
        if len(row) != fan_in:
            raise FormatError(f"line {i + 2}: expected {fan_in} entries, found {len(row)}")
        if row != sorted(row):
            raise FormatError(f"line {i + 2}: indices not ascending")
        rows.append(row)
    if group is not None:
        kind = GROUP
    elif fan_in == n_in:
        kind = DENSE
    else:
        kind = EXPANDER
    try:
        return ConnectivityMask(
            n_out, n_in, fan_in, kind, np.array(rows, dtype=np.int64).reshape(n_out, fan_in),
            kernel=kernel, group_count=group,
        )
    except InvalidParameterError as exc:
        raise FormatError(f"invalid mask: {exc}") from None


def write_xmask(mask: ConnectivityMask, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(dumps_xmask(mask))


def read_xmask(path: str | os.PathLike) -> ConnectivityMask:
    with open(path, encoding="ascii") as fh:
        return loads_xmask(fh.read())
