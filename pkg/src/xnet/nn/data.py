"""Datasets for the desk-scale trainer: seeded synthetic tasks and IDX files."""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from ..errors import FormatError, InvalidParameterError

__all__ = ["Dataset", "gaussian_mixture", "parity", "load_idx_dataset", "write_idx"]

IDX_LABELS_MAGIC = 0x00000801
IDX_IMAGES_MAGIC = 0x00000803


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray
    y: np.ndarray
    n_classes: int

    def __post_init__(self):
        if self.x.ndim != 2 or self.y.shape != (self.x.shape[0],):
            raise InvalidParameterError("x must be (N, F) and y must be (N,)")
        if len(self.y) == 0:
            raise InvalidParameterError("dataset is empty")

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def n_features(self) -> int:
        return self.x.shape[1]

    def split(self, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
        """Seeded random train/test split."""
        n = len(self)
        n_test = int(round(n * test_fraction))
        if not 0 < n_test < n:
            raise InvalidParameterError("split leaves an empty side")
        order = np.random.default_rng(seed).permutation(n)
        te, tr = order[:n_test], order[n_test:]
        return (Dataset(self.x[tr], self.y[tr], self.n_classes),
                Dataset(self.x[te], self.y[te], self.n_classes))


def gaussian_mixture(n_samples: int = 2000, n_classes: int = 4, n_features: int = 16,
                     seed: int = 0, clusters_per_class: int = 2,
                     separation: float = 2.5) -> Dataset:
    """Each class is an equal mixture of ``clusters_per_class`` unit Gaussians.

    Cluster centres are drawn with standard deviation ``separation / sqrt(F)``
    per coordinate, so centres sit about ``separation * sqrt(2)`` apart.
    """
    rng = np.random.default_rng(seed)
    n_clusters = n_classes * clusters_per_class
    centres = rng.standard_normal((n_clusters, n_features)) * separation / np.sqrt(n_features)
    cluster = rng.integers(0, n_clusters, size=n_samples)
    x = centres[cluster] + rng.standard_normal((n_samples, n_features))
    y = cluster % n_classes
    return Dataset(x, y.astype(np.int64), n_classes)


def parity(n_samples: int = 1024, n_bits: int = 8, seed: int = 0, noise: float = 0.0) -> Dataset:
    """Random ``{0,1}`` vectors labelled by the parity of their bits."""
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=(n_samples, n_bits))
    y = bits.sum(axis=1) % 2
    x = bits.astype(np.float64) + noise * rng.standard_normal(bits.shape)
    return Dataset(x, y.astype(np.int64), 2)


def _read_idx(path: str | os.PathLike, expected_magic: int) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4:
        raise FormatError(f"{os.fspath(path)}: truncated magic number", len(raw))
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise FormatError(
            f"{os.fspath(path)}: bad magic 0x{magic:08x}, expected 0x{expected_magic:08x}", 0
        )
    ndim = magic & 0xFF
    header_end = 4 + 4 * ndim
    if len(raw) < header_end:
        raise FormatError(f"{os.fspath(path)}: truncated dimension header", len(raw))
    dims = struct.unpack(f">{ndim}I", raw[4:header_end])
    size = int(np.prod(dims, dtype=np.int64))
    if len(raw) < header_end + size:
        raise FormatError(
            f"{os.fspath(path)}: expected {size} data bytes, found {len(raw) - header_end}",
            len(raw),
        )
    if len(raw) > header_end + size:
        raise FormatError(f"{os.fspath(path)}: trailing bytes after data", header_end + size)
    return np.frombuffer(raw, dtype=np.uint8, count=size, offset=header_end).reshape(dims)


def load_idx_dataset(images_path: str | os.PathLike, labels_path: str | os.PathLike) -> Dataset:
    """Read an unsigned-byte IDX image/label pair.

    Images are flattened and scaled to ``[0, 1]``; labels become class
    indices.
    """
    images = _read_idx(images_path, IDX_IMAGES_MAGIC)
    labels = _read_idx(labels_path, IDX_LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise FormatError(
            f"{images.shape[0]} images but {labels.shape[0]} labels", None
        )
    x = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    y = labels.astype(np.int64)
    n_classes = int(y.max()) + 1 if y.size else 0
    return Dataset(x, y, n_classes)


def write_idx(path: str | os.PathLike, array: np.ndarray) -> None:
    """Write a ``uint8`` array as IDX (1-D labels or 3-D images)."""
    arr = np.ascontiguousarray(array, dtype=np.uint8)
    magic = 0x00000800 | arr.ndim
    with open(path, "wb") as fh:
        fh.write(struct.pack(">I", magic))
        fh.write(struct.pack(f">{arr.ndim}I", *arr.shape))
        fh.write(arr.tobytes())
