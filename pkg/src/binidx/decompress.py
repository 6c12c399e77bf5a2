"""Boolean matrix product for mask reconstruction, and mask application."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .matrix_core import BitMatrix, as_dense


def boolean_product(ip: BitMatrix, iz: BitMatrix) -> BitMatrix:
    """OR-of-ANDs product ``ip (m x k) (x) iz (k x n)``.

    Row ``i`` of the result is the OR of the packed rows of ``iz`` selected by
    the set bits of row ``i`` of ``ip``. The loop runs over the inner dimension
    so every step is a word-wide OR across all output rows at once.
    """
    if ip.cols != iz.rows:
        raise DimensionError(f"inner dimensions differ: {ip.shape} x {iz.shape}")
    select = ip.to_bool()
    out = np.zeros((ip.rows, iz.words.shape[1]), dtype=iz.words.dtype)
    for l in range(ip.cols):
        rows = select[:, l]
        if rows.any():
            out[rows] |= iz.words[l]
    return BitMatrix(ip.rows, iz.cols, out)


@dataclass(frozen=True)
class DecodedMask:
    mask: BitMatrix
    rank: int
    source: tuple = ()


def decode(ip: BitMatrix, iz: BitMatrix, source: tuple = ()) -> DecodedMask:
    return DecodedMask(boolean_product(ip, iz), ip.cols, tuple(source))


def _same_shape(a, b):
    if tuple(a.shape) != tuple(b.shape):
        raise DimensionError(f"shape mismatch: {tuple(a.shape)} vs {tuple(b.shape)}")


def apply_mask(w, mask: BitMatrix) -> np.ndarray:
    w = as_dense(w)
    _same_shape(w, mask)
    return np.where(mask.to_bool(), w, 0.0)


def mismatch_count(a: BitMatrix, b: BitMatrix) -> tuple[int, int]:
    """``(ones_lost, ones_gained)`` going from ``a`` to ``b``."""
    _same_shape(a, b)
    diff = a.words ^ b.words
    lost = int(np.bitwise_count(diff & a.words).sum(dtype=np.int64))
    gained = int(np.bitwise_count(diff & b.words).sum(dtype=np.int64))
    return lost, gained
