"""Dense real matrices and bit-packed binary matrices.

Dense matrices are plain 2-D ``float64`` numpy arrays. Binary matrices are
stored row-major in 64-bit words: bit ``j`` of row ``i`` lives in word
``j // 64`` at bit position ``j % 64``. Padding bits past the last column are
kept at zero so that popcounts over whole words are exact.
"""

from __future__ import annotations

import numpy as np

from .errors import ArgumentError, DimensionError

WORD_BITS = 64
_WORD = np.dtype("<u8")


def words_per_row(cols: int) -> int:
    return (cols + WORD_BITS - 1) // WORD_BITS


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator; the same seed always yields the same stream."""
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ArgumentError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.Philox(seed))


def _check_dims(rows, cols):
    if int(rows) < 1 or int(cols) < 1:
        raise DimensionError(f"dimensions must be positive, got {rows}x{cols}")


def as_dense(x) -> np.ndarray:
    """Coerce ``x`` to a 2-D float64 array with at least one element."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2 or a.size == 0:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    return a


class BitMatrix:
    """Bit-packed binary matrix.

    Treat instances as immutable once built; ``set_bit`` exists for
    construction and tests.
    """

    __slots__ = ("rows", "cols", "words")

    def __init__(self, rows: int, cols: int, words: np.ndarray | None = None):
        _check_dims(rows, cols)
        self.rows = int(rows)
        self.cols = int(cols)
        nw = words_per_row(self.cols)
        if words is None:
            words = np.zeros((self.rows, nw), dtype=_WORD)
        else:
            words = np.ascontiguousarray(words, dtype=_WORD)
            if words.shape != (self.rows, nw):
                raise DimensionError(
                    f"word array shape {words.shape} does not match {self.rows}x{self.cols}"
                )
        self.words = words

    @classmethod
    def zeros(cls, rows: int, cols: int) -> BitMatrix:
        return cls(rows, cols)

    @classmethod
    def ones(cls, rows: int, cols: int) -> BitMatrix:
        return cls.from_bool(np.ones((rows, cols), dtype=bool))

    @classmethod
    def from_bool(cls, a) -> BitMatrix:
        a = np.asarray(a, dtype=bool)
        if a.ndim != 2:
            raise DimensionError(f"expected 2-D array, got shape {a.shape}")
        rows, cols = a.shape
        _check_dims(rows, cols)
        nw = words_per_row(cols)
        padded = np.zeros((rows, nw * WORD_BITS), dtype=bool)
        padded[:, :cols] = a
        packed = np.packbits(padded, axis=1, bitorder="little")
        return cls(rows, cols, packed.view(_WORD))

    @classmethod
    def identity(cls, n: int) -> BitMatrix:
        return cls.from_bool(np.eye(n, dtype=bool))

    def to_bool(self) -> np.ndarray:
        bits = np.unpackbits(self.words.view(np.uint8), axis=1, bitorder="little")
        return bits[:, : self.cols].astype(bool)

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def _check_index(self, i, j):
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"bit ({i}, {j}) outside {self.rows}x{self.cols}")

    def get_bit(self, i: int, j: int) -> bool:
        self._check_index(i, j)
        return bool((int(self.words[i, j // WORD_BITS]) >> (j % WORD_BITS)) & 1)

    def set_bit(self, i: int, j: int, value: bool = True) -> None:
        self._check_index(i, j)
        mask = np.uint64(1 << (j % WORD_BITS))
        if value:
            self.words[i, j // WORD_BITS] |= mask
        else:
            self.words[i, j // WORD_BITS] &= ~mask

    def popcount(self) -> int:
        return int(np.bitwise_count(self.words).sum(dtype=np.int64))

    def row_popcounts(self) -> np.ndarray:
        return np.bitwise_count(self.words).sum(axis=1, dtype=np.int64)

    def density(self) -> float:
        return self.popcount() / (self.rows * self.cols)

    def sparsity(self) -> float:
        return 1.0 - self.density()

    def padding_is_zero(self) -> bool:
        tail = self.cols % WORD_BITS
        if tail == 0:
            return True
        keep = np.uint64((1 << tail) - 1)
        return not np.any(self.words[:, -1] & ~keep)

    def copy(self) -> BitMatrix:
        return BitMatrix(self.rows, self.cols, self.words.copy())

    def __eq__(self, other):
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.words, other.words)

    def __hash__(self):
        return hash((self.rows, self.cols, self.words.tobytes()))

    def __repr__(self):
        return f"BitMatrix({self.rows}x{self.cols}, ones={self.popcount()})"


def density(b: BitMatrix) -> float:
    return b.density()


def random_gaussian(rows: int, cols: int, mean: float = 0.0, stddev: float = 1.0,
                    seed: int = 0) -> np.ndarray:
    """Seeded ``rows x cols`` matrix of independent normal draws."""
    _check_dims(rows, cols)
    if stddev < 0:
        raise ArgumentError(f"stddev must be non-negative, got {stddev}")
    z = make_rng(seed).standard_normal((int(rows), int(cols)))
    return mean + stddev * z


def random_bits(rows: int, cols: int, zero_prob: float, seed: int = 0) -> BitMatrix:
    """Each bit is independently 0 with probability ``zero_prob``."""
    _check_dims(rows, cols)
    if not 0.0 <= zero_prob <= 1.0:
        raise ArgumentError(f"zero_prob must lie in [0, 1], got {zero_prob}")
    u = make_rng(seed).random((int(rows), int(cols)))
    return BitMatrix.from_bool(u >= zero_prob)
