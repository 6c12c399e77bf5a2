"""Index formats for pruning masks and their exact storage in bits.

Formats:

* ``bitmap``  one bit per weight.
* ``csr16``   16-bit column index per kept weight plus 32-bit row pointers.
* ``csr5``    5-bit relative codes plus 32-bit row pointers. Code ``g`` in
  0..30 skips ``g`` columns and marks the next one as kept; code 31 is a
  filler that skips 31 columns without marking anything. Each row starts at
  column 0, and after a kept column the cursor moves one past it.
* ``bmf``     binary factors, ``k * (m + n)`` bits per (block) factorization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, CapacityError, DimensionError
from .matrix_core import BitMatrix
from .tiling import TilingPlan, tiled_index_bits

ROW_PTR_BITS = 32
CSR16_INDEX_BITS = 16
CSR5_CODE_BITS = 5
CSR5_FILLER = 31
CSR16_MAX_COLS = 1 << 16

FORMATS = ("bitmap", "csr16", "csr5", "bmf")


@dataclass(frozen=True)
class Csr16Index:
    col_indices: np.ndarray  # uint16
    row_ptr: np.ndarray  # uint32, rows + 1


@dataclass(frozen=True)
class Csr5Relative:
    codes: np.ndarray  # uint8, each < 32
    row_ptr: np.ndarray  # uint32 offsets into codes, rows + 1


def _row_ptr(counts) -> np.ndarray:
    ptr = np.zeros(len(counts) + 1, dtype=np.uint32)
    np.cumsum(counts, out=ptr[1:])
    return ptr


def encode_csr16(mask: BitMatrix) -> Csr16Index:
    if mask.cols > CSR16_MAX_COLS:
        raise CapacityError(f"{mask.cols} columns do not fit 16-bit indices")
    rows, cols = np.nonzero(mask.to_bool())
    counts = np.bincount(rows, minlength=mask.rows)
    return Csr16Index(cols.astype(np.uint16), _row_ptr(counts))


def _check_row_ptr(row_ptr, m, length):
    row_ptr = np.asarray(row_ptr)
    if row_ptr.shape != (m + 1,) or row_ptr[0] != 0 or row_ptr[-1] != length \
            or np.any(np.diff(row_ptr.astype(np.int64)) < 0):
        raise DimensionError("row_ptr is inconsistent with the index payload")


def decode_csr16(idx: Csr16Index, m: int, n: int) -> BitMatrix:
    _check_row_ptr(idx.row_ptr, m, len(idx.col_indices))
    cols = idx.col_indices.astype(np.int64)
    if cols.size and cols.max() >= n:
        raise DimensionError("column index out of range")
    rows = np.repeat(np.arange(m), np.diff(idx.row_ptr.astype(np.int64)))
    out = np.zeros((m, n), dtype=bool)
    out[rows, cols] = True
    return BitMatrix.from_bool(out)


def _row_codes(kept_cols):
    codes = []
    cursor = 0
    for c in kept_cols:
        gap = int(c) - cursor
        while gap >= CSR5_FILLER:
            codes.append(CSR5_FILLER)
            gap -= CSR5_FILLER
        codes.append(gap)
        cursor = int(c) + 1
    return codes


def encode_csr5(mask: BitMatrix) -> Csr5Relative:
    bits = mask.to_bool()
    codes = []
    counts = []
    for row in bits:
        rc = _row_codes(np.flatnonzero(row))
        codes.extend(rc)
        counts.append(len(rc))
    return Csr5Relative(np.asarray(codes, dtype=np.uint8), _row_ptr(counts))


def decode_csr5(idx: Csr5Relative, m: int, n: int) -> BitMatrix:
    _check_row_ptr(idx.row_ptr, m, len(idx.codes))
    out = np.zeros((m, n), dtype=bool)
    ptr = idx.row_ptr
    for i in range(m):
        cursor = 0
        for code in idx.codes[ptr[i]:ptr[i + 1]]:
            code = int(code)
            if code > CSR5_FILLER:
                raise DimensionError(f"code {code} does not fit 5 bits")
            cursor += code
            if code == CSR5_FILLER:
                continue
            if cursor >= n:
                raise DimensionError("relative index runs past the end of the row")
            out[i, cursor] = True
            cursor += 1
    return BitMatrix.from_bool(out)


def csr5_code_count(mask: BitMatrix) -> int:
    """Number of 5-bit codes (kept entries + fillers) without building them."""
    bits = mask.to_bool()
    total = 0
    for row in bits:
        cols = np.flatnonzero(row)
        if cols.size == 0:
            continue
        gaps = np.diff(cols, prepend=-1) - 1
        total += cols.size + int((gaps // CSR5_FILLER).sum())
    return total


def bmf_bits(m: int, n: int, rank: int | None = None, plan: TilingPlan | None = None) -> int:
    if plan is not None:
        return tiled_index_bits(plan, m, n)
    if rank is None or rank < 1:
        raise ArgumentError("bmf size needs a rank or a tiling plan")
    return int(rank) * (m + n)


def size_bits(fmt: str, mask: BitMatrix | None = None, *, shape=None,
              rank: int | None = None, plan: TilingPlan | None = None) -> int:
    """Index storage of ``mask`` (or of a bare ``shape`` for bitmap/bmf) in bits."""
    if mask is not None:
        m, n = mask.shape
    elif shape is not None:
        m, n = shape
    else:
        raise ArgumentError("size_bits needs a mask or a shape")
    if fmt == "bitmap":
        return m * n
    if fmt == "bmf":
        return bmf_bits(m, n, rank, plan)
    if fmt not in FORMATS:
        raise ArgumentError(f"unknown format {fmt!r}")
    if mask is None:
        raise ArgumentError(f"{fmt} size depends on the mask contents")
    if fmt == "csr16":
        return CSR16_INDEX_BITS * mask.popcount() + ROW_PTR_BITS * (m + 1)
    return CSR5_CODE_BITS * csr5_code_count(mask) + ROW_PTR_BITS * (m + 1)


def compression_ratio(m: int, n: int, k: int) -> float:
    if min(m, n, k) < 1:
        raise ArgumentError("compression ratio needs positive m, n, k")
    return (m * n) / (k * (m + n))


def to_kb(bits: int) -> float:
    """Decimal kilobytes (1000 bytes)."""
    return bits / 8 / 1000


def to_kib(bits: int) -> float:
    return bits / 8 / 1024


@dataclass(frozen=True)
class FormatRow:
    name: str
    bits: int
    ratio: float
    reference: bool = False

    @property
    def kb(self) -> float:
        return to_kb(self.bits)

    @property
    def kib(self) -> float:
        return to_kib(self.bits)


@dataclass
class FormatReport:
    rows: list[FormatRow]
    m: int
    n: int
    sparsity: float | None = None
    rank: int | None = None
    tiling: str = "1x1"
    meta: dict = field(default_factory=dict)

    @property
    def bitmap_bits(self) -> int:
        return self.m * self.n

    def row(self, name: str) -> FormatRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def computed(self) -> list[FormatRow]:
        return [r for r in self.rows if not r.reference]

    def smallest(self) -> FormatRow:
        return min(self.computed(), key=lambda r: r.bits)

    def to_csv(self) -> str:
        lines = ["format,bits,kb,kib,ratio,source"]
        for r in self.rows:
            src = "reference" if r.reference else "computed"
            lines.append(f"{r.name},{r.bits},{r.kb:.6f},{r.kib:.6f},{r.ratio:.6f},{src}")
        return "\n".join(lines) + "\n"


def format_report(mask: BitMatrix | None = None, plan: TilingPlan | None = None,
                  reference_constants: dict | None = None, *, shape=None,
                  rank: int | None = None) -> FormatReport:
    """Compare every index format for one mask (or a bare shape + plan).

    ``reference_constants`` maps a label to a fixed size in bits (e.g. a
    published Viterbi-encoder figure); those rows are reported, never computed.
    """
    if mask is not None:
        m, n = mask.shape
    elif shape is not None:
        m, n = shape
    else:
        raise ArgumentError("format_report needs a mask or a shape")
    if plan is None and rank is not None:
        plan = TilingPlan(1, 1, rank)
    bitmap = m * n

    computed = [("bitmap", bitmap)]
    if mask is not None:
        computed.append(("csr16", size_bits("csr16", mask)))
        computed.append(("csr5", size_bits("csr5", mask)))
    if plan is not None:
        computed.append(("bmf", tiled_index_bits(plan, m, n)))
    rows = [FormatRow(name, bits, bitmap / bits) for name, bits in computed]
    for label, bits in (reference_constants or {}).items():
        bits = int(bits)
        rows.append(FormatRow(str(label), bits, bitmap / bits, reference=True))

    return FormatReport(
        rows, m, n,
        sparsity=mask.sparsity() if mask is not None else None,
        rank=plan.rank if plan is not None else None,
        tiling=plan.label if plan is not None else "-",
    )
