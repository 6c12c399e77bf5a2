"""Byte-exact file formats for weights (WMAT), masks (BMSK) and factors (BIDX).

All header fields are little-endian u32. Mask payloads store each row in
``ceil(cols / 8)`` bytes, bit ``j`` at byte ``j // 8``, position ``j % 8``
(LSB first), with zero padding bits.

WMAT::

    "WMAT" | version=1 | rows | cols | dtype=1 (f32) | rows*cols f32 LE

BMSK::

    "BMSK" | version=1 | rows | cols | payload

BIDX::

    "BIDX" | version=1 | m | n | p | q |
      per block, row-major block order:
      rank | block_rows | block_cols | I_p payload | I_z payload
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .bmf import BinaryFactorPair
from .errors import FormatError
from .matrix_core import BitMatrix, as_dense
from .tiling import TiledFactorization, TilingPlan, assemble_mask

VERSION = 1
DTYPE_F32 = 1
WMAT, BMSK, BIDX = b"WMAT", b"BMSK", b"BIDX"

_U32 = struct.Struct("<I")


class _Reader:
    def __init__(self, data: bytes):
        self.data = memoryview(data)
        self.pos = 0

    def take(self, n: int) -> memoryview:
        if self.pos + n > len(self.data):
            raise FormatError(f"truncated file: need {n} bytes at offset {self.pos}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def header(self, magic: bytes):
        got = bytes(self.take(4))
        if got != magic:
            raise FormatError(f"bad magic {got!r}, expected {magic!r}")
        version = self.u32()
        if version != VERSION:
            raise FormatError(f"unsupported version {version}")

    def done(self):
        if self.pos != len(self.data):
            raise FormatError(f"{len(self.data) - self.pos} trailing bytes")


def _dims(rows, cols):
    if rows < 1 or cols < 1:
        raise FormatError(f"invalid dimensions {rows}x{cols}")
    return rows, cols


def mask_payload(b: BitMatrix) -> bytes:
    row_bytes = (b.cols + 7) // 8
    return b.words.view(np.uint8)[:, :row_bytes].tobytes()


def mask_from_payload(buf, rows: int, cols: int) -> BitMatrix:
    row_bytes = (cols + 7) // 8
    raw = np.frombuffer(buf, dtype=np.uint8)
    if raw.size != rows * row_bytes:
        raise FormatError("mask payload has the wrong length")
    raw = raw.reshape(rows, row_bytes)
    tail = cols % 8
    if tail and np.any(raw[:, -1] >> tail):
        raise FormatError("non-zero padding bits in mask payload")
    nw = (cols + 63) // 64
    words = np.zeros((rows, nw * 8), dtype=np.uint8)
    words[:, :row_bytes] = raw
    return BitMatrix(rows, cols, words.view("<u8"))


def dumps_weights(w) -> bytes:
    w = as_dense(w)
    rows, cols = w.shape
    head = WMAT + struct.pack("<IIII", VERSION, rows, cols, DTYPE_F32)
    return head + w.astype("<f4").tobytes()


def loads_weights(data: bytes) -> np.ndarray:
    r = _Reader(data)
    r.header(WMAT)
    rows, cols = _dims(r.u32(), r.u32())
    dtype = r.u32()
    if dtype != DTYPE_F32:
        raise FormatError(f"unsupported dtype code {dtype}")
    payload = r.take(rows * cols * 4)
    r.done()
    w = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(rows, cols)
    if not np.all(np.isfinite(w)):
        raise FormatError("weights contain NaN or infinity")
    return w


def dumps_mask(b: BitMatrix) -> bytes:
    return BMSK + struct.pack("<III", VERSION, b.rows, b.cols) + mask_payload(b)


def loads_mask(data: bytes) -> BitMatrix:
    r = _Reader(data)
    r.header(BMSK)
    rows, cols = _dims(r.u32(), r.u32())
    b = mask_from_payload(r.take(rows * ((cols + 7) // 8)), rows, cols)
    r.done()
    return b


def dumps_factors(t: TiledFactorization) -> bytes:
    m, n = t.shape
    p, q = t.plan.grid_rows, t.plan.grid_cols
    parts = [BIDX, struct.pack("<IIIII", VERSION, m, n, p, q)]
    for a, b, (r0, r1), (c0, c1) in t.plan.blocks(m, n):
        pair = t.blocks[a][b]
        if pair.ip.shape != (r1 - r0, pair.rank) or pair.iz.shape != (pair.rank, c1 - c0):
            raise FormatError(f"block ({a}, {b}) factors do not match the plan extents")
        parts.append(struct.pack("<III", pair.rank, r1 - r0, c1 - c0))
        parts.append(mask_payload(pair.ip))
        parts.append(mask_payload(pair.iz))
    return b"".join(parts)


def loads_factors(data: bytes) -> TiledFactorization:
    r = _Reader(data)
    r.header(BIDX)
    m, n = _dims(r.u32(), r.u32())
    p, q = _dims(r.u32(), r.u32())
    try:
        plan = TilingPlan(p, q, 1)
        extents = [(a, b, rows, cols) for a, b, rows, cols in plan.blocks(m, n)]
    except ValueError as e:
        raise FormatError(f"invalid tiling in header: {e}") from e
    grid = [[None] * q for _ in range(p)]
    ranks = {}
    for a, b, (r0, r1), (c0, c1) in extents:
        k, br, bc = r.u32(), r.u32(), r.u32()
        if k < 1 or (br, bc) != (r1 - r0, c1 - c0):
            raise FormatError(f"block ({a}, {b}) record disagrees with the tiling")
        ip = mask_from_payload(r.take(br * ((k + 7) // 8)), br, k)
        iz = mask_from_payload(r.take(k * ((bc + 7) // 8)), k, bc)
        grid[a][b] = BinaryFactorPair.from_bits(ip, iz)
        ranks[(a, b)] = k
    r.done()
    base = ranks[(0, 0)]
    rank_map = {key: k for key, k in ranks.items() if k != base}
    t = TiledFactorization(TilingPlan(p, q, base, rank_map), (m, n), grid)
    t.sparsity = assemble_mask(t).sparsity()
    return t


def sniff(data: bytes) -> bytes:
    return bytes(data[:4])


def write_bytes(path, data: bytes) -> Path:
    path = Path(path)
    path.write_bytes(data)
    return path


def read_weights(path) -> np.ndarray:
    return loads_weights(Path(path).read_bytes())


def write_weights(path, w) -> Path:
    return write_bytes(path, dumps_weights(w))


def read_mask(path) -> BitMatrix:
    return loads_mask(Path(path).read_bytes())


def write_mask(path, b: BitMatrix) -> Path:
    return write_bytes(path, dumps_mask(b))


def read_factors(path) -> TiledFactorization:
    return loads_factors(Path(path).read_bytes())


def write_factors(path, t: TiledFactorization) -> Path:
    return write_bytes(path, dumps_factors(t))
