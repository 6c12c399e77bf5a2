"""Binary factorization of a pruning mask through NMF and thresholding.

The magnitude matrix is factorized once by NMF. For each ``S_p`` on a sweep
grid the left factor is binarized at that sparsity, and the right factor's
sparsity ``S_z`` is searched by bisection until the boolean product has the
target sparsity. The sweep point with the least unintended-pruning cost wins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .decompress import boolean_product
from .errors import ArgumentError, DimensionError, OptimizationError
from .matrix_core import BitMatrix, as_dense
from .nmf import NmfConfig, RealFactorPair, nmf
from .pruning import (
    IDENTITY,
    ManipMethod,
    keep_mask_from_order,
    magnitude,
    manipulate,
    prune_count,
    prune_order,
    quantile_keep,
)

CSV_HEADER = "s_p,s_z,s_a,cost,feasible"


@dataclass(frozen=True)
class BmfConfig:
    sp_step: float = 0.05
    sa_tol: float = 0.001
    max_bisect: int = 40

    def __post_init__(self):
        if not 0.0 < self.sp_step < 1.0:
            raise ArgumentError(f"sp_step must lie in (0, 1), got {self.sp_step}")
        if self.sa_tol <= 0:
            raise ArgumentError(f"sa_tol must be positive, got {self.sa_tol}")
        if self.max_bisect < 1:
            raise ArgumentError("max_bisect must be >= 1")

    def sp_grid(self) -> list[float]:
        n = int(math.floor(1.0 / self.sp_step + 1e-9))
        return [i * self.sp_step for i in range(n + 1)]


@dataclass(frozen=True)
class SweepRecord:
    s_p: float
    s_z: float
    s_a: float
    cost: float | None
    feasible: bool


@dataclass
class BinaryFactorPair:
    ip: BitMatrix
    iz: BitMatrix
    rank: int
    t_p: float
    t_z: float
    s_p: float
    s_z: float
    s_a: float
    cost: float | None = None
    real: RealFactorPair | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_bits(cls, ip: BitMatrix, iz: BitMatrix) -> BinaryFactorPair:
        """Wrap bare factors (e.g. read from disk); thresholds are unknown."""
        if ip.cols != iz.rows:
            raise DimensionError(f"factor shapes disagree: {ip.shape} x {iz.shape}")
        ia = boolean_product(ip, iz)
        return cls(ip, iz, ip.cols, math.nan, math.nan,
                   ip.sparsity(), iz.sparsity(), ia.sparsity())

    def decode(self) -> BitMatrix:
        return boolean_product(self.ip, self.iz)


def predicted_sparsity(s_p: float, s_z: float, k: int) -> float:
    """Product sparsity for independent factor bits with zero-rates s_p, s_z."""
    return (1.0 - (1.0 - s_p) * (1.0 - s_z)) ** k


def s_z_from(S: float, k: int, s_p: float) -> float | None:
    """Right-factor sparsity that makes the predicted product sparsity equal S.

    Returns ``None`` when no sparsity in [0, 1] works.
    """
    if not 0.0 < S < 1.0:
        raise ArgumentError(f"target sparsity must lie in (0, 1), got {S}")
    if k < 1:
        raise ArgumentError(f"rank must be >= 1, got {k}")
    if not 0.0 <= s_p <= 1.0:
        raise ArgumentError(f"s_p must lie in [0, 1], got {s_p}")
    if s_p >= 1.0:
        return None
    s_z = (S ** (1.0 / k) - s_p) / (1.0 - s_p)
    if 0.0 <= s_z <= 1.0:
        return s_z
    return None


class _Quantizer:
    """Quantile binarizer for one matrix with its sort order cached."""

    def __init__(self, m: np.ndarray):
        self.m = m
        self.size = m.size
        self.order = prune_order(m)
        self.sorted = np.ravel(m)[self.order]

    def at_count(self, n_pruned: int):
        keep = keep_mask_from_order(self.order, self.m.shape, n_pruned)
        t = math.inf if n_pruned >= self.size else float(self.sorted[n_pruned])
        return BitMatrix.from_bool(keep), t


def binarize(m, target_sparsity: float) -> BitMatrix:
    """Keep the largest entries so that exactly round(S * size) bits are zero."""
    a = as_dense(m)
    if not 0.0 <= target_sparsity <= 1.0:
        raise ArgumentError(f"target sparsity must lie in [0, 1], got {target_sparsity}")
    return BitMatrix.from_bool(quantile_keep(a, target_sparsity))


def binarize_threshold(m, threshold: float) -> BitMatrix:
    return BitMatrix.from_bool(as_dense(m) >= threshold)


def unintended_cost(m, i: BitMatrix, ia: BitMatrix) -> float:
    """Sum of magnitudes the approximation drops although the mask keeps them."""
    m = as_dense(m)
    if not (m.shape == i.shape == ia.shape):
        raise DimensionError(f"shape mismatch: {m.shape}, {i.shape}, {ia.shape}")
    lost = i.to_bool() & ~ia.to_bool()
    return float(m[lost].sum())


def _search_s_z(qz: _Quantizer, ip: BitMatrix, S: float, s_z0: float, cfg: BmfConfig):
    """Bisection for S_z given a fixed I_p.

    S_a is a non-decreasing step function of S_z that only changes when the
    pruned-entry count of M_z changes, so the search runs over that count.
    Returns ``(iz, t_z, s_z, ia, s_a, hit)`` for the last probe.
    """
    total = qz.size
    lo, hi = 0, total
    r = prune_count(s_z0, total)
    for _ in range(cfg.max_bisect):
        iz, t_z = qz.at_count(r)
        ia = boolean_product(ip, iz)
        s_a = ia.sparsity()
        if abs(s_a - S) <= cfg.sa_tol:
            return iz, t_z, r / total, ia, s_a, True
        if s_a < S:
            lo = r + 1
        else:
            hi = r - 1
        if lo > hi:
            break
        r = (lo + hi) // 2
    return iz, t_z, r / total, ia, s_a, False


def factorize_mask(w, k: int, S: float, manip: ManipMethod = IDENTITY,
                   nmf_cfg: NmfConfig | None = None,
                   bmf_cfg: BmfConfig | None = None):
    """Find binary factors ``ip (m x k)``, ``iz (k x n)`` approximating the
    quantile-``S`` magnitude mask of ``w``.

    Returns ``(BinaryFactorPair, list[SweepRecord])``; the records follow the
    sweep grid in increasing ``s_p``. Cost is always measured on the raw
    magnitudes, whatever ``manip`` does to the NMF input. Raises
    :class:`OptimizationError` if no sweep point reaches ``S`` within
    ``sa_tol``.
    """
    if not 0.0 < S < 1.0:
        raise ArgumentError(f"target sparsity must lie in (0, 1), got {S}")
    if k < 1:
        raise ArgumentError(f"rank must be >= 1, got {k}")
    nmf_cfg = nmf_cfg or NmfConfig()
    bmf_cfg = bmf_cfg or BmfConfig()

    raw = magnitude(w)
    reference = BitMatrix.from_bool(quantile_keep(raw, S))
    real = nmf(manipulate(raw, manip.resolved(S)), k, nmf_cfg)
    qp, qz = _Quantizer(real.mp), _Quantizer(real.mz)

    records: list[SweepRecord] = []
    best = None
    for s_p in bmf_cfg.sp_grid():
        s_z0 = s_z_from(S, k, min(s_p, 1.0))
        if s_z0 is None:
            records.append(SweepRecord(s_p, math.nan, math.nan, None, False))
            continue
        n_p = prune_count(s_p, qp.size)
        ip, t_p = qp.at_count(n_p)
        iz, t_z, s_z, ia, s_a, hit = _search_s_z(qz, ip, S, s_z0, bmf_cfg)
        if not hit:
            records.append(SweepRecord(s_p, s_z, s_a, None, False))
            continue
        cost = unintended_cost(raw, reference, ia)
        records.append(SweepRecord(s_p, s_z, s_a, cost, True))
        if best is None or cost < best.cost:
            best = BinaryFactorPair(ip, iz, k, t_p, t_z, n_p / qp.size, s_z, s_a,
                                    cost, real)
    if best is None:
        raise OptimizationError(
            f"no sweep point reached sparsity {S} within {bmf_cfg.sa_tol} at rank {k}"
        )
    return best, records


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.6f}"


def sweep_trace_csv(records) -> str:
    lines = [CSV_HEADER]
    for r in records:
        lines.append(",".join([_fmt(r.s_p), _fmt(r.s_z), _fmt(r.s_a), _fmt(r.cost),
                               "true" if r.feasible else "false"]))
    return "\n".join(lines) + "\n"
