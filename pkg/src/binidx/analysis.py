"""Monte Carlo checks of the product-sparsity formula and figure data."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bmf import BmfConfig, factorize_mask, predicted_sparsity
from .decompress import boolean_product
from .errors import ArgumentError, DimensionError
from .matrix_core import BitMatrix, as_dense, random_bits
from .nmf import NmfConfig
from .pruning import IDENTITY, ManipMethod, magnitude, quantile_threshold
from .sparse_formats import compression_ratio

DEFAULT_BINS = 64


@dataclass(frozen=True)
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    total: int

    def to_csv(self) -> str:
        lines = ["bin_lo,bin_hi,count"]
        for lo, hi, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts):
            lines.append(f"{lo:.6f},{hi:.6f},{int(c)}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class MonteCarloResult:
    s_p: float
    s_z: float
    k: int
    predicted: float
    empirical: float
    trials: int
    std_error: float
    rows: int
    cols: int

    @property
    def abs_error(self) -> float:
        return abs(self.predicted - self.empirical)

    def z_score(self) -> float:
        if self.std_error == 0.0:
            return 0.0 if self.abs_error == 0.0 else math.inf
        return self.abs_error / self.std_error


MC_HEADER = "s_p,s_z,k,rows,cols,trials,predicted,empirical,abs_error,std_error"


def monte_carlo_csv(results) -> str:
    lines = [MC_HEADER]
    for r in results:
        lines.append(f"{r.s_p:.6f},{r.s_z:.6f},{r.k},{r.rows},{r.cols},{r.trials},"
                     f"{r.predicted:.6f},{r.empirical:.6f},{r.abs_error:.6f},"
                     f"{r.std_error:.6f}")
    return "\n".join(lines) + "\n"


def product_sparsity_std(s_p: float, s_z: float, k: int, rows: int, cols: int) -> float:
    """Exact standard deviation of the empirical sparsity of one random product.

    Entries sharing a row (or column) are correlated through the shared factor
    row (column), so the plain binomial error underestimates the spread.
    """
    pa, pb = 1.0 - s_p, 1.0 - s_z
    mu = predicted_sparsity(s_p, s_z, k)
    same_row = (1.0 - 2.0 * pa * pb + pa * pb * pb) ** k - mu * mu
    same_col = (1.0 - 2.0 * pa * pb + pa * pa * pb) ** k - mu * mu
    cells = rows * cols
    var = (cells * mu * (1.0 - mu)
           + cells * (cols - 1) * same_row
           + cells * (rows - 1) * same_col) / (cells * cells)
    return math.sqrt(max(var, 0.0))


def verify_product_sparsity(s_p: float, s_z: float, k: int, rows: int = 1000,
                            cols: int = 1000, seed: int = 0,
                            trials: int = 1) -> MonteCarloResult:
    """Compare the empirical sparsity of random factor products with the formula."""
    for name, p in (("s_p", s_p), ("s_z", s_z)):
        if not 0.0 <= p <= 1.0:
            raise ArgumentError(f"{name} must lie in [0, 1], got {p}")
    if k < 1 or trials < 1:
        raise ArgumentError("k and trials must be >= 1")
    ss = np.random.SeedSequence(int(seed))
    seeds = ss.generate_state(2 * trials, dtype=np.uint64)
    samples = []
    for t in range(trials):
        ip = random_bits(rows, k, s_p, int(seeds[2 * t]))
        iz = random_bits(k, cols, s_z, int(seeds[2 * t + 1]))
        samples.append(boolean_product(ip, iz).sparsity())
    se = product_sparsity_std(s_p, s_z, k, rows, cols) / math.sqrt(trials)
    return MonteCarloResult(s_p, s_z, int(k), predicted_sparsity(s_p, s_z, k),
                            float(np.mean(samples)), trials, se, rows, cols)


def default_edges(w, bins: int = DEFAULT_BINS) -> np.ndarray:
    w = as_dense(w)
    top = float(np.abs(w).max())
    if top == 0.0:
        top = 1.0
    return np.linspace(-top, top, bins + 1)


def survivor_histogram(w, mask: BitMatrix, bins=DEFAULT_BINS) -> Histogram:
    """Histogram of the weights the mask keeps.

    ``bins`` is either a bin count (uniform over [-max|W|, max|W|]) or an
    explicit sequence of edges.
    """
    w = as_dense(w)
    if w.shape != mask.shape:
        raise DimensionError(f"shape mismatch: {w.shape} vs {mask.shape}")
    edges = default_edges(w, bins) if np.isscalar(bins) else np.asarray(bins, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ArgumentError("bin edges must be strictly increasing")
    kept = w[mask.to_bool()]
    counts, _ = np.histogram(kept, bins=edges)
    return Histogram(edges, counts.astype(np.int64), int(counts.sum()))


def near_zero_survivors(w, mask: BitMatrix, band: float) -> int:
    """Kept weights whose magnitude is below ``band``."""
    if band <= 0:
        raise ArgumentError("band must be positive")
    w = as_dense(w)
    if w.shape != mask.shape:
        raise DimensionError(f"shape mismatch: {w.shape} vs {mask.shape}")
    return int(np.count_nonzero(mask.to_bool() & (np.abs(w) < band)))


@dataclass(frozen=True)
class TradeoffRow:
    k: int
    compression_ratio: float
    cost: float
    near_zero: int
    s_a: float


TRADEOFF_HEADER = "k,compression_ratio,cost,near_zero_survivors,s_a"


def tradeoff_csv(rows) -> str:
    lines = [TRADEOFF_HEADER]
    for r in rows:
        lines.append(f"{r.k},{r.compression_ratio:.6f},{r.cost:.6f},{r.near_zero},{r.s_a:.6f}")
    return "\n".join(lines) + "\n"


def rank_tradeoff_table(w, S: float, ranks, manip: ManipMethod = IDENTITY,
                        nmf_cfg: NmfConfig | None = None,
                        bmf_cfg: BmfConfig | None = None) -> list[TradeoffRow]:
    """One row per rank, all with the same seeds.

    Near-zero survivors use the pruning threshold of ``w`` at ``S`` as band.
    """
    w = as_dense(w)
    m, n = w.shape
    band = quantile_threshold(magnitude(w), S)
    out = []
    for k in ranks:
        pair, _ = factorize_mask(w, int(k), S, manip, nmf_cfg, bmf_cfg)
        mask = pair.decode()
        out.append(TradeoffRow(int(k), compression_ratio(m, n, int(k)), float(pair.cost),
                               near_zero_survivors(w, mask, band), pair.s_a))
    return out
