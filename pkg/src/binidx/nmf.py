"""Non-negative matrix factorization by Lee-Seung multiplicative updates.

Minimizes ``||M - Mp @ Mz||_F^2`` with ``Mp >= 0`` (m x k) and ``Mz >= 0``
(k x n). Each multiplicative step cannot increase the objective, so the
recorded history is non-increasing up to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, DomainError
from .matrix_core import as_dense, make_rng

CONVERGENCE_WINDOW = 10


@dataclass(frozen=True)
class NmfConfig:
    max_iters: int = 500
    rel_tol: float = 1e-4
    epsilon: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ArgumentError("max_iters must be >= 1")
        if self.rel_tol <= 0 or self.epsilon <= 0:
            raise ArgumentError("rel_tol and epsilon must be positive")


@dataclass
class RealFactorPair:
    mp: np.ndarray
    mz: np.ndarray
    rank: int
    final_objective: float
    iterations_run: int
    history: list[float] = field(default_factory=list, repr=False)

    def product(self) -> np.ndarray:
        return self.mp @ self.mz


def objective(m: np.ndarray, mp: np.ndarray, mz: np.ndarray) -> float:
    r = m - mp @ mz
    return float(np.einsum("ij,ij->", r, r))


def init_factors(m: np.ndarray, k: int, seed: int):
    """Uniform (0, 1] entries scaled by sqrt(mean(M) / k)."""
    rows, cols = m.shape
    rng = make_rng(seed)
    scale = np.sqrt(m.mean() / k)
    mp = (1.0 - rng.random((rows, k))) * scale
    mz = (1.0 - rng.random((k, cols))) * scale
    return mp, mz


def nmf(m, k: int, cfg: NmfConfig | None = None) -> RealFactorPair:
    cfg = cfg or NmfConfig()
    m = as_dense(m)
    if k < 1:
        raise ArgumentError(f"rank must be >= 1, got {k}")
    if np.any(m < 0) or not np.all(np.isfinite(m)):
        raise DomainError("NMF input must be finite and non-negative")

    eps = cfg.epsilon
    mp, mz = init_factors(m, k, cfg.seed)
    history = [objective(m, mp, mz)]
    it = 0
    while it < cfg.max_iters:
        mp *= (m @ mz.T) / (mp @ (mz @ mz.T) + eps)
        mz *= (mp.T @ m) / ((mp.T @ mp) @ mz + eps)
        it += 1
        history.append(objective(m, mp, mz))
        if it >= CONVERGENCE_WINDOW:
            old = history[-1 - CONVERGENCE_WINDOW]
            if old <= 0.0 or (old - history[-1]) / old < cfg.rel_tol:
                break
    return RealFactorPair(mp, mz, int(k), history[-1], it, history)
