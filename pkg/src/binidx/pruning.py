"""Magnitude pruning masks and weight-magnitude manipulation.

Quantile selection is rank based: entries are stably sorted by value (ties
keep row-major index order) and the first ``round(S * size)`` of them are
pruned. The resulting masks therefore have an exact popcount even when many
entries share a value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DomainError
from .matrix_core import BitMatrix, as_dense


def prune_count(sparsity: float, total: int) -> int:
    """``round(sparsity * total)`` with halves rounded up."""
    return int(math.floor(sparsity * total + 0.5))


def prune_order(values: np.ndarray) -> np.ndarray:
    """Flat indices in pruning order: smallest value first, lower index first on ties."""
    return np.argsort(np.ravel(values), kind="stable")


def keep_mask_from_order(order: np.ndarray, shape, n_pruned: int) -> np.ndarray:
    keep = np.ones(order.size, dtype=bool)
    keep[order[:n_pruned]] = False
    return keep.reshape(shape)


def quantile_keep(values, sparsity: float) -> np.ndarray:
    a = np.asarray(values)
    return keep_mask_from_order(prune_order(a), a.shape, prune_count(sparsity, a.size))


def _check_sparsity(s, *, allow_one=False):
    hi_ok = s <= 1.0 if allow_one else s < 1.0
    if not (0.0 <= s and hi_ok):
        bound = "[0, 1]" if allow_one else "[0, 1)"
        raise ArgumentError(f"sparsity must lie in {bound}, got {s}")


@dataclass(frozen=True)
class PruneSpec:
    """Either an explicit magnitude threshold or a target sparsity."""

    target_sparsity: float | None = None
    threshold: float | None = None

    def __post_init__(self):
        if (self.target_sparsity is None) == (self.threshold is None):
            raise ArgumentError("exactly one of target_sparsity / threshold must be set")
        if self.target_sparsity is not None:
            _check_sparsity(self.target_sparsity)
        if self.threshold is not None and self.threshold < 0:
            raise ArgumentError(f"threshold must be non-negative, got {self.threshold}")

    @classmethod
    def quantile(cls, sparsity: float) -> PruneSpec:
        return cls(target_sparsity=sparsity)

    @classmethod
    def explicit(cls, threshold: float) -> PruneSpec:
        return cls(threshold=threshold)


@dataclass(frozen=True)
class ManipMethod:
    """Pre-factorization transform of the magnitude matrix.

    ``amplify`` with ``sparsity=None`` means "use the pruning target", resolved
    by the caller through :meth:`resolved`.
    """

    kind: str = "identity"
    sparsity: float | None = None

    def __post_init__(self):
        if self.kind not in ("identity", "square", "amplify"):
            raise ArgumentError(f"unknown manipulation {self.kind!r}")
        if self.sparsity is not None:
            if self.kind != "amplify":
                raise ArgumentError("only amplify takes a sparsity")
            _check_sparsity(self.sparsity)

    @classmethod
    def amplify(cls, sparsity: float | None = None) -> ManipMethod:
        return cls("amplify", sparsity)

    @classmethod
    def parse(cls, name: str) -> ManipMethod:
        """CLI spelling: ``none``, ``square`` or ``amplify``."""
        key = name.strip().lower()
        if key in ("none", "identity"):
            return IDENTITY
        if key == "square":
            return SQUARE
        if key == "amplify":
            return cls.amplify()
        raise ArgumentError(f"unknown manipulation {name!r}")

    def resolved(self, default_sparsity: float) -> ManipMethod:
        if self.kind == "amplify" and self.sparsity is None:
            return ManipMethod.amplify(default_sparsity)
        return self

    @property
    def cli_name(self) -> str:
        return "none" if self.kind == "identity" else self.kind


IDENTITY = ManipMethod("identity")
SQUARE = ManipMethod("square")


def magnitude(w) -> np.ndarray:
    return np.abs(as_dense(w))


def quantile_threshold(m, sparsity: float) -> float:
    """Magnitude at which a quantile prune at ``sparsity`` makes its cut.

    This is the ``(r+1)``-th smallest entry for ``r = round(sparsity * size)``:
    every entry strictly below it is pruned and entries equal to it are pruned
    in index order until ``r`` are gone. Returns ``inf`` when everything is
    pruned.
    """
    a = as_dense(m)
    _check_sparsity(sparsity, allow_one=True)
    r = prune_count(sparsity, a.size)
    if r >= a.size:
        return math.inf
    return float(np.partition(a.ravel(), r)[r])


def magnitude_mask(w, spec: PruneSpec) -> BitMatrix:
    """Keep-mask of ``w`` (1 = weight survives)."""
    mag = magnitude(w)
    if spec.threshold is not None:
        return BitMatrix.from_bool(mag >= spec.threshold)
    return BitMatrix.from_bool(quantile_keep(mag, spec.target_sparsity))


def manipulate(m, method: ManipMethod) -> np.ndarray:
    a = as_dense(m)
    if np.any(a < 0):
        raise DomainError("manipulation expects a non-negative magnitude matrix")
    if method.kind == "identity":
        return a.copy()
    if method.kind == "square":
        return a * a
    if method.sparsity is None:
        raise ArgumentError("amplify needs a sparsity; call ManipMethod.resolved first")
    s = method.sparsity
    t = quantile_threshold(a, s)
    return np.where(a >= t, a / (1.0 - s), a)
