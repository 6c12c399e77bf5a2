"""Tile-based factorization: one independent binary factorization per block."""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bmf import BinaryFactorPair, BmfConfig, factorize_mask
from .errors import ArgumentError, OptimizationError, PlanError
from .matrix_core import BitMatrix, as_dense
from .nmf import NmfConfig
from .pruning import IDENTITY, ManipMethod


def _ceil_div(a, b):
    return -(-a // b)


def block_seed(seed: int, a: int, b: int) -> int:
    """Per-block NMF seed.

    Block (0, 0) reuses the global seed so a 1x1 plan reproduces the untiled
    pipeline exactly; other blocks draw from a SeedSequence keyed by their
    coordinates.
    """
    if a == 0 and b == 0:
        return int(seed)
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(a), int(b)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class TilingPlan:
    grid_rows: int
    grid_cols: int
    rank: int = 1
    rank_map: dict = field(default_factory=dict, hash=False, compare=True)

    def __post_init__(self):
        if self.grid_rows < 1 or self.grid_cols < 1:
            raise PlanError(f"grid must be positive, got {self.grid_rows}x{self.grid_cols}")
        for key, k in {None: self.rank, **self.rank_map}.items():
            if int(k) < 1:
                raise PlanError(f"rank for block {key} must be >= 1, got {k}")

    @classmethod
    def parse(cls, tiles: str, rank: int) -> TilingPlan:
        """Build from a ``"PxQ"`` string."""
        try:
            p, q = (int(v) for v in tiles.lower().split("x"))
        except ValueError:
            raise ArgumentError(f"tiling must look like PxQ, got {tiles!r}") from None
        return cls(p, q, rank)

    def rank_of(self, a: int, b: int) -> int:
        return int(self.rank_map.get((a, b), self.rank))

    def validate(self, m: int, n: int) -> None:
        if self.grid_rows > m or self.grid_cols > n:
            raise PlanError(
                f"{self.grid_rows}x{self.grid_cols} grid does not fit a {m}x{n} matrix"
            )
        # ceil-sized leading blocks can leave trailing blocks empty, e.g. 10 rows in 4 strips
        if _ceil_div(m, self.grid_rows) * (self.grid_rows - 1) >= m or \
                _ceil_div(n, self.grid_cols) * (self.grid_cols - 1) >= n:
            raise PlanError(
                f"{self.grid_rows}x{self.grid_cols} grid leaves an empty block on {m}x{n}"
            )

    def row_extents(self, m: int) -> list[tuple[int, int]]:
        step = _ceil_div(m, self.grid_rows)
        return [(a * step, min((a + 1) * step, m)) for a in range(self.grid_rows)]

    def col_extents(self, n: int) -> list[tuple[int, int]]:
        step = _ceil_div(n, self.grid_cols)
        return [(b * step, min((b + 1) * step, n)) for b in range(self.grid_cols)]

    def blocks(self, m: int, n: int):
        """Yield ``(a, b, (r0, r1), (c0, c1))`` in row-major block order."""
        self.validate(m, n)
        cols = self.col_extents(n)
        for a, rows in enumerate(self.row_extents(m)):
            for b, cext in enumerate(cols):
                yield a, b, rows, cext

    @property
    def label(self) -> str:
        return f"{self.grid_rows}x{self.grid_cols}"


@dataclass
class TiledFactorization:
    plan: TilingPlan
    shape: tuple[int, int]
    blocks: list[list[BinaryFactorPair]]
    sparsity: float = float("nan")
    sweeps: dict = field(default_factory=dict, repr=False)

    @property
    def cost(self) -> float:
        return float(sum(bp.cost or 0.0 for row in self.blocks for bp in row))

    def index_bits(self) -> int:
        return sum(bp.rank * (bp.ip.rows + bp.iz.cols) for row in self.blocks for bp in row)


def tiled_index_bits(plan: TilingPlan, m: int, n: int) -> int:
    return sum(plan.rank_of(a, b) * ((r1 - r0) + (c1 - c0))
               for a, b, (r0, r1), (c0, c1) in plan.blocks(m, n))


def assemble_mask(t: TiledFactorization) -> BitMatrix:
    m, n = t.shape
    out = np.zeros((m, n), dtype=bool)
    for a, b, (r0, r1), (c0, c1) in t.plan.blocks(m, n):
        out[r0:r1, c0:c1] = t.blocks[a][b].decode().to_bool()
    return BitMatrix.from_bool(out)


def tiled_factorize(w, plan: TilingPlan, S: float, manip: ManipMethod = IDENTITY,
                    nmf_cfg: NmfConfig | None = None, bmf_cfg: BmfConfig | None = None,
                    workers: int = 1) -> TiledFactorization:
    """Factorize every block of ``w`` at the same target sparsity.

    Blocks share no state, so ``workers > 1`` gives the same bits as a serial
    run.
    """
    w = as_dense(w)
    m, n = w.shape
    nmf_cfg = nmf_cfg or NmfConfig()
    specs = list(plan.blocks(m, n))

    def run(spec):
        a, b, (r0, r1), (c0, c1) = spec
        cfg = dataclasses.replace(nmf_cfg, seed=block_seed(nmf_cfg.seed, a, b))
        try:
            return factorize_mask(w[r0:r1, c0:c1], plan.rank_of(a, b), S, manip,
                                  cfg, bmf_cfg)
        except OptimizationError as e:
            raise OptimizationError(f"block ({a}, {b}): {e}") from e

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, specs))
    else:
        results = [run(s) for s in specs]

    grid = [[None] * plan.grid_cols for _ in range(plan.grid_rows)]
    sweeps = {}
    for (a, b, _, _), (pair, records) in zip(specs, results):
        grid[a][b] = pair
        sweeps[(a, b)] = records
    t = TiledFactorization(plan, (m, n), grid, sweeps=sweeps)
    t.sparsity = assemble_mask(t).sparsity()
    return t
