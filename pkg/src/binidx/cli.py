"""Command-line driver.

Exit codes: 0 success, 2 bad input or configuration, 3 infeasible
optimization, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .analysis import (
    monte_carlo_csv,
    rank_tradeoff_table,
    tradeoff_csv,
    verify_product_sparsity,
)
from .bmf import BmfConfig, sweep_trace_csv
from .errors import BinidxError, FormatError, OptimizationError
from .fileio import (
    BIDX,
    BMSK,
    dumps_factors,
    dumps_mask,
    loads_factors,
    loads_mask,
    loads_weights,
    sniff,
)
from .nmf import NmfConfig
from .pruning import ManipMethod
from .sparse_formats import compression_ratio, format_report
from .tiling import TilingPlan, assemble_mask, tiled_factorize

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_INVARIANT = 0, 2, 3, 4


class InvariantError(BinidxError):
    pass


@dataclass
class RunConfig:
    rank: int | None = None
    ranks: list[int] = field(default_factory=list)
    sparsity: float | None = None
    tiles: str = "1x1"
    manip: str = "none"
    sp_step: float = 0.05
    sa_tol: float = 0.001
    nmf_iters: int = 500
    seed: int = 0
    out: str | None = None

    def validate(self, need_rank=False, need_sparsity=False) -> None:
        if need_rank and self.rank is None and not self.ranks:
            raise FormatError("--rank is required")
        for k in ([self.rank] if self.rank is not None else []) + list(self.ranks):
            if k < 1:
                raise FormatError(f"rank must be >= 1, got {k}")
        if need_sparsity and self.sparsity is None:
            raise FormatError("--sparsity is required")
        if self.sparsity is not None and not 0.0 < self.sparsity < 1.0:
            raise FormatError(f"sparsity must lie in (0, 1), got {self.sparsity}")
        if not 0 <= self.seed < 2**64:
            raise FormatError("seed must be a 64-bit unsigned integer")
        # constructing these runs their own range checks
        TilingPlan.parse(self.tiles, self.rank or 1)
        ManipMethod.parse(self.manip)
        self.bmf_config()
        self.nmf_config()

    def plan(self) -> TilingPlan:
        return TilingPlan.parse(self.tiles, self.rank)

    def bmf_config(self) -> BmfConfig:
        return BmfConfig(sp_step=self.sp_step, sa_tol=self.sa_tol)

    def nmf_config(self) -> NmfConfig:
        return NmfConfig(max_iters=self.nmf_iters, seed=self.seed)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def provenance_lines(cfg: RunConfig, command: str) -> str:
    meta = {"tool": "binidx", "version": __version__, "command": command,
            "seed": cfg.seed, "config": cfg.as_dict()}
    return "# " + json.dumps(meta, sort_keys=True) + "\n"


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _shape(text: str) -> tuple[int, int]:
    try:
        m, n = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected MxN, got {text!r}")
    return m, n


def _config(args) -> RunConfig:
    return RunConfig(
        rank=getattr(args, "rank", None),
        ranks=list(getattr(args, "ranks", None) or []),
        sparsity=getattr(args, "sparsity", None),
        tiles=getattr(args, "tiles", "1x1"),
        manip=getattr(args, "manip", "none"),
        sp_step=getattr(args, "sp_step", 0.05),
        sa_tol=getattr(args, "sa_tol", 0.001),
        nmf_iters=getattr(args, "nmf_iters", 500),
        seed=args.seed,
        out=args.out,
    )


def _emit(text: str, out: str | None, name: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    (d / name).write_text(text)


def _read(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise FormatError(f"cannot read {path}: {e}") from e


def cmd_factorize(args) -> int:
    cfg = _config(args)
    cfg.validate(need_rank=True, need_sparsity=True)
    if cfg.out is None:
        raise FormatError("--out is required for factorize")
    w = loads_weights(_read(args.input))
    plan = cfg.plan()
    plan.validate(*w.shape)
    manip = ManipMethod.parse(cfg.manip)

    t = tiled_factorize(w, plan, cfg.sparsity, manip, cfg.nmf_config(), cfg.bmf_config(),
                        workers=args.workers)
    mask = assemble_mask(t)
    blob = dumps_factors(t)
    if assemble_mask(loads_factors(blob)) != mask:
        raise InvariantError("factor file does not reproduce the assembled mask")

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "factors.bidx").write_bytes(blob)
    (out / "mask.bmsk").write_bytes(dumps_mask(mask))
    head = provenance_lines(cfg, "factorize")
    for (a, b), records in t.sweeps.items():
        name = "sweep.csv" if plan.label == "1x1" else f"sweep_{a}_{b}.csv"
        (out / name).write_text(head + sweep_trace_csv(records))

    m, n = w.shape
    bits = t.index_bits()
    summary = {
        "version": __version__,
        "config": cfg.as_dict(),
        "shape": [m, n],
        "target_sparsity": cfg.sparsity,
        "achieved_sparsity": mask.sparsity(),
        "cost": t.cost,
        "index_bits": bits,
        "bitmap_bits": m * n,
        "compression_ratio": (m * n) / bits,
        "blocks": [
            {"block": [a, b], "rank": t.blocks[a][b].rank, "s_p": t.blocks[a][b].s_p,
             "s_z": t.blocks[a][b].s_z, "s_a": t.blocks[a][b].s_a,
             "t_p": t.blocks[a][b].t_p, "t_z": t.blocks[a][b].t_z,
             "cost": t.blocks[a][b].cost}
            for a in range(plan.grid_rows) for b in range(plan.grid_cols)
        ],
    }
    if plan.label == "1x1":
        summary["formula_ratio"] = compression_ratio(m, n, cfg.rank)
    text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    (out / "summary.json").write_text(text)
    print(f"sparsity={mask.sparsity():.6f} cost={t.cost:.6f} index_bits={bits} "
          f"ratio={(m * n) / bits:.4f}")
    return EXIT_OK


def cmd_decode(args) -> int:
    t = loads_factors(_read(args.input))
    mask = assemble_mask(t)
    if args.out is None:
        raise FormatError("--out is required for decode")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "mask.bmsk").write_bytes(dumps_mask(mask))
    print(f"{mask.rows}x{mask.cols} sparsity={mask.sparsity():.6f}")
    return EXIT_OK


def _load_reference(path) -> dict:
    if path is None:
        return {}
    try:
        ref = json.loads(_read(path))
    except json.JSONDecodeError as e:
        raise FormatError(f"reference file is not JSON: {e}") from e
    if not isinstance(ref, dict) or not all(isinstance(v, int) and v > 0 for v in ref.values()):
        raise FormatError("reference file must map labels to positive bit counts")
    return ref


def cmd_compare(args) -> int:
    cfg = _config(args)
    cfg.validate()
    refs = _load_reference(args.reference)
    mask, plan, shape = None, None, args.shape
    if args.input is not None:
        data = _read(args.input)
        magic = sniff(data)
        if magic == BIDX:
            t = loads_factors(data)
            mask, plan = assemble_mask(t), t.plan
        elif magic == BMSK:
            mask = loads_mask(data)
        else:
            raise FormatError(f"{args.input}: not a mask or factor file")
    elif shape is None:
        raise FormatError("compare needs an input file or --shape")
    if plan is None and cfg.rank is not None:
        plan = cfg.plan()
    if plan is not None:
        plan.validate(*(mask.shape if mask is not None else shape))
    report = format_report(mask, plan, refs, shape=shape)
    _emit(provenance_lines(cfg, "compare") + report.to_csv(), cfg.out, "compare.csv")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config(args)
    cfg.validate()
    results = []
    for i, (sp, sz, k) in enumerate((sp, sz, k) for sp in args.sp for sz in args.sz
                                    for k in args.ranks):
        results.append(verify_product_sparsity(sp, sz, k, args.rows, args.cols,
                                               seed=cfg.seed + i, trials=args.trials))
    _emit(provenance_lines(cfg, "simulate") + monte_carlo_csv(results), cfg.out,
          "simulate.csv")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    cfg.validate(need_rank=True, need_sparsity=True)
    w = loads_weights(_read(args.input))
    rows = rank_tradeoff_table(w, cfg.sparsity, cfg.ranks or [cfg.rank],
                               ManipMethod.parse(cfg.manip), cfg.nmf_config(),
                               cfg.bmf_config())
    _emit(provenance_lines(cfg, "sweep") + tradeoff_csv(rows), cfg.out, "tradeoff.csv")
    return EXIT_OK


def _add_common(p, factor_opts=True):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, metavar="DIR")
    if factor_opts:
        p.add_argument("--rank", type=int, default=None)
        p.add_argument("--sparsity", type=float, default=None)
        p.add_argument("--tiles", default="1x1", metavar="PxQ")
        p.add_argument("--manip", default="none", choices=["none", "square", "amplify"])
        p.add_argument("--sp-step", type=float, default=0.05)
        p.add_argument("--sa-tol", type=float, default=0.001)
        p.add_argument("--nmf-iters", type=int, default=500)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="binidx", description="Low-rank binary factorization of pruning masks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("factorize", help="factorize the quantile mask of a WMAT weight file")
    p.add_argument("input")
    _add_common(p)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_factorize)

    p = sub.add_parser("decode", help="rebuild the mask from a BIDX factor file")
    p.add_argument("input")
    _add_common(p, factor_opts=False)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("compare", help="index sizes of every format for a mask or plan")
    p.add_argument("input", nargs="?", default=None)
    p.add_argument("--reference", default=None, help="JSON file: label -> size in bits")
    p.add_argument("--shape", type=_shape, default=None, metavar="MxN")
    _add_common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("simulate", help="Monte Carlo check of the product-sparsity formula")
    p.add_argument("--sp", type=_float_list, default=[0.3, 0.6, 0.9])
    p.add_argument("--sz", type=_float_list, default=[0.3, 0.6, 0.9])
    p.add_argument("--ranks", type=_int_list, default=[2, 8, 16])
    p.add_argument("--rows", type=int, default=1000)
    p.add_argument("--cols", type=int, default=1000)
    p.add_argument("--trials", type=int, default=1)
    _add_common(p, factor_opts=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="rank trade-off table for a WMAT weight file")
    p.add_argument("input")
    p.add_argument("--ranks", type=_int_list, default=None, metavar="k1,k2,...")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    try:
        return args.func(args)
    except OptimizationError as e:
        print(f"binidx: infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except InvariantError as e:
        print(f"binidx: internal error: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except (BinidxError, OSError, ValueError) as e:
        print(f"binidx: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
