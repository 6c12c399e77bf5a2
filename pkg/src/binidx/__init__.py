"""Low-rank binary factorization of neural-network pruning masks."""

__version__ = "0.1.0"

from .bmf import (
    BinaryFactorPair,
    BmfConfig,
    SweepRecord,
    binarize,
    factorize_mask,
    s_z_from,
    sweep_trace_csv,
    unintended_cost,
)
from .decompress import apply_mask, boolean_product, mismatch_count
from .matrix_core import BitMatrix, density, random_bits, random_gaussian
from .nmf import NmfConfig, RealFactorPair, nmf
from .pruning import (
    ManipMethod,
    PruneSpec,
    magnitude,
    magnitude_mask,
    manipulate,
    quantile_threshold,
)
from .sparse_formats import compression_ratio, format_report, size_bits
from .tiling import TilingPlan, assemble_mask, tiled_factorize, tiled_index_bits

__all__ = [
    "__version__",
    "BinaryFactorPair",
    "BmfConfig",
    "SweepRecord",
    "binarize",
    "factorize_mask",
    "s_z_from",
    "sweep_trace_csv",
    "unintended_cost",
    "apply_mask",
    "boolean_product",
    "mismatch_count",
    "BitMatrix",
    "density",
    "random_bits",
    "random_gaussian",
    "NmfConfig",
    "RealFactorPair",
    "nmf",
    "ManipMethod",
    "PruneSpec",
    "magnitude",
    "magnitude_mask",
    "manipulate",
    "quantile_threshold",
    "compression_ratio",
    "format_report",
    "size_bits",
    "TilingPlan",
    "assemble_mask",
    "tiled_factorize",
    "tiled_index_bits",
]
