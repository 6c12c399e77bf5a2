import itertools

import numpy as np
import pytest

from binidx.analysis import (
    MC_HEADER,
    TRADEOFF_HEADER,
    default_edges,
    monte_carlo_csv,
    near_zero_survivors,
    product_sparsity_std,
    rank_tradeoff_table,
    survivor_histogram,
    tradeoff_csv,
    verify_product_sparsity,
)
from binidx.bmf import BmfConfig, factorize_mask
from binidx.decompress import boolean_product
from binidx.errors import ArgumentError, DimensionError
from binidx.matrix_core import BitMatrix, random_bits, random_gaussian
from binidx.pruning import ManipMethod, PruneSpec, magnitude, magnitude_mask, quantile_threshold

from worked_example import I_EX, IA_EX, W_EX


def test_product_sparsity_trivial_points():
    r = verify_product_sparsity(1.0, 0.3, 5, 50, 60)
    assert r.predicted == 1.0 and r.empirical == 1.0
    r = verify_product_sparsity(0.0, 0.0, 3, 50, 60)
    assert r.predicted == 0.0 and r.empirical == 0.0
    assert r.z_score() == 0.0


def test_product_sparsity_matches_s_z_example():
    r = verify_product_sparsity(0.9, 0.968, 16, seed=1)
    assert r.predicted == pytest.approx(0.95, abs=1e-3)
    assert abs(r.empirical - r.predicted) <= 0.01


def test_product_sparsity_grid_within_three_se():
    grid = itertools.product([0.1, 0.3, 0.5, 0.7, 0.9], [0.1, 0.3, 0.5, 0.7, 0.9], [1, 4, 16])
    results = [verify_product_sparsity(sp, sz, k, seed=i) for i, (sp, sz, k) in enumerate(grid)]
    assert len(results) == 75
    assert all(r.abs_error <= 3 * r.std_error for r in results)
    lines = monte_carlo_csv(results).splitlines()
    assert lines[0] == MC_HEADER and len(lines) == 76


def empirical_std(s_p, s_z, k, rows, cols, reps):
    vals = [boolean_product(random_bits(rows, k, s_p, 2 * t),
                            random_bits(k, cols, s_z, 2 * t + 1)).sparsity()
            for t in range(reps)]
    return float(np.std(vals, ddof=1))


@pytest.mark.parametrize("s_p, s_z, k", [(0.5, 0.5, 2), (0.3, 0.8, 4), (0.9, 0.2, 1)])
def test_standard_error_model(s_p, s_z, k):
    model = product_sparsity_std(s_p, s_z, k, 40, 30)
    observed = empirical_std(s_p, s_z, k, 40, 30, 600)
    assert observed == pytest.approx(model, rel=0.15)


def test_trials_shrink_error():
    one = verify_product_sparsity(0.6, 0.6, 8, 200, 200, trials=1)
    many = verify_product_sparsity(0.6, 0.6, 8, 200, 200, trials=16)
    assert many.std_error == pytest.approx(one.std_error / 4)


def test_product_sparsity_bad_args():
    with pytest.raises(ArgumentError):
        verify_product_sparsity(1.2, 0.5, 2)
    with pytest.raises(ArgumentError):
        verify_product_sparsity(0.5, 0.5, 0)


def test_survivor_histogram_worked_example():
    h = survivor_histogram(W_EX, BitMatrix.from_bool(I_EX), [-2.0, 0.0, 2.0])
    kept = [W_EX[r, c] for r in range(5) for c in range(5) if I_EX[r, c]]
    oracle = (sum(v < 0 for v in kept), sum(v >= 0 for v in kept))
    assert oracle == (5, 8)
    assert tuple(h.counts.tolist()) == oracle and h.total == 13


def test_survivor_histogram_totals():
    w = random_gaussian(30, 40, seed=2)
    assert survivor_histogram(w, BitMatrix.zeros(30, 40)).counts.sum() == 0
    assert survivor_histogram(w, BitMatrix.ones(30, 40)).total == 1200
    mask = magnitude_mask(w, PruneSpec.quantile(0.7))
    h = survivor_histogram(w, mask, 16)
    assert h.total == mask.popcount() and len(h.counts) == 16
    assert h.to_csv().splitlines()[0] == "bin_lo,bin_hi,count"
    edges = default_edges(w)
    assert edges[0] == -np.abs(w).max() and edges[-1] == np.abs(w).max()


def test_survivor_histogram_errors():
    with pytest.raises(DimensionError):
        survivor_histogram(W_EX, BitMatrix.zeros(4, 5))
    with pytest.raises(ArgumentError):
        survivor_histogram(W_EX, BitMatrix.ones(5, 5), [1.0, 0.0])


def test_near_zero_examples():
    assert near_zero_survivors(W_EX, BitMatrix.from_bool(I_EX), 0.7) == 0
    assert near_zero_survivors(W_EX, BitMatrix.ones(5, 5), np.inf) == 25
    assert near_zero_survivors(W_EX, BitMatrix.from_bool(IA_EX), 0.7) == 2
    with pytest.raises(ArgumentError):
        near_zero_survivors(W_EX, BitMatrix.ones(5, 5), 0.0)


@pytest.mark.slow
def test_tradeoff_ratios():
    cfg = BmfConfig(sp_step=0.25)
    w = random_gaussian(800, 500, seed=0)
    rows = rank_tradeoff_table(w, 0.95, [4, 16, 256], bmf_cfg=cfg)
    assert [round(r.compression_ratio, 1) for r in rows] == [76.9, 19.2, 1.2]
    assert all(abs(r.s_a - 0.95) <= 0.001 for r in rows)
    lines = tradeoff_csv(rows).splitlines()
    assert lines[0] == TRADEOFF_HEADER and len(lines) == 4


def test_tradeoff_row_matches_pipeline():
    w = random_gaussian(60, 80, seed=3)
    (row,) = rank_tradeoff_table(w, 0.9, [4])
    assert rank_tradeoff_table(w, 0.9, [4]) == [row]
    pair, _ = factorize_mask(w, 4, 0.9)
    band = quantile_threshold(magnitude(w), 0.9)
    assert row.cost == pair.cost
    assert row.near_zero == near_zero_survivors(w, pair.decode(), band)


@pytest.mark.slow
def test_amplify_prunes_more_near_zero_weights():
    wins = 0
    for seed in range(5):
        w = random_gaussian(500, 800, seed=seed)
        band = quantile_threshold(magnitude(w), 0.95)
        counts = []
        for manip in (ManipMethod.parse("none"), ManipMethod.amplify()):
            pair, _ = factorize_mask(w, 64, 0.95, manip)
            counts.append(near_zero_survivors(w, pair.decode(), band))
        wins += counts[1] <= counts[0]
    assert wins >= 3
