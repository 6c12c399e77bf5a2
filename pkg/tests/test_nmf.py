import numpy as np
import pytest

from binidx.errors import ArgumentError, DomainError
from binidx.matrix_core import make_rng
from binidx.nmf import NmfConfig, nmf, objective
from binidx.pruning import magnitude

from worked_example import MP_EX, MZ_EX, W_EX


def random_nonneg(rows, cols, seed):
    return make_rng(seed).random((rows, cols))


def svd_truncation_error(m, k):
    s = np.linalg.svd(m, compute_uv=False)
    return float((s[k:] ** 2).sum())


def test_rank_one_recovery():
    rng = make_rng(1)
    u, v = rng.random(30) + 0.1, rng.random(20) + 0.1
    m = np.outer(u, v)
    res = nmf(m, 1, NmfConfig(max_iters=2000, rel_tol=1e-12))
    assert res.final_objective < 1e-6 * (m ** 2).sum()


def test_worked_example_beats_printed_factors():
    m = magnitude(W_EX)
    printed = objective(m, MP_EX, MZ_EX)
    assert printed == pytest.approx(1.2196, abs=1e-9)
    res = nmf(m, 2)
    assert res.final_objective <= 1.1 * printed


def test_full_rank_is_close():
    for seed in range(5):
        m = random_nonneg(20, 20, seed)
        res = nmf(m, 20, NmfConfig(max_iters=3000, rel_tol=1e-8))
        assert res.final_objective <= 0.01 * (m ** 2).sum()


def test_history_monotone_and_nonnegative():
    for seed in range(10):
        m = random_nonneg(15 + seed, 12, seed)
        res = nmf(m, 1 + seed % 5, NmfConfig(max_iters=200, seed=seed))
        h = np.asarray(res.history)
        assert np.all(h[1:] <= h[:-1] * (1 + 1e-9))
        assert res.mp.min() >= 0 and res.mz.min() >= 0
        assert res.final_objective == pytest.approx(objective(m, res.mp, res.mz))
        assert len(h) == res.iterations_run + 1


def test_shapes():
    res = nmf(random_nonneg(7, 11, 0), 3)
    assert res.mp.shape == (7, 3) and res.mz.shape == (3, 11) and res.rank == 3


def test_rank_above_min_dimension_allowed():
    res = nmf(random_nonneg(4, 6, 0), 9)
    assert res.mp.shape == (4, 9)


def test_near_svd_baseline():
    for seed in range(3):
        m = random_nonneg(50, 50, seed)
        for k in (2, 5, 10):
            res = nmf(m, k, NmfConfig(seed=seed))
            assert res.final_objective <= 10 * svd_truncation_error(m, k)
            assert res.final_objective >= svd_truncation_error(m, k) * (1 - 1e-9)


def test_zero_rows_give_zero_factor_rows():
    m = random_nonneg(6, 5, 3)
    m[2] = 0
    m[:, 4] = 0
    res = nmf(m, 2)
    assert np.all(res.mp[2] == 0)
    assert np.all(res.mz[:, 4] == 0)


def test_all_zero_matrix():
    res = nmf(np.zeros((3, 3)), 2)
    assert res.final_objective == 0.0


def test_deterministic():
    m = random_nonneg(20, 30, 2)
    a = nmf(m, 4, NmfConfig(seed=7))
    b = nmf(m, 4, NmfConfig(seed=7))
    assert a.mp.tobytes() == b.mp.tobytes() and a.mz.tobytes() == b.mz.tobytes()


def test_errors():
    with pytest.raises(DomainError):
        nmf(W_EX, 2)
    with pytest.raises(ArgumentError):
        nmf(magnitude(W_EX), 0)
    with pytest.raises(ArgumentError):
        NmfConfig(max_iters=0)
