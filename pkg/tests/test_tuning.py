import numpy as np
import pytest

from blockclust.exceptions import ConfigurationError
from blockclust.metrics import hamming_clustering
from blockclust.numerics import make_rng
from blockclust.simulation import MID_TAU, PRESETS, SimConfig, generate_dataset, generate_signal
from blockclust.tuning import TuningGrid, default_h_max, select, tune_cfa, tune_ma


class TestSelect:
    def test_single_point(self):
        assert select([(3, 5, 10)], 0.01) == (3, 5, False)

    def test_constant_s_hat(self):
        table = [(a, b, 7) for a in range(1, 4) for b in range(a, 4)]
        assert select(table, 0.01) == (1, 1, False)

    def test_one_point_with_signal(self):
        table = [(1, 1, 0), (1, 2, 0), (2, 2, 9), (2, 3, 0)]
        assert select(table, 0.01) == (2, 2, False)

    def test_no_signal_flag(self):
        table = [(2, 3, 0), (1, 4, 0), (1, 2, 0)]
        assert select(table, 0.01) == (1, 2, True)

    def test_ties_prefer_smaller_second_then_larger_s(self):
        table = [(2, 4, 100), (2, 3, 99.5), (3, 3, 100)]
        assert select(table, 0.01) == (2, 3, False)

    def test_epsilon_band(self):
        table = [(1, 1, 98), (2, 2, 100)]
        assert select(table, 0.01) == (2, 2, False)
        assert select(table, 0.05) == (1, 1, False)


def test_grid_construction():
    g = TuningGrid(h_max=3)
    assert g.points == [(1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)]
    with pytest.raises(ConfigurationError):
        TuningGrid(points=[(3, 2)])
    with pytest.raises(ConfigurationError):
        TuningGrid(epsilon=1.0)


def test_default_h_max():
    assert [default_h_max(p) for p in (50, 100, 200)] == [15, 25, 30]


def test_tune_ma_returns_grid_point_and_is_deterministic():
    rng = make_rng(0)
    lab = rng.permutation(np.repeat([1, -1], 10))
    X = rng.standard_normal((20, 80))
    X[:, 30:38] += 1.5 * lab[:, None]
    grid = TuningGrid(h_max=6)
    a = tune_ma(X, grid)
    b = tune_ma(X, grid)
    assert (a.h1, a.h_other) in grid.points
    assert a.rows() == b.rows() and (a.h1, a.h_other) == (b.h1, b.h_other)
    s_max = max(s for *_, s in a.rows())
    chosen = dict(((h1, h), s) for h1, h, s in a.rows())[(a.h1, a.h_other)]
    assert chosen > 0.99 * s_max


def test_tune_cfa_single_point():
    rng = make_rng(1)
    X = rng.standard_normal((20, 60))
    res = tune_cfa(X, TuningGrid(points=[(2, 6)]))
    assert (res.h1, res.h_other) == (2, 6)


def _tuning_gap(preset, fn, grid, reps):
    cfg = SimConfig(**PRESETS[preset])
    truth = generate_signal(cfg, make_rng(cfg.seed, 0))
    chosen, best = [], []
    for r in range(reps):
        X, lab = generate_dataset(truth, cfg.n, MID_TAU[preset], make_rng(cfg.seed, 2, r))
        res = fn(X, grid, (cfg.p1, cfg.p2))
        losses = {(e["h1"], e["h_other"]): hamming_clustering(e["labels"], lab) for e in res.table}
        chosen.append(losses[(res.h1, res.h_other)])
        best.append(min(losses.values()))
    return float(np.mean(chosen)), float(np.mean(best))


@pytest.mark.slow
def test_dense_ma_tuning_near_grid_minimum():
    chosen, best = _tuning_gap("dense", tune_ma, TuningGrid(h_max=15), 50)
    print(f"dense tuning: chosen-point loss {chosen:.3f}, grid minimum {best:.3f}")
    assert chosen - best <= 0.05


@pytest.mark.slow
def test_sparse_cfa_tuning_near_grid_minimum():
    grid = TuningGrid(points=[(a, b) for a in (1, 2, 3, 4) for b in (4, 6, 8) if b >= a])
    chosen, best = _tuning_gap("sparse", tune_cfa, grid, 50)
    print(f"sparse tuning: chosen-point loss {chosen:.3f}, grid minimum {best:.3f}")
    assert chosen - best <= 0.05
