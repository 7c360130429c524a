import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockclust.exceptions import ConfigurationError, InfeasibleConfigurationError
from blockclust.numerics import make_rng
from blockclust.simulation import (
    PRESETS,
    SimConfig,
    block_gap,
    generate_dataset,
    generate_signal,
    run_sweep,
)


def test_dense_design_sizes():
    cfg = SimConfig(**PRESETS["dense"])
    assert (cfg.m, cfg.L_min, cfg.L_max, cfg.d0) == (7, 5, 8, 10)


def test_sparse_design_sizes():
    assert SimConfig(**PRESETS["sparse"]).m == 2


def test_sample_sizes():
    # independent of the class: 2 * floor((p1 p2)^0.4 / 2)
    for side, want in ((50, 22), (100, 38), (200, 68)):
        assert 2 * math.floor((side * side) ** 0.4 / 2) == want
        assert SimConfig(p1=side, p2=side).n == want


@pytest.mark.parametrize("preset", ["dense", "sparse"])
def test_generated_blocks_respect_gap(preset):
    cfg = SimConfig(**PRESETS[preset])
    for r in range(20):
        truth = generate_signal(cfg, make_rng(r, 0))
        blocks = truth.blocks.blocks
        assert len(blocks) == cfg.m
        for i, a in enumerate(blocks):
            for L in a.modes:
                assert cfg.L_min <= L.length <= cfg.L_max
            for b in blocks[:i]:
                assert block_gap(a, b) >= cfg.d0
        assert truth.support.sum() == sum(b.size for b in blocks)
        assert set(np.unique(truth.signs)) <= {-1.0, 0.0, 1.0}


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), beta=st.floats(0.2, 0.45))
def test_gap_property_random_configs(seed, beta):
    cfg = SimConfig(alpha=0.4, beta=beta)
    try:
        truth = generate_signal(cfg, make_rng(seed, 0))
    except InfeasibleConfigurationError:
        return
    bl = truth.blocks.blocks
    assert all(block_gap(a, b) >= cfg.d0 for i, a in enumerate(bl) for b in bl[:i])


def test_infeasible_layout_reports_count():
    cfg = SimConfig(p1=20, p2=20, alpha=0.5, beta=0.05)
    with pytest.raises(InfeasibleConfigurationError) as exc:
        generate_signal(cfg, make_rng(0), max_restarts=3)
    assert exc.value.achieved < cfg.m


def test_scattered_layout():
    cfg = SimConfig(alpha=0.0, beta=0.8, signal_layout="scattered")
    truth = generate_signal(cfg, make_rng(1))
    assert truth.support.sum() == cfg.m
    assert cfg.window_h1 == 1 and cfg.min_length == 1


def test_zero_tau_is_pure_noise():
    cfg = SimConfig(**PRESETS["dense"])
    truth = generate_signal(cfg, make_rng(0))
    X, lab = generate_dataset(truth, 40, 0.0, make_rng(1))
    assert set(np.unique(lab)) <= {-1, 1}
    X2, _ = generate_dataset(truth, 40, 0.0, make_rng(1))
    assert np.array_equal(X, X2)
    assert 0.95 <= X.var() <= 1.05  # 40 * 2500 = 1e5 entries


def test_bad_config():
    with pytest.raises(ConfigurationError):
        SimConfig(methods=["nope"])
    with pytest.raises(ConfigurationError):
        SimConfig(beta=0.6, alpha=0.5)


def _small_cfg(**kw):
    base = dict(p1=20, p2=20, alpha=0.5, beta=0.35, tau_grid=[0.3, 1.0], reps=3,
                methods=["ma", "spectral", "cfa"], seed=5)
    base.update(kw)
    return SimConfig(**base)


def test_sweep_rows_and_flags():
    res = run_sweep(_small_cfg())
    assert len(res.rows) == 6
    for r in res.rows:
        assert 0.0 <= r["clu_loss"] <= 0.5
        assert r["reps"] == 3
    meta = json.loads(json.dumps(res.metadata()))
    assert meta["config"]["n"] == _small_cfg().n


def test_sweep_identical_across_workers():
    cfg = _small_cfg(reps=2)
    one = run_sweep(cfg, workers=1).to_csv()
    two = run_sweep(cfg, workers=2).to_csv()
    assert one == two
    assert one == run_sweep(cfg, workers=1).to_csv()
