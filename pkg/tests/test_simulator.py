import numpy as np
import pytest

from picstbc.errors import GroupUndecodable, InsufficientData
from picstbc.simulator import (CSV_HEADER, Z95, SimConfig, SimPoint, SimResult, chunk_rng, coding_gain_interval,
                               estimate_coding_gain, estimate_diversity_order, run_chunk, run_sweep,
                               sample_channel)


def synthetic(ser_of_snr, grid=(14, 16, 18, 20, 22, 24, 26), n=2, trials=10**9):
    # counts chosen so that ser and bler reproduce the target curve
    pts = []
    for db in grid:
        p = ser_of_snr(10 ** (db / 10))
        se = int(round(p * trials * n))
        pts.append(SimPoint(float(db), trials, se, int(round(p * trials)), n))
    return pts


def test_sample_channel_statistics():
    rng = np.random.default_rng(0)
    h = sample_channel(1, 1, rng, size=10**6).ravel()
    assert abs(np.mean(np.abs(h) ** 2) - 1) < 0.01
    assert abs(np.mean(h)) < 0.01
    assert abs(np.corrcoef(h.real, h.imag)[0, 1]) < 0.01
    assert abs(np.var(h.real) - 0.5) < 0.01
    assert sample_channel(2, 3, np.random.default_rng(0)).shape == (2, 3)


def test_chunk_rng_is_keyed_by_position():
    a = chunk_rng(5, 1, 2).standard_normal(4)
    np.testing.assert_array_equal(a, chunk_rng(5, 1, 2).standard_normal(4))
    assert not np.allclose(a, chunk_rng(5, 2, 1).standard_normal(4))
    assert not np.allclose(a, chunk_rng(6, 1, 2).standard_normal(4))


def test_config_validation_and_round_trip():
    cfg = SimConfig(code="code_2x3", decoder="pic", snr_db=(10.0, 12.0), seed=3)
    assert SimConfig.from_dict(cfg.to_dict()) == cfg
    for bad in ({"snr_db": ()}, {"snr_db": (12.0, 10.0)}, {"decoder": "nope"}, {"n_r": 0},
                {"chunk_size": 0}, {"workers": -1}):
        with pytest.raises(ValueError):
            cfg.replace(**bad)
    with pytest.raises(ValueError):
        SimConfig.from_dict({"nonsense": 1})


def test_noiseless_gives_zero_errors():
    cfg = SimConfig(code="code_2x3", decoder="pic", snr_db=(0.0, 10.0), noise_scale=0.0,
                    min_block_errors=1, max_trials=20_000, chunk_size=5_000)
    res = run_sweep(cfg)
    assert [p.trials for p in res.points] == [20_000, 20_000]
    assert all(p.symbol_errors == 0 and p.ser == 0 for p in res.points)


def test_bler_bounds_ser():
    cfg = SimConfig(code="qostbc_rot", decoder="pic", snr_db=(4.0, 8.0), min_block_errors=300, chunk_size=2000)
    for p in run_sweep(cfg).points:
        assert p.block_errors >= 300
        assert p.ser <= p.bler <= p.n * p.ser


def test_stopping_rule_per_chunk():
    cfg = SimConfig(snr_db=(0.0,), min_block_errors=10, chunk_size=1000)
    p = run_sweep(cfg).points[0]
    assert p.trials == 1000 and p.block_errors >= 10
    cfg = SimConfig(snr_db=(30.0,), min_block_errors=10**6, max_trials=2500, chunk_size=1000)
    assert run_sweep(cfg).points[0].trials == 2500


def test_run_chunk_deterministic():
    cfg = SimConfig(snr_db=(6.0, 8.0), seed=9)
    assert run_chunk(cfg, 1, 3, 500) == run_chunk(cfg, 1, 3, 500)
    assert run_chunk(cfg, 1, 3, 500) != run_chunk(cfg, 1, 4, 500)


def test_worker_count_does_not_change_results():
    cfg = SimConfig(code="code_2x3", decoder="pic-sic", snr_db=(6.0, 10.0), min_block_errors=150,
                    chunk_size=1000, seed=4)
    one = run_sweep(cfg).csv_text()
    assert run_sweep(cfg.replace(workers=3)).csv_text() == one


def test_csv_format():
    res = SimResult(SimConfig(), [SimPoint(10.0, 100, 3, 2, 2)])
    lines = res.csv_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert lines[1].split(",")[:4] == ["10", "100", "3", "2"]
    assert float(lines[1].split(",")[4]) == 0.015
    assert float(lines[1].split(",")[6]) == pytest.approx(Z95 * np.sqrt(0.015 * 0.985 / 200))
    assert SimResult(SimConfig(), [], error="boom").csv_text().endswith("# error: boom\n")


def test_undecodable_returns_partial_result():
    # four single-symbol groups in three dimensions: every channel fails
    cfg = SimConfig(code="code_2x3", decoder="pic", grouping="0|1|2|3", snr_db=(10.0, 12.0), chunk_size=100)
    with pytest.raises(GroupUndecodable) as info:
        run_sweep(cfg)
    exc = info.value
    assert exc.h is not None and exc.h.shape == (1, 2)
    assert exc.index == 0
    assert isinstance(exc.partial, SimResult)
    assert exc.partial.points == [] and "snr_db=10" in exc.partial.error


def test_slope_of_exact_power_laws():
    assert estimate_diversity_order(synthetic(lambda s: s ** -2.0)) == pytest.approx(2, abs=1e-3)
    assert estimate_diversity_order(synthetic(lambda s: 0.3 * s ** -4.0, trials=10**14)) == pytest.approx(4, abs=1e-3)


def test_slope_needs_enough_data():
    with pytest.raises(InsufficientData):
        estimate_diversity_order(synthetic(lambda s: s ** -2.0, grid=(14, 16)))
    with pytest.raises(InsufficientData):
        estimate_diversity_order(synthetic(lambda s: s ** -2.0, trials=10**5))
    # points outside the window are ignored
    pts = synthetic(lambda s: s ** -2.0, grid=(0, 14, 16, 18))
    assert estimate_diversity_order(pts, window=(14, 18)) == pytest.approx(2, abs=1e-3)


def test_coding_gain_examples():
    assert estimate_coding_gain(synthetic(lambda s: 0.1 * s ** -2.0, trials=10**14), 2) == pytest.approx(10, rel=1e-6)
    # the minimum over the grid is taken, so one bad point sets the gain
    pts = synthetic(lambda s: 0.1 * s ** -2.0, trials=10**14)
    pts[3] = SimPoint(pts[3].snr_db, pts[3].trials, pts[3].symbol_errors * 4, pts[3].block_errors * 4, 2)
    assert estimate_coding_gain(pts, 2) == pytest.approx(2.5, rel=1e-6)
    lo, hi = coding_gain_interval(synthetic(lambda s: 0.1 * s ** -2.0, trials=10**6), 2)
    assert lo < 10 < hi
    # an interval reaching zero BLER leaves the gain unbounded above
    assert coding_gain_interval([SimPoint(10.0, 10, 1, 1, 2)], 2)[1] == np.inf
    with pytest.raises(InsufficientData):
        estimate_coding_gain([SimPoint(10.0, 100, 0, 0, 2)], 2)
