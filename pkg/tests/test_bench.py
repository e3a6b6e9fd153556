import numpy as np
import pytest

from nsgcq.bench import (approximation_csv, fit_slope, harmonic_transient_signals,
                         previous_prime, random_complex_signals, run_approximation,
                         run_scaling)


def test_fit_slope_recovers_power_law():
    L = 2.0 ** np.arange(10, 16)
    assert fit_slope(L, 3e-9 * L ** 1.25) == pytest.approx(1.25, abs=1e-12)
    with pytest.raises(ValueError):
        fit_slope([8, 8], [1.0, 2.0])


def test_previous_prime():
    assert previous_prime(2 ** 17) == 131071
    assert previous_prime(7920) == 7919


def test_scaling_rows_and_outlier():
    res = run_scaling(lengths=[2 ** 14, 2 ** 15, 2 ** 16], iters=2,
                      slice_config=(2048, 256))
    nsgt = res.rows_for("nsgt", outliers=True)
    assert [r.length for r in nsgt] == [2 ** 14, 2 ** 15, 2 ** 16, previous_prime(2 ** 15)]
    assert [r.outlier for r in nsgt] == [False, False, False, True]
    assert [r.slice_len for r in res.rows_for("slicq")] == [4096] * 3
    assert all(r.mean_seconds > 0 and r.variance >= 0 for r in res.rows)
    assert set(res.slopes) == {"nsgt", "slicq"}
    lines = res.to_csv().splitlines()
    assert lines[0] == "variant,length,slice_len,mean_ms,variance,outlier"
    assert len(lines) == 1 + 7


def test_scaling_rejects_unknown_variant():
    with pytest.raises(ValueError):
        run_scaling(["fft"], [1024, 2048], iters=1)


def test_signal_sets_are_seeded():
    a = random_complex_signals(2, 64, seed=3)
    np.testing.assert_array_equal(a, random_complex_signals(2, 64, seed=3))
    assert np.iscomplexobj(a)
    h = harmonic_transient_signals(2, 4096, seed=1)
    assert h.dtype == np.float64 and h.shape == (2, 4096)
    np.testing.assert_array_equal(h, harmonic_transient_signals(2, 4096, seed=1))


def test_approximation_random_set():
    rows = run_approximation("random", [(2048, 256)], (8, 16), n_signals=8, L=2 ** 15)
    assert [r.min_filter_len for r in rows] == [8, 16]
    assert rows[1].snr_db > rows[0].snr_db
    for r in rows:
        assert r.snr_std < 0.5
        assert len(r.snr_all) == 8
    again = run_approximation("random", [(2048, 256)], (8,), n_signals=8, L=2 ** 15)
    assert again[0].snr_db == rows[0].snr_db
    text = approximation_csv(rows).splitlines()
    assert text[0] == "min_filter_len,slice_len,transition_len,snr_db"
    assert text[1].startswith("8,4096,256,")


def test_approximation_synthetic_set():
    rows = run_approximation("synthetic", [(2048, 256)], (8, 16), n_signals=4, L=2 ** 15)
    assert rows[1].snr_db > rows[0].snr_db > 20
