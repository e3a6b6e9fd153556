import csv
import io

import numpy as np
import pytest
from scipy.io import wavfile

from nsgcq.cli import main
from nsgcq.design import CqParams, build_cq_system
from nsgcq.io import read_container, read_pgm, read_wav, write_pnm
from nsgcq.transform import analyze

FS = 44100


def _tone_wav(path, seconds=1.0, freq=1000.0, channels=1, seed=0):
    t = np.arange(int(FS * seconds)) / FS
    rng = np.random.default_rng(seed)
    x = 0.3 * np.sin(2 * np.pi * freq * t) + 0.02 * rng.standard_normal(t.size)
    if channels == 2:
        x = np.stack([x, -0.5 * x[::-1]], axis=1)
    wavfile.write(path, FS, np.int16(np.rint(x * 32767)))
    return read_wav(path)[1]


@pytest.mark.parametrize("extra", [[], ["--slice", "16384"]])
def test_analyze_synthesize_roundtrip(tmp_path, extra):
    x = _tone_wav(tmp_path / "in.wav")
    assert main(["analyze", "--in", str(tmp_path / "in.wav"),
                 "--out", str(tmp_path / "c.nsgc")] + extra) == 0
    assert main(["synthesize", "--in", str(tmp_path / "c.nsgc"),
                 "--out", str(tmp_path / "out.wav")]) == 0
    rate, y = read_wav(tmp_path / "out.wav")
    assert rate == FS and y.shape == x.shape
    assert np.abs(y - x).max() <= 1e-4


def test_sliced_padding_arithmetic(tmp_path):
    _tone_wav(tmp_path / "in.wav")
    main(["analyze", "--in", str(tmp_path / "in.wav"), "--out", str(tmp_path / "c.nsgc"),
          "--slice", "16384"])
    cont = read_container(tmp_path / "c.nsgc")
    assert (cont.signal_len, cont.orig_len, cont.N, cont.M) == (49152, 44100, 8192, 1024)
    assert cont.audio[0].n_slices == 6


def test_stereo_roundtrip(tmp_path, capsys):
    x = _tone_wav(tmp_path / "st.wav", seconds=0.4, channels=2)
    assert main(["roundtrip", "--in", str(tmp_path / "st.wav"),
                 "--out", str(tmp_path / "o.wav"), "--slice", "8192", "--float"]) == 0
    assert "relative error" in capsys.readouterr().out
    _, y = read_wav(tmp_path / "o.wav")
    assert y.shape == (x.shape[0], 2)
    np.testing.assert_allclose(y, x, atol=1e-6)


def test_cli_equals_library(tmp_path):
    x = _tone_wav(tmp_path / "in.wav", seconds=0.25)
    main(["analyze", "--in", str(tmp_path / "in.wav"), "--out", str(tmp_path / "c.nsgc"),
          "--bins", "24"])
    cont = read_container(tmp_path / "c.nsgc")
    p = CqParams(bins=24)
    lib = analyze(x[:, 0], build_cq_system(p, x.shape[0]))
    assert cont.params == p
    for a, b in zip(cont.audio[0].channels, lib.channels):
        np.testing.assert_array_equal(a, b)


def test_config_file(tmp_path):
    _tone_wav(tmp_path / "in.wav", seconds=0.25)
    (tmp_path / "p.cfg").write_text("bins = 12\nxi_min = 100\nslice_len = 4096\n")
    assert main(["analyze", "--in", str(tmp_path / "in.wav"), "--out", str(tmp_path / "c.nsgc"),
                 "--config", str(tmp_path / "p.cfg")]) == 0
    cont = read_container(tmp_path / "c.nsgc")
    assert (cont.params.bins, cont.params.xi_min, cont.N, cont.M) == (12, 100.0, 2048, 256)


def test_usage_errors(tmp_path):
    wavfile.write(tmp_path / "e.wav", FS, np.zeros(0, np.int16))
    out = str(tmp_path / "x.nsgc")
    assert main(["analyze", "--in", str(tmp_path / "e.wav"), "--out", out]) == 2
    assert main(["analyze", "--in", str(tmp_path / "missing.wav"), "--out", out]) == 2
    _tone_wav(tmp_path / "in.wav", seconds=0.1)
    assert main(["analyze", "--in", str(tmp_path / "in.wav"), "--out", out,
                 "--xi-max", "30000"]) == 2
    assert main(["analyze", "--in", str(tmp_path / "in.wav"), "--out", out,
                 "--slice", "1001"]) == 2
    (tmp_path / "bad.cfg").write_text("xi_s = 48000\n")
    assert main(["analyze", "--in", str(tmp_path / "in.wav"), "--out", out,
                 "--config", str(tmp_path / "bad.cfg")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["analyze", "--in", str(tmp_path / "in.wav")])
    assert exc.value.code == 2


def test_spectrogram_of_silence(tmp_path):
    wavfile.write(tmp_path / "z.wav", FS, np.zeros(8192, np.int16))
    assert main(["spectrogram", "--in", str(tmp_path / "z.wav"),
                 "--out", str(tmp_path / "z.pgm"), "--width", "64"]) == 0
    img = read_pgm(tmp_path / "z.pgm")
    assert img.shape == (418, 64)
    assert np.all(img == 0)


def test_spectrogram_color_from_container(tmp_path):
    _tone_wav(tmp_path / "in.wav", seconds=0.25)
    main(["analyze", "--in", str(tmp_path / "in.wav"), "--out", str(tmp_path / "c.nsgc"),
          "--slice", "4096"])
    assert main(["spectrogram", "--in", str(tmp_path / "c.nsgc"),
                 "--out", str(tmp_path / "c.ppm")]) == 0
    assert (tmp_path / "c.ppm").read_bytes()[:2] == b"P6"


def test_transpose_moves_peak_channel(tmp_path):
    L = 32768
    s = build_cq_system(CqParams(), L)
    K, k = s.meta["K"], 190
    t = np.arange(L)
    # decaying partials, loosely like a struck bar
    x = 0.4 * np.cos(2 * np.pi * s.center_bins[k] * t / L) * np.exp(-t / (0.5 * L))
    wavfile.write(tmp_path / "g.wav", FS, x.astype(np.float32))
    assert main(["transpose", "--in", str(tmp_path / "g.wav"), "--out", str(tmp_path / "t.wav"),
                 "--bins", "8", "--float"]) == 0
    _, y = read_wav(tmp_path / "t.wav")
    c = analyze(y[:, 0], s)
    energy = [np.sum(np.abs(c[j]) ** 2) for j in range(1, K + 1)]
    assert int(np.argmax(energy)) + 1 == k + 8


def test_mask_command(tmp_path):
    _tone_wav(tmp_path / "in.wav", seconds=0.25)
    src = tmp_path / "c.nsgc"
    main(["analyze", "--in", str(tmp_path / "in.wav"), "--out", str(src)])
    K = read_container(src).coef_counts.size // 2 - 1
    write_pnm(tmp_path / "zero.pgm", np.zeros((K + 2, 16), np.uint8))
    assert main(["mask", "--in", str(src), "--mask", str(tmp_path / "zero.pgm"),
                 "--out", str(tmp_path / "m.nsgc")]) == 0
    a, b = read_container(src).audio[0], read_container(tmp_path / "m.nsgc").audio[0]
    for x, y in zip(a.channels, b.channels):
        np.testing.assert_allclose(y, 1e-5 * x, rtol=1e-13)
    write_pnm(tmp_path / "bad.pgm", np.zeros((7, 16), np.uint8))
    assert main(["mask", "--in", str(src), "--mask", str(tmp_path / "bad.pgm"),
                 "--out", str(tmp_path / "m.nsgc")]) == 2


def test_bench_csv_rows(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bench", "--out", str(out), "--min-exp", "14", "--max-exp", "20",
                 "--iters", "1", "--no-prime"]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert list(rows[0]) == ["variant", "length", "slice_len", "mean_ms", "variance", "outlier"]
    for variant in ("nsgt", "slicq"):
        lengths = [int(r["length"]) for r in rows if r["variant"] == variant]
        assert lengths == [2 ** p for p in range(14, 21)]


def test_approx_csv(tmp_path):
    out = tmp_path / "a.csv"
    assert main(["approx", "--out", str(out), "--n-signals", "2", "--length", "16384",
                 "--slice", "4096", "--transition", "256,512",
                 "--min-filter-lens", "8,16"]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert list(rows[0]) == ["min_filter_len", "slice_len", "transition_len", "snr_db"]
    assert [(r["min_filter_len"], r["transition_len"]) for r in rows] == [
        ("8", "256"), ("16", "256"), ("8", "512"), ("16", "512")]
    assert all(float(r["snr_db"]) > 20 for r in rows)
