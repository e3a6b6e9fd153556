import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nsgcq.design import CqParams, build_cq_system
from nsgcq.errors import InvalidParams, LengthMismatch, OddCoefCount
from nsgcq.frames import canonical_dual
from nsgcq.slicq import (SLICE_PRESETS, SliceStream, approximation_error, assemble_frames,
                         cut_slices, dual_slicing_window, full_length_companion,
                         make_slicing_window, padded_length, partition_deviation, residual_bound,
                         slice_system, slicq_analyze, slicq_spectrogram, slicq_synthesize,
                         stream_push)
from nsgcq.transform import analyze

SMALL = CqParams(xi_min=200, xi_max=2000, xi_s=8000, bins=12, min_filter_len=8)
N, M = 128, 32


@pytest.fixture(scope="module")
def toy():
    s = slice_system(SMALL, N)
    return s, canonical_dual(s), make_slicing_window(N, M)


@pytest.mark.parametrize("n,m", SLICE_PRESETS)
def test_presets_partition_unity(n, m):
    h0 = make_slicing_window(n, m)
    assert h0.values.size == 2 * n
    assert partition_deviation(h0, 4 * n) <= 1e-12
    assert partition_deviation(h0, 4 * n, dual_slicing_window(h0)) <= 1e-12


def test_window_geometry():
    h0 = make_slicing_window(N, M)
    lo, hi = h0.support
    assert (lo, hi) == ((N - M) // 2, 2 * N - (N - M) // 2)
    flat = np.flatnonzero(h0.values == 1)
    assert flat.size == N - M
    np.testing.assert_allclose(h0.values, h0.values[::-1], atol=1e-15)


def test_self_dual_window_is_not_a_dual():
    h0 = make_slicing_window(N, M)
    assert partition_deviation(h0, 4 * N, h0) > 0.1


@pytest.mark.parametrize("n,m", [(128, 0), (128, 128), (128, 200), (127, 32), (128, 31)])
def test_invalid_windows(n, m):
    with pytest.raises(InvalidParams):
        make_slicing_window(n, m)


@given(D=st.sampled_from([2, 4, 6, 10]), seed=st.integers(0, 2 ** 32 - 1))
def test_sliced_perfect_reconstruction(D, seed, toy):
    s, d, h0 = toy
    L = D * 2 * N
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(L) + 1j * rng.standard_normal(L)
    y = slicq_synthesize(slicq_analyze(f, h0, s), dual_slicing_window(h0), d)
    assert np.linalg.norm(y - f) / np.linalg.norm(f) < 1e-12


def test_layer_shapes(toy):
    s, _, h0 = toy
    L = 8 * N
    c = slicq_analyze(np.zeros(L), h0, s)
    assert c.n_slices == 8
    for layer in c.layers:
        np.testing.assert_array_equal(layer.lengths, s.coef_counts * (L // (2 * N)))


def test_impulse_touches_only_covering_slices(toy):
    s, _, h0 = toy
    L, t = 8 * N, 3 * N + 5
    f = np.zeros(L)
    f[t] = 1.0
    slices = cut_slices(f, h0)
    stream = SliceStream(h0, s)
    frames = stream.push(f) + stream.flush()
    lo, hi = h0.support
    for fr in frames:
        start = (fr.m - 1) * N
        covers = lo <= (t - start) % L < hi
        energy = fr.coefficients.norm()
        assert (energy > 0) == covers, fr.m
        if fr.m < L // N:
            assert (np.abs(slices[fr.m]).max() > 0) == covers


@given(chunks=st.lists(st.integers(1, 700), min_size=1, max_size=12),
       seed=st.integers(0, 2 ** 32 - 1))
def test_stream_matches_offline(chunks, seed, toy):
    s, _, h0 = toy
    L = 6 * N
    f = np.random.default_rng(seed).standard_normal(L)
    stream = SliceStream(h0, s)
    frames, pos = [], 0
    for size in chunks:
        frames += stream_push(stream, f[pos:pos + size])
        pos += size
        if pos >= L:
            break
    if pos < L:
        frames += stream.push(f[pos:])
    frames += stream.flush()
    got = assemble_frames(frames, L, N, M)
    ref = slicq_analyze(f, h0, s)
    for a, b in zip(got.layers, ref.layers):
        for x, y in zip(a.channels, b.channels):
            np.testing.assert_allclose(x, y, atol=1e-12)


def test_stream_latency(toy):
    s, _, h0 = toy
    stream = SliceStream(h0, s)
    assert stream.push(np.zeros(N - 1)) == []
    assert len(stream.push(np.zeros(1))) == 1
    assert len(stream.push(np.zeros(N))) == 1
    with pytest.raises(RuntimeError):
        stream.flush()
        stream.push(np.zeros(1))


def test_pure_tone_has_flat_magnitude(toy):
    s, _, h0 = toy
    L = 16 * N
    k = 20
    w = s.center_bins[k] * (L // (2 * N)) + 0.3
    x = np.cos(2 * np.pi * w * np.arange(L) / L)
    mag = np.sqrt(slicq_spectrogram(slicq_analyze(x, h0, s))[k])
    assert mag.std() / mag.mean() < 0.05


def test_single_slice_pair_is_exact(rng, toy):
    # with L = 2N both slices see the whole circle and s0 + s1 equals c
    s, _, h0 = toy
    f = rng.standard_normal(2 * N)
    res = approximation_error(analyze(f, s), slicq_analyze(f, h0, s))
    assert res.snr_db > 250


def test_residual_bound_holds(rng):
    L, n, m = 1024, 128, 32
    s = slice_system(SMALL, n)
    comp = full_length_companion(s, L)
    h0 = make_slicing_window(n, m)
    for _ in range(3):
        f = rng.standard_normal(L) + 1j * rng.standard_normal(L)
        res = approximation_error(analyze(f, comp), slicq_analyze(f, h0, s)).residual
        bound = residual_bound(np.linalg.norm(f), comp, h0)
        for r, b in zip(res.channels, bound):
            assert np.all(np.abs(r) <= b * (1 + 1e-9) + 1e-12)


def test_longer_filters_approximate_better(rng):
    L, n, m = 4096, 256, 64
    f = rng.standard_normal(L) + 1j * rng.standard_normal(L)
    snr = []
    for mfl in (4, 16, 64):
        s = slice_system(SMALL.replace(min_filter_len=mfl), n)
        comp = full_length_companion(s, L)
        snr.append(approximation_error(analyze(f, comp),
                                       slicq_analyze(f, make_slicing_window(n, m), s)).snr_db)
    assert snr[0] < snr[1] < snr[2]


def test_slice_errors(toy):
    s, _, h0 = toy
    with pytest.raises(LengthMismatch):
        slicq_analyze(np.zeros(3 * N), h0, s)
    with pytest.raises(LengthMismatch):
        slicq_analyze(np.zeros(4 * N), make_slicing_window(2 * N, M), s)
    odd = build_cq_system(SMALL, 2 * N).with_counts(
        [c + 1 if i == 3 else c for i, c in enumerate(s.coef_counts)])
    with pytest.raises(OddCoefCount):
        slicq_analyze(np.zeros(4 * N), h0, odd)


@pytest.mark.parametrize("n_samples,expect", [(1, 256), (256, 256), (257, 512), (44100, 49152)])
def test_padded_length(n_samples, expect):
    hop = 128 if expect < 1000 else 8192
    assert padded_length(n_samples, hop) == expect
