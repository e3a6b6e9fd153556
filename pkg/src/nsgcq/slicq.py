"""Sliced constant-Q transform.

The signal is cut into overlapping slices of length ``2N`` by translates of a
Tukey window, each slice is transformed with a painless system of length
``2N`` and the slice coefficients are interleaved into two layers indexed on
the global time axis.

Index map: slice ``m`` covers global samples ``[(m-1)N, (m+1)N)`` (circular);
its window is centered at ``mN`` and is flat on ``[mN - (N-M)/2, mN + (N-M)/2)``.
Slice coefficient ``n_s`` of channel ``k`` goes to position
``n_s + (m-1) N/a_k`` (mod ``L/a_k``) of layer ``m mod 2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .design import CqParams, build_cq_system, upsampled_system
from .errors import InvalidParams, LengthMismatch, OddCoefCount, ShapeMismatch
from .frames import NsgSystem
from .transform import RaggedCoefficients, analyze, analyze_groups, synthesize_groups

#: (N, M) pairs shipped as presets: slice lengths 2N used in the experiments,
#: each with transitions of 2N/4, N/8 and 2N/128.
SLICE_PRESETS = tuple(
    (n, m)
    for n in (2048, 8192, 16384, 32768)
    for m in (n // 2, n // 8, n // 64)
)

DEFAULT_SLICE = (8192, 1024)


@dataclass(frozen=True, eq=False)
class SlicingWindow:
    """A window on the ``2N``-sample slice frame.

    ``values[j]`` multiplies global sample ``(m-1)N + j`` of slice ``m``.
    """

    N: int
    M: int
    values: np.ndarray

    @property
    def support(self) -> tuple:
        nz = np.flatnonzero(self.values)
        return int(nz[0]), int(nz[-1]) + 1

    def on_circle(self, L: int, m: int = 0) -> np.ndarray:
        """The translate ``T_{mN} h_0`` as a length-``L`` vector."""
        out = np.zeros(L)
        idx = ((m - 1) * self.N + np.arange(2 * self.N)) % L
        np.add.at(out, idx, self.values)
        return out


def make_slicing_window(N: int, M: int) -> SlicingWindow:
    """Tukey slicing window with a flat top of ``N - M`` samples and ramps of ``M``.

    Ramps are ``sin^2`` / ``cos^2`` sampled at half-integer points so that
    hop-``N`` translates sum to one.  The window is zero padded symmetrically
    to ``2N`` samples.
    """
    if int(N) != N or int(M) != M:
        raise InvalidParams("N and M must be integers")
    N, M = int(N), int(M)
    if not 0 < M < N:
        raise InvalidParams(f"need 0 < M < N, got N={N}, M={M}")
    if N % 2 or M % 2:
        raise InvalidParams(f"N and M must be even, got N={N}, M={M}")
    t = (np.arange(M) + 0.5) / M
    up = np.sin(np.pi * t / 2) ** 2
    pad = (N - M) // 2
    values = np.concatenate([np.zeros(pad), up, np.ones(N - M), up[::-1], np.zeros(pad)])
    values.flags.writeable = False
    return SlicingWindow(N, M, values)


def dual_slicing_window(h0: SlicingWindow) -> SlicingWindow:
    """Synthesis window for overlap-add: the indicator of the whole slice frame.

    Since ``h0`` vanishes outside its frame and its translates sum to one, the
    constant window satisfies the dual window condition.
    """
    values = np.ones(2 * h0.N)
    values.flags.writeable = False
    return SlicingWindow(h0.N, h0.M, values)


def partition_deviation(h0: SlicingWindow, L: int, dual: SlicingWindow | None = None) -> float:
    """``max |sum_m T_{mN}(h0 * dual) - 1|`` over ``Z_L``; ``dual`` defaults to 1."""
    N = h0.N
    if L % (2 * N):
        raise InvalidParams(f"L={L} is not a multiple of 2N={2 * N}")
    prod = h0.values if dual is None else h0.values * np.conj(dual.values)
    total = np.zeros(L, dtype=np.result_type(prod, float))
    for m in range(L // N):
        idx = ((m - 1) * N + np.arange(2 * N)) % L
        np.add.at(total, idx, prod)
    return float(np.max(np.abs(total - 1)))


@dataclass(eq=False)
class SlicedCoefficients:
    """Two-layer coefficient array on the global time axis.

    ``layers[l].channels[k]`` has length ``(L/2N) * M_k`` where ``M_k`` are the
    slice system's coefficient counts.
    """

    layers: tuple
    N: int
    M: int
    slice_counts: np.ndarray = field(repr=False)

    @property
    def signal_len(self) -> int:
        return self.layers[0].signal_len

    @property
    def n_slices(self) -> int:
        return self.signal_len // self.N

    def combined(self) -> RaggedCoefficients:
        """``s^0 + s^1``, the estimate of the full-length coefficients."""
        return self.layers[0] + self.layers[1]


def _check_slice_system(system2N: NsgSystem, N: int):
    if system2N.signal_len != 2 * N:
        raise LengthMismatch(
            f"slice system has length {system2N.signal_len}, expected 2N={2 * N}")
    odd = np.flatnonzero(system2N.coef_counts % 2)
    if odd.size:
        raise OddCoefCount(
            f"channel {odd[0]} has an odd coefficient count {system2N.coef_counts[odd[0]]}")


def cut_slices(f, h0: SlicingWindow, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Windowed slices ``start..stop-1``, shape ``(stop - start, 2N)``; indices wrap."""
    f = np.asarray(f)
    L, N = f.shape[-1], h0.N
    stop = L // N if stop is None else stop
    idx = ((np.arange(start, stop)[:, None] - 1) * N + np.arange(2 * N)) % L
    return f[idx] * h0.values


# slices per block; keeps temporaries small enough to be reused between blocks
_BLOCK = 16


def slicq_analyze(f, h0: SlicingWindow, system2N: NsgSystem) -> SlicedCoefficients:
    """Sliced analysis of a 1-d signal whose length is a multiple of ``2N``.

    Raises
    ------
    LengthMismatch
        If ``len(f)`` is not a positive multiple of ``2N`` or the slice
        system has the wrong length.
    OddCoefCount
        If a slice coefficient count is odd, so ``N/a_k`` is not integer.
    """
    f = np.asarray(f)
    N = h0.N
    _check_slice_system(system2N, N)
    if f.ndim != 1 or f.size == 0 or f.size % (2 * N):
        raise LengthMismatch(f"signal length {f.shape} is not a multiple of 2N={2 * N}")
    L = f.size
    S = L // N
    out = [[np.empty((grp.channels.size, S // 2, grp.M), dtype=np.complex128)
            for grp in system2N.groups] for _ in range(2)]
    for b0 in range(0, S, _BLOCK):
        b1 = min(S, b0 + _BLOCK)
        blocks = analyze_groups(cut_slices(f, h0, b0, b1), system2N)  # (B, n, M)
        for lay0, lay1, c in zip(out[0], out[1], blocks):
            lay0[:, b0 // 2:b1 // 2] = c[0::2].transpose(1, 0, 2)
            lay1[:, b0 // 2:b1 // 2] = c[1::2].transpose(1, 0, 2)
    layers = ([], [])
    for grp, lay0, lay1 in zip(system2N.groups, out[0], out[1]):
        n = grp.channels.size
        # layer 1 holds slices 1, 3, 5, ... at offsets 0, M, 2M, ...
        layers[1].append(lay1.reshape(n, -1))
        # layer 0 holds slices 0, 2, 4, ... at offsets -M/2, 3M/2, ...
        layers[0].append(np.roll(lay0.reshape(n, -1), -(grp.M // 2), axis=-1))
    shape = _LayerShape(L, system2N)
    return SlicedCoefficients(
        tuple(shape.to_ragged(lay) for lay in layers), N, h0.M, system2N.coef_counts)


class _LayerShape:
    # maps per-group layer matrices to per-channel vectors and back
    def __init__(self, L, system2N):
        self.L = L
        self.system = system2N

    def to_ragged(self, mats) -> RaggedCoefficients:
        channels = [None] * len(self.system)
        for grp, arr in zip(self.system.groups, mats):
            for row, k in enumerate(grp.channels):
                channels[k] = arr[row]
        return RaggedCoefficients(channels, self.L)

    def to_groups(self, rc: RaggedCoefficients) -> list:
        D = self.L // self.system.signal_len
        if len(rc) != len(self.system) or not np.array_equal(
                rc.lengths, self.system.coef_counts * D):
            raise ShapeMismatch("layer shape does not match the slice system")
        return [np.stack([rc.channels[k] for k in grp.channels])
                for grp in self.system.groups]


def slicq_synthesize(s: SlicedCoefficients, h0dual: SlicingWindow,
                     dual2N: NsgSystem) -> np.ndarray:
    """Inverse of :func:`slicq_analyze`: per-slice synthesis and overlap-add."""
    N = s.N
    if h0dual.N != N:
        raise ShapeMismatch("dual slicing window has a different hop")
    _check_slice_system(dual2N, N)
    L = s.signal_len
    S = L // N
    shape = _LayerShape(L, dual2N)
    g0, g1 = shape.to_groups(s.layers[0]), shape.to_groups(s.layers[1])
    g0 = [np.roll(l0, grp.M // 2, axis=-1).reshape(l0.shape[0], S // 2, grp.M)
          for grp, l0 in zip(dual2N.groups, g0)]
    g1 = [l1.reshape(l1.shape[0], S // 2, grp.M) for grp, l1 in zip(dual2N.groups, g1)]
    out = np.zeros(L + N, dtype=np.complex128)  # index 0 is global sample -N
    for b0 in range(0, S, _BLOCK):
        b1 = min(S, b0 + _BLOCK)
        slices = []
        for grp, l0, l1 in zip(dual2N.groups, g0, g1):
            c = np.empty((b1 - b0, grp.channels.size, grp.M), dtype=np.complex128)
            c[0::2] = l0[:, b0 // 2:b1 // 2].transpose(1, 0, 2)
            c[1::2] = l1[:, b0 // 2:b1 // 2].transpose(1, 0, 2)
            slices.append(c)
        frames = synthesize_groups(slices, dual2N) * h0dual.values  # (B, 2N)
        # slices of equal parity tile the axis back to back from (m - 1)N
        span = (b1 - b0) * N
        out[b0 * N:b0 * N + span] += frames[0::2].reshape(-1)
        out[(b0 + 1) * N:(b0 + 1) * N + span] += frames[1::2].reshape(-1)
    out[L:] += out[:N]  # slice 0 starts at -N, which wraps to L - N
    return out[N:]


def slicq_spectrogram(s: SlicedCoefficients) -> list:
    """``|s^0 + s^1|^2`` per channel."""
    return [np.abs(a + b) ** 2 for a, b in zip(s.layers[0].channels, s.layers[1].channels)]


@dataclass(frozen=True)
class Approximation:
    """Comparison of sliced and full-length coefficients."""

    snr_db: float
    residual: RaggedCoefficients
    exact: bool


def approximation_error(c: RaggedCoefficients, s: SlicedCoefficients) -> Approximation:
    """``20 log10(||c|| / ||c - (s0 + s1)||)`` and the per-coefficient residual.

    ``c`` must come from the full-length companion of the slice system (see
    :func:`nsgcq.design.upsampled_system`).  A zero residual gives
    ``snr_db = inf`` and ``exact = True``.
    """
    if c.signal_len != s.signal_len or not np.array_equal(c.lengths, s.layers[0].lengths):
        raise ShapeMismatch("full-length and sliced coefficients have different layouts")
    res = s.combined() - c
    rn = res.norm()
    if rn == 0:
        return Approximation(math.inf, res, True)
    return Approximation(20 * math.log10(c.norm() / rn), res, False)


def residual_bound(f_norm: float, companion: NsgSystem, h0: SlicingWindow) -> list:
    """Per-coefficient upper bound on ``|s0 + s1 - c|`` for each channel.

    For channel ``k`` and in-slice index ``n_s < N/a_k`` the bound is
    ``||f|| (||(1 - h_0 - h_1) T_{n_s a_k} g_k|| +
    ||(h_0 + h_1) sum_{j>=1} T_{n_s a_k + 2jN} g_k||)`` with ``g_k`` the
    companion's time-domain atom; it does not depend on the slice index, so
    the returned arrays are tiled to the full layer length.  Dense in ``L``;
    meant for small diagnostic configurations.
    """
    L, N = companion.signal_len, h0.N
    D = L // (2 * N)
    hsum = h0.on_circle(L, 0) + h0.on_circle(L, 1)
    out = []
    for g, Mk in zip(companion.filters, companion.coef_counts):
        a = L // int(Mk)
        if a * Mk != L:
            raise InvalidParams("bound needs integer time steps")
        atom = np.fft.ifft(g.dense(L)) * math.sqrt(L)  # unitary inverse DFT
        per = N // a
        bound = np.empty(per)
        for ns in range(per):
            t = np.roll(atom, ns * a)
            over = sum(np.roll(t, 2 * j * N) for j in range(1, D)) if D > 1 else 0
            bound[ns] = (np.linalg.norm((1 - hsum) * t)
                         + np.linalg.norm(hsum * over))
        out.append(f_norm * np.tile(bound, int(Mk) // per))
    return out


def slice_system(params: CqParams, N: int) -> NsgSystem:
    """Constant-Q system of length ``2N`` with even coefficient counts."""
    system = build_cq_system(params, 2 * N, even_counts=True)
    _check_slice_system(system, N)
    return system


def full_length_companion(system2N: NsgSystem, L: int) -> NsgSystem:
    return upsampled_system(system2N, L)


def padded_length(n_samples: int, N: int) -> int:
    """Smallest positive multiple of ``2N`` holding ``n_samples``."""
    return max(1, math.ceil(n_samples / (2 * N))) * 2 * N


@dataclass(frozen=True, eq=False)
class SliceFrame:
    """Coefficients of one slice emitted by :class:`SliceStream`.

    ``offsets[k]`` is the (unreduced) position of the first coefficient of
    channel ``k`` in layer ``layer``; reduce modulo the layer length once the
    total length is known.
    """

    m: int
    layer: int
    offsets: np.ndarray
    coefficients: RaggedCoefficients


class SliceStream:
    """Bounded-latency sliced analysis of a sample stream.

    Slice ``m`` is emitted as soon as sample ``(m+1)N - 1`` has arrived.  The
    history before the first sample is taken as zeros, unlike the offline
    transform, which wraps circularly.
    """

    def __init__(self, h0: SlicingWindow, system2N: NsgSystem):
        _check_slice_system(system2N, h0.N)
        self.h0 = h0
        self.system = system2N
        N = h0.N
        self._buf = np.zeros(2 * N, dtype=np.complex128)
        self._fill = N  # the first N buffered samples are the zero history
        self._m = 0
        self.samples_in = 0
        self._closed = False

    @property
    def N(self):
        return self.h0.N

    def _emit(self) -> SliceFrame:
        N = self.N
        c = analyze(self._buf * self.h0.values, self.system)
        offsets = (self._m - 1) * self.system.coef_counts // 2
        frame = SliceFrame(self._m, self._m % 2, offsets, c)
        self._buf[:N] = self._buf[N:]
        self._fill = N
        self._m += 1
        return frame

    def push(self, samples) -> list:
        """Append samples; return the frames completed by them (possibly none)."""
        if self._closed:
            raise RuntimeError("stream already flushed")
        samples = np.asarray(samples).ravel()
        frames = []
        pos = 0
        N2 = 2 * self.N
        while pos < samples.size:
            take = min(N2 - self._fill, samples.size - pos)
            self._buf[self._fill:self._fill + take] = samples[pos:pos + take]
            self._fill += take
            pos += take
            if self._fill == N2:
                frames.append(self._emit())
        self.samples_in += samples.size
        return frames

    def flush(self) -> list:
        """Zero-pad the tail and emit every slice whose window reaches real samples."""
        if self._closed:
            return []
        frames = []
        N, M = self.N, self.h0.M
        # slice m's window starts at m*N - (N+M)/2
        while self._m * N - (N + M) // 2 < self.samples_in:
            self._buf[self._fill:] = 0
            self._fill = 2 * N
            frames.append(self._emit())
        self._closed = True
        return frames


def stream_push(state: SliceStream, samples) -> list:
    return state.push(samples)


def assemble_frames(frames, L: int, N: int, M: int) -> SlicedCoefficients:
    """Rebuild a :class:`SlicedCoefficients` of length ``L`` from stream frames.

    Frames with ``m >= L/N`` wrap around onto the start of the layer, which
    mirrors the circular convention of the offline transform.
    """
    if not frames:
        raise ValueError("no frames")
    counts = frames[0].coefficients.lengths
    D = L // (2 * N)
    layers = [[np.zeros(D * int(Mk), dtype=np.complex128) for Mk in counts]
              for _ in range(2)]
    for fr in frames:
        for k, ck in enumerate(fr.coefficients.channels):
            n = layers[fr.layer][k].size
            idx = (fr.offsets[k] + np.arange(ck.size)) % n
            np.add.at(layers[fr.layer][k], idx, ck)
    return SlicedCoefficients(
        tuple(RaggedCoefficients(lay, L) for lay in layers), N, M, counts)
