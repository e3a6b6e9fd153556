"""Coefficient-domain processing: masking, rasterization and transposition.

Rasterization resamples each channel to a common number ``T`` of time steps by
band-limited interpolation.  The interpolation uses the channel's true
frequency support (the bins around its center), so the raster equals the
coefficients obtained by analysing with ``M_k = T`` for every channel.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidTarget, RangeError, ShapeMismatch
from .frames import NsgSystem
from .slicq import SlicedCoefficients
from .transform import RaggedCoefficients

DB_FLOOR = -100.0


def _unwrapped_centers(system: NsgSystem) -> np.ndarray:
    return np.array([g.support_start + (g.support_len - 1) // 2 for g in system.filters],
                    dtype=np.int64)


def n_cq_channels(system: NsgSystem) -> int:
    """``K``, the number of geometric channels below Nyquist."""
    K = system.meta.get("K")
    if K is None:
        K = (len(system) - 2) // 2
    return int(K)


def mirror_channel(k: int, K: int) -> int:
    return 2 * K + 2 - k


# -- masks -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Mask:
    """Gain mask on a ``(time, channel)`` grid with values in ``[0, 1]``.

    With ``scaling="db"`` a value ``v`` is the gain ``10**(-5 (1 - v))``, so 0
    maps to -100 dB and 1 to 0 dB; with ``"linear"`` the gain is ``v``.
    """

    grid: np.ndarray
    scaling: str = "db"

    def __post_init__(self):
        g = np.clip(np.asarray(self.grid, dtype=np.float64), 0.0, 1.0)
        if g.ndim != 2:
            raise ShapeMismatch("mask grid must be 2-d (time, channel)")
        if self.scaling not in ("db", "linear"):
            raise ValueError(f"unknown mask scaling {self.scaling!r}")
        g.flags.writeable = False
        object.__setattr__(self, "grid", g)

    @property
    def shape(self):
        return self.grid.shape

    def gains(self) -> np.ndarray:
        if self.scaling == "linear":
            return self.grid
        return 10.0 ** (DB_FLOOR / 20 * (1.0 - self.grid))

    def complement(self) -> "Mask":
        return Mask(1.0 - self.grid, self.scaling)


def _nearest_rows(T: int, M: int) -> np.ndarray:
    return np.minimum(((np.arange(M) + 0.5) * T / M).astype(np.int64), T - 1)


def _mask_ragged(c: RaggedCoefficients, gains: np.ndarray) -> RaggedCoefficients:
    T, n = gains.shape
    if n != len(c):
        raise ShapeMismatch(f"mask has {n} channels, coefficients have {len(c)}")
    out = []
    for k, ck in enumerate(c.channels):
        out.append(ck * gains[_nearest_rows(T, ck.shape[-1]), k])
    return RaggedCoefficients(out, c.signal_len)


def apply_mask(c, mask: Mask):
    """Multiply coefficients by mask gains.

    Ragged channels pick the nearest mask row for each time index; raster
    coefficients need a mask of exactly the raster's shape.  For sliced
    coefficients both layers receive the same gains.
    """
    gains = mask.gains()
    if isinstance(c, RasterCoefficients):
        if gains.shape != c.matrix.shape:
            raise ShapeMismatch(
                f"mask shape {gains.shape} differs from raster shape {c.matrix.shape}")
        return RasterCoefficients(c.matrix * gains, c.system)
    if isinstance(c, SlicedCoefficients):
        layers = tuple(_mask_ragged(lay, gains) for lay in c.layers)
        return SlicedCoefficients(layers, c.N, c.M, c.slice_counts)
    return _mask_ragged(c, gains)


# -- rasterization -------------------------------------------------------------

@dataclass(eq=False)
class RasterCoefficients:
    """Coefficients of all channels on a common time grid.

    ``matrix`` has shape ``(T, n_channels)``; ``system`` is the analysis
    system whose filter supports give the frequency location of each channel.
    """

    matrix: np.ndarray
    system: NsgSystem

    @property
    def T(self) -> int:
        return self.matrix.shape[0]


def _window_bins(center: int, M: int):
    # absolute bins represented by the M DFT bins of a channel; for even M the
    # first entry also stands for center + M/2 and is split between both ends
    start = center - M // 2
    return start + np.arange(M)


def band_interpolate(x, T: int, center: int = 0) -> np.ndarray:
    """Periodic band-limited interpolation of ``x`` to ``T`` samples.

    The DFT of ``x`` is read as the bins ``center - M//2 .. center + M//2``
    (the first bin split in half between both ends when ``M`` is even) and
    placed into a length-``T`` spectrum.  With ``center=0`` this is plain
    symmetric zero padding; sample values are kept, so
    ``band_interpolate(x, T)[::T // M] == x`` when ``M`` divides ``T``.
    """
    x = np.asarray(x)
    M = x.shape[-1]
    if T < M:
        raise InvalidTarget(f"cannot interpolate {M} samples down to {T}")
    if T == M:
        return np.array(x, dtype=np.complex128)
    C = np.fft.fft(x) * (T / M)
    j = _window_bins(center, M)
    R = np.zeros(T, dtype=np.complex128)
    R[j % T] = C[j % M]
    if M % 2 == 0:
        half = 0.5 * C[j[0] % M]
        R[j[0] % T] = half
        R[(j[0] + M) % T] += half
    return np.fft.ifft(R)


def band_decimate(y, M: int, center: int = 0) -> np.ndarray:
    """Inverse of :func:`band_interpolate` for the same ``center``."""
    y = np.asarray(y)
    T = y.shape[-1]
    if M > T:
        raise InvalidTarget(f"target length {M} exceeds input length {T}")
    if T == M:
        return np.array(y, dtype=np.complex128)
    R = np.fft.fft(y) * (M / T)
    j = _window_bins(center, M)
    C = np.zeros(M, dtype=np.complex128)
    C[j % M] = R[j % T]
    if M % 2 == 0:
        C[j[0] % M] = R[j[0] % T] + R[(j[0] + M) % T]
    return np.fft.ifft(C)


def rasterize(c: RaggedCoefficients, system: NsgSystem, T: int | None = None) -> RasterCoefficients:
    """Band-limited interpolation of every channel to ``T`` time steps.

    ``T`` defaults to the largest coefficient count.

    Raises
    ------
    InvalidTarget
        If ``T`` is smaller than some channel's length.
    """
    lengths = c.lengths
    if len(c) != len(system) or not np.array_equal(lengths, system.coef_counts):
        raise ShapeMismatch("coefficients do not match the system")
    T = int(lengths.max()) if T is None else int(T)
    if T < lengths.max():
        raise InvalidTarget(f"T={T} is shorter than the longest channel ({lengths.max()})")
    centers = _unwrapped_centers(system)
    mat = np.empty((T, len(c)), dtype=np.complex128)
    for k, ck in enumerate(c.channels):
        if ck.ndim != 1:
            raise ShapeMismatch("rasterize expects unbatched coefficients")
        mat[:, k] = band_interpolate(ck, T, centers[k])
    return RasterCoefficients(mat, system)


def derasterize(r: RasterCoefficients, system: NsgSystem | None = None) -> RaggedCoefficients:
    """Back to per-channel lengths of ``system`` (default: the raster's own).

    Raises
    ------
    InvalidTarget
        If a target length exceeds the raster's time dimension.
    """
    system = r.system if system is None else system
    if len(system) != r.matrix.shape[1]:
        raise ShapeMismatch("raster and target system have different channel counts")
    counts = system.coef_counts
    if counts.max() > r.T:
        raise InvalidTarget(f"target length {counts.max()} exceeds raster length {r.T}")
    centers = _unwrapped_centers(system)
    channels = [band_decimate(r.matrix[:, k], int(M), centers[k])
                for k, M in enumerate(counts)]
    return RaggedCoefficients(channels, system.signal_len)


# -- transposition -------------------------------------------------------------

def transpose_bins(r: RasterCoefficients, shift: int, channel_range=None,
                   real: bool = True) -> RasterCoefficients:
    """Move channels ``k_lo..k_hi`` by ``shift`` channels.

    Only the geometric channels ``1..K`` take part.  The source range is
    cleared and the destination range overwritten.  Each moved channel is
    modulated by the distance between the two channel centers, which is the
    plain translation of the spectrum by that many bins; magnitudes are
    untouched.  With ``real=True`` the mirrored channels of every touched
    channel are rebuilt as conjugates so real signals stay real.

    Raises
    ------
    RangeError
        If the source or destination range leaves ``1..K``.
    """
    system = r.system
    K = n_cq_channels(system)
    k_lo, k_hi = (1, K) if channel_range is None else map(int, channel_range)
    shift = int(shift)
    if not 1 <= k_lo <= k_hi <= K:
        raise RangeError(f"channel range [{k_lo}, {k_hi}] is outside 1..{K}")
    if k_lo + shift < 1 or k_hi + shift > K:
        raise RangeError(
            f"shifting [{k_lo}, {k_hi}] by {shift} leaves the geometric range 1..{K}")
    mat = np.array(r.matrix)
    if shift == 0:
        return RasterCoefficients(mat, system)
    T = r.T
    L = system.signal_len
    centers = _unwrapped_centers(system)
    n = np.arange(T)
    src = np.arange(k_lo, k_hi + 1)
    moved = r.matrix[:, src].copy()
    delta = centers[src + shift] - centers[src]
    moved *= np.exp(2j * np.pi * np.outer(n, delta) / T)
    mat[:, src] = 0
    mat[:, src + shift] = moved
    if real:
        touched = np.union1d(src, src + shift)
        for k in touched:
            m = mirror_channel(int(k), K)
            P = centers[k] + centers[m]
            assert P % L == 0
            mat[:, m] = np.conj(mat[:, k]) * np.exp(2j * np.pi * n * P / T)
    return RasterCoefficients(mat, system)


def conjugate_partner(ck: np.ndarray, k: int, system: NsgSystem) -> np.ndarray:
    """Coefficients the mirrored channel of ``k`` carries for a real signal."""
    centers = _unwrapped_centers(system)
    m = mirror_channel(k, n_cq_channels(system))
    P = centers[k] + centers[m]
    M = ck.shape[-1]
    return np.conj(ck) * np.exp(2j * np.pi * np.arange(M) * P / M)


def channel_energy(c: RaggedCoefficients) -> np.ndarray:
    return np.array([np.sum(np.abs(ck) ** 2) for ck in c.channels])
