"""Constant-Q filterbank design.

Channel ``0`` is a plateau around DC, channels ``1..K`` are geometrically
spaced with a common Q factor, channel ``K+1`` is a plateau around Nyquist and
channels ``K+2..2K+1`` mirror ``K..1`` across Nyquist so that real signals
produce conjugate channel pairs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DesignFailure, InvalidParams
from .frames import Filter, NsgSystem, is_painless_frame

SHAPES = ("hann", "blackman_harris")

_BH = (0.35875, 0.48829, 0.14128, 0.01168)


def window_shape(name: str, x) -> np.ndarray:
    """Evaluate the prototype ``H`` at ``x``; zero outside ``]-1/2, 1/2[``."""
    x = np.asarray(x, dtype=np.float64)
    inside = np.abs(x) < 0.5
    if name == "hann":
        y = np.cos(np.pi * x) ** 2
    elif name == "blackman_harris":
        t = 2 * np.pi * (x + 0.5)
        a0, a1, a2, a3 = _BH
        y = a0 - a1 * np.cos(t) + a2 * np.cos(2 * t) - a3 * np.cos(3 * t)
    else:
        raise InvalidParams(f"unknown window shape {name!r}; expected one of {SHAPES}")
    return np.where(inside, y, 0.0)


@dataclass(frozen=True)
class CqParams:
    """Design parameters.  Frequencies are in Hz, ``xi_s`` is the sampling rate."""

    xi_min: float = 50.0
    xi_max: float = 20000.0
    xi_s: float = 44100.0
    bins: int = 48
    shape: str = "hann"
    min_filter_len: int = 16

    def __post_init__(self):
        if not 0 < self.xi_min < self.xi_max < self.xi_s / 2:
            raise InvalidParams(
                "need 0 < xi_min < xi_max < xi_s/2, got "
                f"xi_min={self.xi_min}, xi_max={self.xi_max}, xi_s={self.xi_s}")
        if int(self.bins) != self.bins or self.bins < 1:
            raise InvalidParams(f"bins must be a positive integer, got {self.bins}")
        if int(self.min_filter_len) != self.min_filter_len or self.min_filter_len < 1:
            raise InvalidParams(
                f"min_filter_len must be a positive integer, got {self.min_filter_len}")
        if self.shape not in SHAPES:
            raise InvalidParams(f"unknown window shape {self.shape!r}")
        object.__setattr__(self, "bins", int(self.bins))
        object.__setattr__(self, "min_filter_len", int(self.min_filter_len))

    def replace(self, **changes) -> "CqParams":
        return replace(self, **changes)


def q_factor(bins: int) -> float:
    return 1.0 / (2.0 ** (1.0 / bins) - 2.0 ** (-1.0 / bins))


@dataclass(frozen=True)
class CqLayout:
    center_freqs: np.ndarray
    bandwidths: np.ndarray
    K: int
    Q: float

    @property
    def n_channels(self) -> int:
        return self.center_freqs.size


def cq_layout(params: CqParams) -> CqLayout:
    """Center frequencies and bandwidths of all ``2K+2`` channels.

    ``K`` is the smallest integer with ``xi_K >= xi_max``.
    """
    B, fmin, fs = params.bins, params.xi_min, params.xi_s
    K = 1 + math.ceil(B * math.log2(params.xi_max / fmin))
    # guard the float log against off-by-one in either direction
    while K > 1 and fmin * 2.0 ** ((K - 2) / B) >= params.xi_max:
        K -= 1
    while fmin * 2.0 ** ((K - 1) / B) < params.xi_max:
        K += 1
    Q = q_factor(B)
    xi = fmin * 2.0 ** (np.arange(K) / B)
    xi_K = xi[-1]
    if xi_K >= fs / 2:
        raise InvalidParams(
            f"top channel at {xi_K:.3f} Hz reaches Nyquist ({fs / 2} Hz); lower xi_max")
    if fs - 2 * xi_K <= 0:
        raise InvalidParams("degenerate Nyquist channel bandwidth")
    centers = np.concatenate([[0.0], xi, [fs / 2], fs - xi[::-1]])
    bw = np.concatenate([[2 * fmin], xi / Q, [fs - 2 * xi_K], xi[::-1] / Q])
    return CqLayout(centers, bw, K, Q)


@dataclass(frozen=True)
class _Profile:
    # Continuous description of one filter in bin units of the design length.
    kind: str  # "bell" or "plateau"
    center: float  # unwrapped center position
    half: float  # positive exactly on the open interval (center - half, center + half)
    ramp: float = 0.0  # plateau ramp length
    shape: str = "hann"
    length: int = 0  # bell width L_k

    def evaluate(self, x) -> np.ndarray:
        if self.kind == "bell":
            return window_shape(self.shape, (x - self.center) / self.length)
        d = self.half - np.abs(x - self.center)
        r = self.ramp
        return np.where(d >= r, 1.0, np.sin(np.pi * np.clip(d, 0, r) / (2 * r)) ** 2)

    def sample(self, scale: int, L: int, center_bin: int) -> Filter:
        """Sample at bins ``j`` with position ``j / scale`` inside the open support."""
        lo = math.floor((self.center - self.half) * scale) + 1
        hi = math.ceil((self.center + self.half) * scale) - 1
        j = np.arange(lo, hi + 1)
        values = self.evaluate(j / scale)
        return Filter(values, lo % L, center_bin % L)


@dataclass(frozen=True)
class CqDesign:
    """Everything needed to sample the filterbank at some length."""

    params: CqParams
    layout: CqLayout
    signal_len: int
    profiles: tuple = field(repr=False)
    center_bins: np.ndarray = field(repr=False)
    support_lens: np.ndarray = field(repr=False)


def _smooth_numbers(limit: int) -> np.ndarray:
    out = []
    p2 = 1
    while p2 <= limit:
        p3 = p2
        while p3 <= limit:
            out.append(p3)
            p3 *= 3
        p2 *= 2
    return np.array(sorted(out), dtype=np.int64)


def coefficient_count(support_len: int, L: int, even: bool = True) -> int:
    """Coefficient count for a channel of the given support length.

    Prefers the smallest 2-3-smooth (even) divisor of ``L`` that is at least
    ``support_len``, which keeps the time step integer; otherwise the smallest
    2-3-smooth (even) number at least ``support_len``; ``L`` as a last resort.
    """
    smooth = _smooth_numbers(L)
    ok = smooth >= support_len
    if even:
        ok &= smooth % 2 == 0
    cand = smooth[ok]
    div = cand[L % cand == 0]
    if div.size:
        return int(div[0])
    if cand.size:
        return int(cand[0])
    return L


def cq_design(params: CqParams, L: int) -> CqDesign:
    """Round the layout to bins of a length-``L`` grid and describe every filter."""
    lay = cq_layout(params)
    K, fs = lay.K, params.xi_s
    if L < 2:
        raise InvalidParams("signal length must be at least 2")
    max_odd = L if L % 2 else L - 1
    xi = lay.center_freqs[1:K + 1]
    omega = np.rint(xi * L / fs).astype(np.int64)
    lk = np.ceil(lay.bandwidths[1:K + 1] * L / fs - 1e-9).astype(np.int64)
    lk = np.maximum(lk, params.min_filter_len)
    lk += (lk % 2 == 0)
    lk = np.minimum(lk, max_odd)

    profiles = [None] * (2 * K + 2)
    centers = np.zeros(2 * K + 2, dtype=np.int64)
    for i in range(K):
        k = i + 1
        m = 2 * K + 2 - k
        profiles[k] = _Profile("bell", float(omega[i]), lk[i] / 2, shape=params.shape,
                               length=int(lk[i]))
        profiles[m] = _Profile("bell", float(L - omega[i]), lk[i] / 2,
                               shape=params.shape, length=int(lk[i]))
        centers[k], centers[m] = omega[i], (L - omega[i]) % L

    # plateaus: flat where the neighbours are below half height, ramping to
    # zero at the neighbours' peaks
    e0 = float(max(omega[0], 1))
    profiles[0] = _Profile("plateau", 0.0, e0, ramp=min(max(lk[0] / 4, 1.0), e0))
    eN = max(L / 2 - omega[-1], 1.0)
    profiles[K + 1] = _Profile("plateau", L / 2, eN, ramp=min(max(lk[-1] / 4, 1.0), eN))
    centers[0], centers[K + 1] = 0, (L // 2)
    supp = np.array([p.sample(1, L, 0).support_len for p in profiles], dtype=np.int64)
    if np.any(supp > L):
        raise DesignFailure("a filter support exceeds the signal length; increase L")
    return CqDesign(params, lay, L, tuple(profiles), centers, supp)


def build_cq_system(params: CqParams, L: int, even_counts: bool = True) -> NsgSystem:
    """Sample the constant-Q filterbank for signals of length ``L``.

    Raises
    ------
    InvalidParams
        If the layout is invalid for ``params``.
    DesignFailure
        If the resulting filters do not cover every frequency bin.
    """
    des = cq_design(params, L)
    filters = [p.sample(1, L, c) for p, c in zip(des.profiles, des.center_bins)]
    counts = [coefficient_count(g.support_len, L, even=even_counts and L % 2 == 0)
              for g in filters]
    system = NsgSystem(L, filters, counts,
                       meta={"params": params, "K": des.layout.K, "design": des})
    check = is_painless_frame(system)
    if not check:
        raise DesignFailure(f"constant-Q design failed at L={L}: {check.message}")
    return system


def upsampled_system(slice_system: NsgSystem, L: int) -> NsgSystem:
    """Full-length companion of a slice filterbank.

    Filters are the slice profiles evaluated on the finer grid of length ``L``
    so that sampling every ``L/(2N)``-th bin returns the slice filter, scaled
    by ``sqrt(2N/L)`` so that periodizing a companion atom with period ``2N``
    gives exactly the slice atom under unitary DFTs.  Coefficient counts are
    ``L/(2N)`` times the slice counts, which keeps the time steps equal.
    """
    des: CqDesign = slice_system.meta.get("design")
    if des is None:
        raise InvalidParams("slice system was not produced by build_cq_system")
    n2 = slice_system.signal_len
    if L % n2:
        raise InvalidParams(f"L={L} is not a multiple of the slice length {n2}")
    D = L // n2
    filters = [p.sample(D, L, c * D) for p, c in zip(des.profiles, des.center_bins)]
    filters = [Filter(g.values / math.sqrt(D), g.support_start, g.center_bin)
               for g in filters]
    return NsgSystem(L, filters, slice_system.coef_counts * D,
                     meta={"params": des.params, "K": des.layout.K, "companion_of": n2})
