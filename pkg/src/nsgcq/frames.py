"""Painless nonstationary Gabor systems on the frequency axis.

A system is a list of real filters ``g_k`` living on ``Z_L`` (the DFT bins of
a length-``L`` signal), each with a coefficient count ``M_k = L / a_k``.
Atoms are modulations ``M_{-n a_k} g_k``; their inverse DFTs are time shifts
of the filter impulse responses.  When every ``M_k`` is at least the support
length of ``g_k`` (the painless condition) the frame operator is diagonal in
frequency and the canonical dual is obtained by a pointwise division.

Supports are stored as a contiguous run of bins starting at
``support_start``.  The run may extend past ``L``; bins are then taken modulo
``L``.  The *unwrapped* index ``support_start + i`` is the representative
used in every modulation exponent, so atoms stay well defined even when
``M_k`` does not divide ``L``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import NotAFrame, ShapeMismatch


def _frozen(a, dtype=np.float64) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Filter:
    """Samples of a real filter on its support.

    Parameters
    ----------
    values : array_like
        Filter samples on the support, in increasing bin order.
    support_start : int
        First support bin, in ``[0, L)``.
    center_bin : int
        Nominal center frequency bin ``omega_k`` in ``[0, L)``.
    """

    values: np.ndarray
    support_start: int
    center_bin: int

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 1 or v.size == 0:
            raise ShapeMismatch("filter values must be a non-empty 1-d array")
        if not np.all(np.isfinite(v)):
            raise ValueError("filter values must be finite")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "support_start", int(self.support_start))
        object.__setattr__(self, "center_bin", int(self.center_bin))

    @property
    def support_len(self) -> int:
        return self.values.size

    def unwrapped_bins(self) -> np.ndarray:
        return self.support_start + np.arange(self.support_len)

    def dense(self, L: int) -> np.ndarray:
        """Full length-``L`` vector of the filter."""
        out = np.zeros(L)
        np.add.at(out, self.unwrapped_bins() % L, self.values)
        return out


@dataclass(frozen=True)
class _Group:
    # channels sharing one coefficient count, processed with one batched FFT
    M: int
    channels: np.ndarray  # channel indices, in system order
    src: np.ndarray  # bins of the length-L spectrum (already reduced mod L)
    dst: np.ndarray  # positions in the flattened (n_channels * M) buffer
    weights: np.ndarray  # filter values aligned with src/dst


@dataclass(frozen=True, eq=False)
class NsgSystem:
    """A frequency-side nonstationary Gabor system for signals of length ``L``.

    Parameters
    ----------
    signal_len : int
        Signal length ``L``.
    filters : sequence of Filter
        One filter per channel.
    coef_counts : sequence of int
        Coefficient counts ``M_k = L / a_k``, one per filter.
    """

    signal_len: int
    filters: tuple
    coef_counts: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        L = int(self.signal_len)
        filters = tuple(self.filters)
        counts = np.asarray(self.coef_counts, dtype=np.int64)
        if L < 1:
            raise ValueError("signal length must be positive")
        if counts.shape != (len(filters),):
            raise ShapeMismatch(
                f"{len(filters)} filters but {counts.size} coefficient counts")
        if np.any(counts < 1) or np.any(counts > L):
            raise ValueError("coefficient counts must lie in [1, L]")
        for g in filters:
            if not 0 <= g.support_start < L:
                raise ValueError("support_start must lie in [0, L)")
            if g.support_len > L:
                raise ValueError("filter support longer than the signal")
        counts.flags.writeable = False
        object.__setattr__(self, "signal_len", L)
        object.__setattr__(self, "filters", filters)
        object.__setattr__(self, "coef_counts", counts)

    def __len__(self) -> int:
        return len(self.filters)

    @property
    def support_lens(self) -> np.ndarray:
        return np.array([g.support_len for g in self.filters], dtype=np.int64)

    @property
    def center_bins(self) -> np.ndarray:
        return np.array([g.center_bin for g in self.filters], dtype=np.int64)

    def with_values(self, values: Sequence[np.ndarray]) -> "NsgSystem":
        """Same supports and counts, new filter samples."""
        filters = tuple(
            Filter(v, g.support_start, g.center_bin)
            for g, v in zip(self.filters, values, strict=True))
        return NsgSystem(self.signal_len, filters, self.coef_counts, dict(self.meta))

    def with_counts(self, coef_counts) -> "NsgSystem":
        return NsgSystem(self.signal_len, self.filters, coef_counts, dict(self.meta))

    @cached_property
    def groups(self) -> tuple:
        """Channels bucketed by coefficient count with precomputed scatter maps."""
        L = self.signal_len
        out = []
        for M in np.unique(self.coef_counts):
            ks = np.flatnonzero(self.coef_counts == M)
            src, dst, w = [], [], []
            for row, k in enumerate(ks):
                g = self.filters[k]
                j = g.unwrapped_bins()
                src.append(j % L)
                dst.append(row * M + j % M)
                w.append(g.values)
            out.append(_Group(int(M), ks, np.concatenate(src),
                              np.concatenate(dst), np.concatenate(w)))
        return tuple(out)


@dataclass(frozen=True, eq=False)
class FrameDiagonal:
    """Diagonal of the frame operator in the frequency domain."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))

    @property
    def lower(self) -> float:
        return float(self.values.min())

    @property
    def upper(self) -> float:
        return float(self.values.max())


@dataclass(frozen=True)
class FrameCheck:
    """Outcome of :func:`is_painless_frame`.

    ``bounds`` holds the min/max of the frame diagonal, which are the optimal
    frame bounds for a painless system.
    """

    ok: bool
    bounds: tuple
    painless_violation: int | None = None
    uncovered_bin: int | None = None
    message: str = ""

    def __bool__(self):
        return self.ok


def frame_diagonal(system: NsgSystem) -> FrameDiagonal:
    """Return ``sum_k M_k |g_k[j]|^2`` for every bin ``j``."""
    L = system.signal_len
    idx = np.concatenate([g.unwrapped_bins() % L for g in system.filters])
    w = np.concatenate([M * g.values ** 2
                        for g, M in zip(system.filters, system.coef_counts)])
    return FrameDiagonal(np.bincount(idx, weights=w, minlength=L))


def is_painless_frame(system: NsgSystem) -> FrameCheck:
    """Check the painless support condition and positivity of the frame diagonal.

    Never raises; the returned :class:`FrameCheck` is falsy when the system is
    not a painless frame and describes the first violation found.
    """
    d = frame_diagonal(system).values
    bounds = (float(d.min()), float(d.max()))
    bad = np.flatnonzero(system.coef_counts < system.support_lens)
    if bad.size:
        k = int(bad[0])
        return FrameCheck(
            False, bounds, painless_violation=k,
            message=(f"channel {k}: {system.coef_counts[k]} coefficients for "
                     f"a support of {system.filters[k].support_len} bins"))
    if not np.all(np.isfinite(d)):
        j = int(np.flatnonzero(~np.isfinite(d))[0])
        return FrameCheck(False, bounds, uncovered_bin=j,
                          message=f"bin {j}: non-finite frame diagonal")
    if bounds[0] <= 0:
        j = int(np.argmin(d))
        return FrameCheck(False, bounds, uncovered_bin=j,
                          message=f"bin {j} is not covered by any filter")
    return FrameCheck(True, bounds)


def canonical_dual(system: NsgSystem) -> NsgSystem:
    """Canonical dual system, ``g_k / diag`` on every support.

    Raises
    ------
    NotAFrame
        If the system is not a painless frame.
    """
    check = is_painless_frame(system)
    if not check:
        raise NotAFrame(check.message)
    L = system.signal_len
    d = frame_diagonal(system).values
    values = [g.values / d[g.unwrapped_bins() % L] for g in system.filters]
    dual = system.with_values(values)
    dual.meta["dual"] = True
    return dual
