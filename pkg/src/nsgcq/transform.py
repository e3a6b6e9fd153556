"""Full-length analysis and synthesis with a painless system.

Normalization: the length-``L`` DFT is unitary, and channel coefficients are
the plain inner products ``c[n, k] = <f_hat, M_{-n a_k} g_k>``, i.e. the
periodized product ``f_hat * g_k`` followed by an unnormalized inverse DFT of
length ``M_k``.  Synthesis uses the matching unnormalized forward DFT, so
``synthesize(analyze(f, g), canonical_dual(g)) == f``.

Channels with equal ``M_k`` are processed together with one batched FFT; all
functions accept leading batch axes on the signal.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .errors import LengthMismatch, NonRealResult, ShapeMismatch
from .frames import NsgSystem


@dataclass(eq=False)
class RaggedCoefficients:
    """Per-channel coefficient vectors of differing lengths.

    ``channels[k]`` has shape ``(..., M_k)``; leading axes are batch axes.
    """

    channels: list
    signal_len: int

    def __len__(self):
        return len(self.channels)

    def __getitem__(self, k):
        return self.channels[k]

    @property
    def lengths(self) -> np.ndarray:
        return np.array([c.shape[-1] for c in self.channels], dtype=np.int64)

    def copy(self) -> "RaggedCoefficients":
        return RaggedCoefficients([np.array(c) for c in self.channels], self.signal_len)

    def map(self, fn) -> "RaggedCoefficients":
        return RaggedCoefficients([fn(c) for c in self.channels], self.signal_len)

    def norm(self) -> float:
        return float(np.sqrt(sum(np.sum(np.abs(c) ** 2) for c in self.channels)))

    def __add__(self, other):
        _check_like(self, other)
        return RaggedCoefficients(
            [a + b for a, b in zip(self.channels, other.channels)], self.signal_len)

    def __sub__(self, other):
        _check_like(self, other)
        return RaggedCoefficients(
            [a - b for a, b in zip(self.channels, other.channels)], self.signal_len)

    def __mul__(self, scalar):
        return self.map(lambda c: c * scalar)

    __rmul__ = __mul__


def _check_like(a: RaggedCoefficients, b: RaggedCoefficients):
    if a.signal_len != b.signal_len or not np.array_equal(a.lengths, b.lengths):
        raise ShapeMismatch("coefficient arrays have different layouts")


def analyze_groups(f, system: NsgSystem) -> list:
    """Coefficients grouped as in ``system.groups``: arrays ``(..., n_ch, M)``."""
    f = np.asarray(f)
    L = system.signal_len
    if f.shape[-1:] != (L,):
        raise LengthMismatch(f"signal has length {f.shape[-1:]} but the system expects {L}")
    batch = f.shape[:-1]
    fhat = sfft.fft(f, axis=-1, norm="ortho")
    out = []
    for grp in system.groups:
        n = grp.channels.size
        buf = np.zeros(batch + (n * grp.M,), dtype=np.complex128)
        # support_len <= M, so every support bin lands in its own slot
        buf[..., grp.dst] = fhat[..., grp.src] * grp.weights
        buf = buf.reshape(batch + (n, grp.M))
        out.append(sfft.ifft(buf, axis=-1, norm="forward"))
    return out


def groups_to_ragged(groups, system: NsgSystem) -> RaggedCoefficients:
    channels = [None] * len(system)
    for grp, arr in zip(system.groups, groups):
        for row, k in enumerate(grp.channels):
            channels[k] = arr[..., row, :]
    return RaggedCoefficients(channels, system.signal_len)


def ragged_to_groups(c: RaggedCoefficients, system: NsgSystem) -> list:
    if len(c) != len(system) or c.signal_len != system.signal_len:
        raise ShapeMismatch(
            f"{len(c)} channels at L={c.signal_len} do not match a system with "
            f"{len(system)} channels at L={system.signal_len}")
    if not np.array_equal(c.lengths, system.coef_counts):
        raise ShapeMismatch("channel lengths differ from the system's coefficient counts")
    return [np.stack([c.channels[k] for k in grp.channels], axis=-2)
            for grp in system.groups]


def synthesize_groups(groups, dual: NsgSystem) -> np.ndarray:
    L = dual.signal_len
    batch = groups[0].shape[:-2]
    nb = int(np.prod(batch, dtype=np.int64))
    re = np.zeros(nb * L)
    im = np.zeros(nb * L)
    offs = (np.arange(nb) * L)[:, None]
    for grp, arr in zip(dual.groups, groups):
        if arr.shape[-2:] != (grp.channels.size, grp.M):
            raise ShapeMismatch("coefficient group does not match the dual system")
        F = sfft.fft(arr, axis=-1, norm="backward").reshape(nb, -1)
        vals = F[:, grp.dst] * grp.weights
        idx = (offs + grp.src).ravel()
        re += np.bincount(idx, weights=vals.real.ravel(), minlength=nb * L)
        im += np.bincount(idx, weights=vals.imag.ravel(), minlength=nb * L)
    spec = (re + 1j * im).reshape(batch + (L,))
    return sfft.ifft(spec, axis=-1, norm="ortho")


def analyze(f, system: NsgSystem) -> RaggedCoefficients:
    """Analysis with a painless system.

    Parameters
    ----------
    f : array_like, shape (..., L)
        Complex or real signal(s); leading axes are treated as a batch.
    system : NsgSystem

    Returns
    -------
    RaggedCoefficients
        ``channels[k][..., n] = <f_hat, M_{-n a_k} g_k>``.
    """
    return groups_to_ragged(analyze_groups(f, system), system)


def synthesize(c: RaggedCoefficients, dual: NsgSystem) -> np.ndarray:
    """Synthesis with the (dual) system ``dual``; returns a complex signal."""
    return synthesize_groups(ragged_to_groups(c, dual), dual)


def real_analyze(f, system: NsgSystem) -> RaggedCoefficients:
    f = np.asarray(f)
    if np.iscomplexobj(f):
        raise TypeError("real_analyze expects a real signal")
    return analyze(f.astype(np.float64, copy=False), system)


def real_synthesize(c: RaggedCoefficients, dual: NsgSystem, rtol: float = 1e-9) -> np.ndarray:
    """Synthesis that drops the imaginary part after checking it is negligible.

    Raises
    ------
    NonRealResult
        If ``max |imag| > rtol * ||real||_2`` (per batch item).
    """
    out = synthesize(c, dual)
    return take_real(out, rtol)


def take_real(out, rtol: float = 1e-9) -> np.ndarray:
    """Real part of ``out`` after checking the imaginary part is negligible."""
    peak = np.max(np.abs(out.imag), axis=-1)
    scale = np.linalg.norm(out.real, axis=-1)
    if np.any(peak > rtol * np.maximum(scale, np.finfo(float).tiny)):
        raise NonRealResult(
            f"imaginary part up to {np.max(peak):.3g} for a signal of norm "
            f"{np.max(scale):.3g}; the filterbank is not conjugate symmetric")
    return np.ascontiguousarray(out.real)
