"""Runtime scaling and sliced approximation experiments.

Timings cover one analysis plus one synthesis on a random signal; building
the filterbank, its dual and the slicing windows happens before the clock
starts.
"""
from __future__ import annotations

import csv
import io
import math
import time
from contextlib import nullcontext
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .design import CqParams, build_cq_system
from .frames import canonical_dual
from .slicq import (DEFAULT_SLICE, approximation_error, dual_slicing_window,
                    full_length_companion, make_slicing_window, slice_system,
                    slicq_analyze, slicq_synthesize)
from .transform import analyze, analyze_groups, synthesize_groups

VARIANTS = ("nsgt", "slicq")
SCALING_FIELDS = ("variant", "length", "slice_len", "mean_ms", "variance", "outlier")
APPROX_FIELDS = ("min_filter_len", "slice_len", "transition_len", "snr_db")


@dataclass(frozen=True)
class BenchRow:
    variant: str
    length: int
    mean_seconds: float
    variance: float  # of the per-iteration time, in s^2
    slice_len: int | None = None
    outlier: bool = False


@dataclass
class BenchResult:
    rows: list
    slopes: dict = field(default_factory=dict)

    def rows_for(self, variant: str, outliers: bool = False) -> list:
        return [r for r in self.rows if r.variant == variant and (outliers or not r.outlier)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SCALING_FIELDS)
        for r in self.rows:
            w.writerow([r.variant, r.length, r.slice_len or "",
                        f"{r.mean_seconds * 1e3:.6g}", f"{r.variance * 1e6:.6g}",
                        int(r.outlier)])
        return buf.getvalue()


def fit_slope(lengths, seconds) -> float:
    """Least-squares slope of ``log(time)`` against ``log(L)``."""
    lengths = np.asarray(lengths, dtype=np.float64)
    if np.unique(lengths).size < 2:
        raise ValueError("need at least two distinct lengths")
    return float(np.polyfit(np.log(lengths), np.log(np.asarray(seconds)), 1)[0])


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % p for p in range(2, math.isqrt(n) + 1))


def previous_prime(n: int) -> int:
    while not _is_prime(n):
        n -= 1
    return n


def _roundtrip_nsgt(params, L):
    system = build_cq_system(params, L, even_counts=L % 2 == 0)
    dual = canonical_dual(system)
    return lambda f: synthesize_groups(analyze_groups(f, system), dual)


def _roundtrip_slicq(params, N, M):
    system = slice_system(params, N)
    dual = canonical_dual(system)
    h0 = make_slicing_window(N, M)
    hd = dual_slicing_window(h0)
    return lambda f: slicq_synthesize(slicq_analyze(f, h0, system), hd, dual)


def _time(fn, f, iters):
    fn(f)  # warm-up, discarded
    out = np.empty(iters)
    for i in range(iters):
        t0 = time.perf_counter()
        fn(f)
        out[i] = time.perf_counter() - t0
    return out


def run_scaling(variants=VARIANTS, lengths=tuple(2 ** p for p in range(14, 21)),
                iters: int = 50, params: CqParams | None = None,
                slice_config=DEFAULT_SLICE, prime_length: int | None = 0,
                seed: int = 0, workers: int | None = None) -> BenchResult:
    """Time roundtrips against signal length and fit log-log slopes.

    Parameters
    ----------
    variants : iterable of {"nsgt", "slicq"}
    lengths : iterable of int
        Lengths used for the fit.  For ``slicq`` they must be multiples of
        ``2N``.
    iters : int
        Timed iterations per length (one extra warm-up run is discarded).
    slice_config : (N, M)
    prime_length : int or None
        Extra ``nsgt`` length reported as an outlier row and left out of the
        fit; ``0`` picks the largest prime not above the median length,
        ``None`` disables it.
    workers : int, optional
        Passed to :func:`scipy.fft.set_workers`; ``None`` keeps the default
        single-threaded FFTs.
    """
    params = params or CqParams()
    lengths = sorted(int(L) for L in lengths)
    N, M = slice_config
    rng = np.random.default_rng(seed)
    rows, slopes = [], {}
    ctx = sfft.set_workers(workers) if workers else nullcontext()
    with ctx:
        for variant in variants:
            if variant not in VARIANTS:
                raise ValueError(f"unknown variant {variant!r}")
            todo = [(L, False) for L in lengths]
            if variant == "nsgt" and prime_length is not None:
                p = prime_length or previous_prime(lengths[len(lengths) // 2])
                todo.append((p, True))
            for L, outlier in todo:
                f = rng.standard_normal(L)
                if variant == "nsgt":
                    fn = _roundtrip_nsgt(params, L)
                    sl = None
                else:
                    fn = _roundtrip_slicq(params, N, M)
                    sl = 2 * N
                t = _time(fn, f, iters)
                rows.append(BenchRow(variant, L, float(t.mean()), float(t.var()), sl, outlier))
            fit = [r for r in rows if r.variant == variant and not r.outlier]
            if len(fit) >= 2:
                slopes[variant] = fit_slope([r.length for r in fit],
                                            [r.mean_seconds for r in fit])
    return BenchResult(rows, slopes)


# -- approximation -------------------------------------------------------------

def random_complex_signals(n: int, L: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return (rng.standard_normal((n, L)) + 1j * rng.standard_normal((n, L))) / math.sqrt(2)


def harmonic_transient_signals(n: int, L: int, fs: float = 44100.0, seed: int = 0) -> np.ndarray:
    """Real test signals: a few harmonic tones with decaying clicks and light noise."""
    rng = np.random.default_rng(seed)
    t = np.arange(L) / fs
    out = np.empty((n, L))
    for i in range(n):
        x = np.zeros(L)
        for _ in range(3):
            f0 = 55.0 * 2 ** rng.uniform(0, 5)
            for h in range(1, 9):
                if h * f0 < 0.45 * fs:
                    x += rng.uniform(0.2, 1.0) / h * np.sin(
                        2 * np.pi * h * f0 * t + rng.uniform(0, 2 * np.pi))
        for pos in rng.integers(0, L, size=8):
            n_tail = min(L - pos, int(0.02 * fs))
            x[pos:pos + n_tail] += rng.uniform(1, 3) * rng.standard_normal(n_tail) * np.exp(
                -np.arange(n_tail) / (0.002 * fs))
        out[i] = x + 1e-3 * rng.standard_normal(L)
    return out


SIGNAL_SETS = {"random": random_complex_signals, "synthetic": harmonic_transient_signals}


@dataclass(frozen=True)
class ApproxRow:
    min_filter_len: int
    slice_len: int
    transition_len: int
    snr_db: float
    snr_std: float
    snr_all: tuple = field(repr=False, default=())


def approximation_snrs(signals, params: CqParams, N: int, M: int) -> np.ndarray:
    """SNR in dB of sliced against full-length coefficients for each signal."""
    signals = np.atleast_2d(signals)
    L = signals.shape[-1]
    system = slice_system(params, N)
    companion = full_length_companion(system, L)
    h0 = make_slicing_window(N, M)
    out = []
    for f in signals:
        s = slicq_analyze(f, h0, system)
        out.append(approximation_error(analyze(f, companion), s).snr_db)
    return np.array(out)


def run_approximation(signal_set="random", slice_configs=(DEFAULT_SLICE,),
                      min_filter_lens=(4, 8, 16, 32, 64), n_signals: int = 20,
                      L: int = 2 ** 17, params: CqParams | None = None,
                      seed: int = 0) -> list:
    """Mean SNR for every ``(N, M)`` slice configuration and minimal filter length.

    ``signal_set`` is ``"random"``, ``"synthetic"`` or an array of signals of
    equal length (then ``L`` and ``n_signals`` are ignored).
    """
    params = params or CqParams()
    if isinstance(signal_set, str):
        signals = SIGNAL_SETS[signal_set](n_signals, L, seed=seed)
    else:
        signals = np.atleast_2d(np.asarray(signal_set))
    rows = []
    for N, M in slice_configs:
        for mfl in min_filter_lens:
            snr = approximation_snrs(signals, params.replace(min_filter_len=int(mfl)), N, M)
            rows.append(ApproxRow(int(mfl), 2 * N, M, float(snr.mean()), float(snr.std()),
                                  tuple(snr)))
    return rows


def approximation_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(APPROX_FIELDS)
    for r in rows:
        w.writerow([r.min_filter_len, r.slice_len, r.transition_len, f"{r.snr_db:.6f}"])
    return buf.getvalue()
