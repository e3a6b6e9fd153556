"""Command line interface: ``nsgcq <command> ...``.

Exit codes: 0 on success, 1 on runtime failures, 2 on usage or input errors.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bench
from .design import SHAPES, CqParams, build_cq_system, cq_layout
from .errors import DesignFailure, NonRealResult, NsgError
from .frames import canonical_dual
from .io import (CoefficientContainer, params_from_config, load_config, read_container,
                 read_mask, read_wav, spectrogram_image, write_container, write_pnm,
                 write_wav)
from .processing import apply_mask, derasterize, rasterize, transpose_bins
from .slicq import (dual_slicing_window, make_slicing_window, padded_length, slice_system,
                    slicq_analyze, slicq_synthesize)
from .transform import analyze, synthesize, take_real


class UsageError(NsgError, ValueError):
    pass


# -- library-level pipelines used by the commands ---------------------------------

def default_transition(slice_len: int) -> int:
    """``N/8`` rounded down to an even number (at least 2)."""
    return max(2, (slice_len // 16) // 2 * 2)


def analyze_audio(x, params: CqParams, slice_len: int | None = None,
                  transition: int | None = None) -> CoefficientContainer:
    """Transform every column of ``x`` (shape ``(n_samples, n_audio)``)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if n == 0:
        raise UsageError("no samples to analyze")
    if not slice_len:
        system = build_cq_system(params, n)
        audio = [analyze(x[:, i], system) for i in range(x.shape[1])]
        return CoefficientContainer(params, n, n, 0, 0, system.coef_counts, audio)
    if slice_len % 2:
        raise UsageError(f"slice length must be even, got {slice_len}")
    N = slice_len // 2
    M = transition or default_transition(slice_len)
    h0 = make_slicing_window(N, M)
    system = slice_system(params, N)
    L = padded_length(n, N)
    padded = np.zeros((L, x.shape[1]))
    padded[:n] = x
    audio = [slicq_analyze(padded[:, i], h0, system) for i in range(x.shape[1])]
    return CoefficientContainer(params, L, n, N, M, system.coef_counts, audio)


def synthesize_audio(cont: CoefficientContainer) -> np.ndarray:
    """Invert a container; returns ``(orig_len, n_audio)`` real samples."""
    if cont.sliced:
        system = slice_system(cont.params, cont.N)
    else:
        system = build_cq_system(cont.params, cont.signal_len)
    if not np.array_equal(system.coef_counts, cont.coef_counts):
        raise UsageError("stored coefficient counts do not match the rebuilt filterbank")
    dual = canonical_dual(system)
    out = []
    for item in cont.audio:
        if cont.sliced:
            hd = dual_slicing_window(make_slicing_window(cont.N, cont.M))
            y = slicq_synthesize(item, hd, dual)
        else:
            y = synthesize(item, dual)
        out.append(take_real(y)[:cont.orig_len])
    return np.stack(out, axis=1)


def transpose_audio(x, params: CqParams, shift: int, channel_range=None) -> np.ndarray:
    """Full-length transposition of every column of ``x`` by ``shift`` channels."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    system = build_cq_system(params, x.shape[0])
    dual = canonical_dual(system)
    K = system.meta["K"]
    if channel_range is None:
        channel_range = (max(1, 1 - shift), min(K, K - shift))
    out = []
    for i in range(x.shape[1]):
        r = rasterize(analyze(x[:, i], system), system)
        r = transpose_bins(r, shift, channel_range, real=True)
        out.append(take_real(synthesize(derasterize(r), dual)))
    return np.stack(out, axis=1)


# -- argument handling --------------------------------------------------------------

def _params_for(args, rate: float | None) -> CqParams:
    cfg = load_config(args.config) if getattr(args, "config", None) else {}
    for key in ("bins", "xi_min", "xi_max", "shape", "min_filter_len"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return params_from_config(cfg, rate)


def _slice_args(args, cfg_path):
    cfg = load_config(cfg_path) if cfg_path else {}
    slice_len = args.slice if args.slice is not None else cfg.get("slice_len")
    transition = args.transition if args.transition is not None else cfg.get("transition_len")
    if transition is not None and not slice_len:
        raise UsageError("--transition needs --slice")
    return slice_len, transition


def _add_design_opts(p, bins=True):
    p.add_argument("--config", help="key=value parameter file")
    if bins:
        p.add_argument("--bins", type=int, help="bins per octave (default 48)")
    p.add_argument("--xi-min", dest="xi_min", type=float, help="lowest center frequency in Hz")
    p.add_argument("--xi-max", dest="xi_max", type=float, help="highest center frequency in Hz")
    p.add_argument("--shape", choices=SHAPES)
    p.add_argument("--min-filter-len", dest="min_filter_len", type=int)


def _add_slice_opts(p):
    p.add_argument("--slice", type=int, help="slice length 2N; full-length transform if omitted")
    p.add_argument("--transition", type=int, help="transition length M (default N/8)")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")


def cmd_analyze(args):
    rate, x = read_wav(args.input)
    params = _params_for(args, rate)
    slice_len, transition = _slice_args(args, args.config)
    cont = analyze_audio(x, params, slice_len, transition)
    write_container(args.output, cont)


def cmd_synthesize(args):
    cont = read_container(args.input)
    write_wav(args.output, round(cont.params.xi_s), synthesize_audio(cont), args.float)


def cmd_roundtrip(args):
    rate, x = read_wav(args.input)
    params = _params_for(args, rate)
    slice_len, transition = _slice_args(args, args.config)
    y = synthesize_audio(analyze_audio(x, params, slice_len, transition))
    write_wav(args.output, rate, y, args.float)
    err = np.linalg.norm(y - x) / max(np.linalg.norm(x), np.finfo(float).tiny)
    print(f"relative error {err:.3e}")


def cmd_spectrogram(args):
    if args.input.lower().endswith(".wav"):
        rate, x = read_wav(args.input)
        params = _params_for(args, rate)
        slice_len, transition = _slice_args(args, args.config)
        cont = analyze_audio(x[:, args.channel:args.channel + 1], params, slice_len, transition)
        item = cont.audio[0]
    else:
        cont = read_container(args.input)
        item = cont.audio[args.channel]
    color = args.color or args.output.lower().endswith(".ppm")
    img = spectrogram_image(item, cq_layout(cont.params).K, args.width, args.floor_db, color)
    write_pnm(args.output, img)


def cmd_mask(args):
    cont = read_container(args.input)
    p = cont.params
    if cont.sliced:
        system = slice_system(p, cont.N)
    else:
        system = build_cq_system(p, cont.signal_len)
    mask = read_mask(args.mask, system, "linear" if args.linear else "db")
    cont.audio = [apply_mask(item, mask) for item in cont.audio]
    write_container(args.output, cont)


def cmd_transpose(args):
    rate, x = read_wav(args.input)
    params = _params_for(args, rate)
    rng = tuple(args.range) if args.range else None
    write_wav(args.output, rate, transpose_audio(x, params, args.shift, rng), args.float)


def cmd_bench(args):
    lengths = [2 ** p for p in range(args.min_exp, args.max_exp + 1)]
    res = bench.run_scaling(args.variants.split(","), lengths, args.iters,
                            slice_config=(args.slice // 2, args.transition
                                          or default_transition(args.slice)),
                            prime_length=None if args.no_prime else 0,
                            workers=args.workers)
    _emit(args.output, res.to_csv())
    for variant, slope in res.slopes.items():
        print(f"{variant} slope {slope:.3f}", file=sys.stderr)


def cmd_approx(args):
    configs = [(s // 2, t) for s in args.slice for t in args.transition]
    rows = bench.run_approximation(args.set, configs, args.min_filter_lens,
                                   args.n_signals, args.length, seed=args.seed)
    _emit(args.output, bench.approximation_csv(rows))


def _emit(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nsgcq", description="Invertible constant-Q transforms.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="WAV to NSGC1 coefficients")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    _add_design_opts(p)
    _add_slice_opts(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synthesize", help="NSGC1 coefficients to WAV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--float", action="store_true", help="write 32-bit float samples")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("roundtrip", help="analyze and resynthesize a WAV file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--float", action="store_true")
    _add_design_opts(p)
    _add_slice_opts(p)
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("spectrogram", help="render a PGM/PPM spectrogram")
    p.add_argument("--in", dest="input", required=True, help="WAV or NSGC1 file")
    p.add_argument("--out", dest="output", required=True, help=".pgm or .ppm")
    p.add_argument("--width", type=int)
    p.add_argument("--floor-db", dest="floor_db", type=float, default=-100.0)
    p.add_argument("--color", action="store_true")
    p.add_argument("--channel", type=int, default=0, help="audio channel")
    _add_design_opts(p)
    _add_slice_opts(p)
    p.set_defaults(func=cmd_spectrogram)

    p = sub.add_parser("mask", help="apply a PGM mask to NSGC1 coefficients")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--linear", action="store_true", help="gain equals the mask value")
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("transpose", help="shift a WAV file by constant-Q channels")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--bins", dest="shift", type=int, required=True,
                   help="channels to shift by (bins per octave come from --config)")
    p.add_argument("--range", type=int, nargs=2, metavar=("K_LO", "K_HI"))
    p.add_argument("--float", action="store_true")
    _add_design_opts(p, bins=False)
    p.set_defaults(func=cmd_transpose)

    p = sub.add_parser("bench", help="runtime against signal length (CSV)")
    p.add_argument("--out", dest="output", default="-")
    p.add_argument("--variants", default="nsgt,slicq")
    p.add_argument("--min-exp", type=int, default=14)
    p.add_argument("--max-exp", type=int, default=20)
    p.add_argument("--iters", type=int, default=50)
    p.add_argument("--slice", type=int, default=16384)
    p.add_argument("--transition", type=int)
    p.add_argument("--no-prime", action="store_true")
    p.add_argument("--workers", type=int, help="FFT worker threads")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("approx", help="sliced approximation SNR (CSV)")
    p.add_argument("--out", dest="output", default="-")
    p.add_argument("--set", choices=sorted(bench.SIGNAL_SETS), default="random")
    p.add_argument("--n-signals", type=int, default=20)
    p.add_argument("--length", type=int, default=2 ** 17)
    p.add_argument("--slice", type=_int_list, default=[16384])
    p.add_argument("--transition", type=_int_list, default=[1024])
    p.add_argument("--min-filter-lens", type=_int_list, default=[4, 8, 16, 32, 64])
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_approx)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (DesignFailure, NonRealResult) as exc:
        print(f"nsgcq {args.command}: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"nsgcq {args.command}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report and exit non-zero
        print(f"nsgcq {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
