"""File formats: WAV audio, key=value configs, the NSGC1 coefficient container,
and PGM/PPM images for spectrograms and masks.

NSGC1 layout (all little-endian)::

    magic     5s   b"NSGC1"
    version   u16
    L         u64  transform length (padded for sliced data)
    orig_len  u64  number of audio samples before padding
    N         u32  slice hop, 0 for full-length coefficients
    M         u32  transition length, 0 for full-length coefficients
    n_audio   u16  audio channels
    layers    u8   1 (full-length) or 2 (sliced)
    n_ch      u32  filterbank channels
    xi_min, xi_max, xi_s   3 x f64
    bins, min_filter_len   2 x u32
    shape     u8   index into SHAPES
    counts    u32[n_ch]  coefficient counts M_k of the (slice) system
    payload   complex128, ordered audio channel, layer, filterbank channel

A filterbank channel holds ``M_k`` values for full-length data and
``(L / 2N) M_k`` values per layer for sliced data.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

from .design import SHAPES, CqParams
from .errors import InvalidParams, NsgError, ShapeMismatch
from .processing import Mask, n_cq_channels
from .slicq import SlicedCoefficients
from .transform import RaggedCoefficients

MAGIC = b"NSGC1"
VERSION = 1
_HEAD = struct.Struct("<5sHQQIIHBI3d2IB")


class FormatError(NsgError, ValueError):
    """Malformed or unsupported input file."""


# -- audio -----------------------------------------------------------------------

def read_wav(path) -> tuple:
    """Read a WAV file as float64 samples in ``[-1, 1)``.

    Returns
    -------
    rate : int
    data : ndarray, shape (n_samples, n_channels)

    Raises
    ------
    FormatError
        On unreadable, empty or unsupported files.
    """
    try:
        rate, data = wavfile.read(path)
    except (ValueError, EOFError) as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    if data.ndim == 1:
        data = data[:, None]
    if data.shape[0] == 0:
        raise FormatError(f"{path} contains no samples")
    if data.dtype == np.uint8:
        x = (data.astype(np.float64) - 128) / 128
    elif data.dtype == np.int16:
        x = data / 32768.0
    elif data.dtype == np.int32:  # 24- and 32-bit PCM, left-justified
        x = data / 2.0 ** 31
    elif data.dtype.kind == "f":
        x = data.astype(np.float64)
    else:
        raise FormatError(f"unsupported sample type {data.dtype}")
    return int(rate), x


def write_wav(path, rate: int, data, float32: bool = False) -> None:
    """Write ``(n_samples, n_channels)`` or 1-d float data as PCM16 or float32."""
    x = np.asarray(data, dtype=np.float64)
    if float32:
        out = x.astype(np.float32)
    else:
        out = np.clip(np.rint(x * 32768.0), -32768, 32767).astype(np.int16)
    if out.ndim == 2 and out.shape[1] == 1:
        out = out[:, 0]
    wavfile.write(path, int(rate), out)


# -- configuration ---------------------------------------------------------------

_INT_KEYS = {"bins", "min_filter_len", "slice_len", "transition_len"}
_FLOAT_KEYS = {"xi_min", "xi_max", "xi_s"}
CONFIG_KEYS = _INT_KEYS | _FLOAT_KEYS | {"shape"}


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep or not key or not value:
            raise InvalidParams(f"config line {lineno}: expected key = value")
        if key not in CONFIG_KEYS:
            raise InvalidParams(f"config line {lineno}: unknown key {key!r}")
        try:
            if key in _INT_KEYS:
                out[key] = int(value)
            elif key in _FLOAT_KEYS:
                out[key] = float(value)
            else:
                out[key] = value
        except ValueError:
            raise InvalidParams(f"config line {lineno}: bad value {value!r} for {key}") from None
    return out


def load_config(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def params_from_config(cfg: dict, rate: float | None = None) -> CqParams:
    """Build :class:`CqParams`; ``rate`` (from a WAV file) fills in ``xi_s``.

    Raises
    ------
    InvalidParams
        If the config's ``xi_s`` disagrees with ``rate``.
    """
    kw = {k: cfg[k] for k in ("xi_min", "xi_max", "xi_s", "bins", "shape", "min_filter_len")
          if k in cfg}
    if rate is not None:
        if "xi_s" in kw and kw["xi_s"] != rate:
            raise InvalidParams(f"config xi_s={kw['xi_s']} but the audio rate is {rate}")
        kw["xi_s"] = float(rate)
    return CqParams(**kw)


# -- coefficient container -------------------------------------------------------

@dataclass(eq=False)
class CoefficientContainer:
    """Coefficients of one or more audio channels plus what is needed to invert them.

    ``audio`` holds one :class:`RaggedCoefficients` (full-length, ``N == 0``)
    or :class:`SlicedCoefficients` per audio channel.
    """

    params: CqParams
    signal_len: int
    orig_len: int
    N: int
    M: int
    coef_counts: np.ndarray
    audio: list

    @property
    def sliced(self) -> bool:
        return self.N > 0

    @property
    def layers(self) -> int:
        return 2 if self.sliced else 1

    def channel_lengths(self) -> np.ndarray:
        counts = np.asarray(self.coef_counts, dtype=np.int64)
        return counts * (self.signal_len // (2 * self.N)) if self.sliced else counts

    def _layer_list(self, item) -> list:
        return list(item.layers) if self.sliced else [item]


def write_container(path, cont: CoefficientContainer) -> None:
    p = cont.params
    counts = np.asarray(cont.coef_counts, dtype=np.int64)
    lengths = cont.channel_lengths()
    head = _HEAD.pack(MAGIC, VERSION, cont.signal_len, cont.orig_len, cont.N, cont.M,
                      len(cont.audio), cont.layers, counts.size,
                      p.xi_min, p.xi_max, p.xi_s, p.bins, p.min_filter_len,
                      SHAPES.index(p.shape))
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(counts.astype("<u4").tobytes())
        for item in cont.audio:
            for layer in cont._layer_list(item):
                if not np.array_equal(layer.lengths, lengths):
                    raise ShapeMismatch("coefficient lengths do not match the header")
                for ch in layer.channels:
                    fh.write(np.ascontiguousarray(ch, dtype="<c16").tobytes())


def read_container(path) -> CoefficientContainer:
    """Read an NSGC1 file.

    Raises
    ------
    FormatError
        On a bad magic, unsupported version or inconsistent sizes.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEAD.size or blob[:5] != MAGIC:
        raise FormatError(f"{path} is not an NSGC1 file")
    (_, version, L, orig_len, N, M, n_audio, layers, n_ch,
     xi_min, xi_max, xi_s, bins, mfl, shape) = _HEAD.unpack_from(blob)
    if version != VERSION:
        raise FormatError(f"unsupported NSGC1 version {version}")
    if layers != (2 if N else 1) or shape >= len(SHAPES):
        raise FormatError("inconsistent NSGC1 header")
    off = _HEAD.size
    counts = np.frombuffer(blob, "<u4", n_ch, off).astype(np.int64)
    off += 4 * n_ch
    lengths = counts * (L // (2 * N)) if N else counts
    expected = off + 16 * n_audio * layers * int(lengths.sum())
    if len(blob) != expected:
        raise FormatError(f"payload size {len(blob) - off} does not match the header")
    params = CqParams(xi_min, xi_max, xi_s, bins, SHAPES[shape], mfl)
    audio = []
    for _ in range(n_audio):
        lays = []
        for _ in range(layers):
            chans = []
            for n in lengths:
                chans.append(np.frombuffer(blob, "<c16", int(n), off).astype(np.complex128))
                off += 16 * int(n)
            lays.append(RaggedCoefficients(chans, int(L)))
        audio.append(SlicedCoefficients(tuple(lays), N, M, counts) if N else lays[0])
    return CoefficientContainer(params, int(L), int(orig_len), int(N), int(M), counts, audio)


# -- images ------------------------------------------------------------------------

def write_pnm(path, image) -> None:
    """Write a uint8 image as binary PGM (2-d) or PPM (``(h, w, 3)``)."""
    img = np.asarray(image)
    if img.dtype != np.uint8:
        raise FormatError("images must be uint8")
    if img.ndim == 2:
        magic = b"P5"
    elif img.ndim == 3 and img.shape[2] == 3:
        magic = b"P6"
    else:
        raise FormatError(f"cannot write an image of shape {img.shape}")
    h, w = img.shape[:2]
    with open(path, "wb") as fh:
        fh.write(magic + f"\n{w} {h}\n255\n".encode())
        fh.write(np.ascontiguousarray(img).tobytes())


def _pnm_tokens(blob: bytes, count: int, pos: int):
    out = []
    while len(out) < count:
        while pos < len(blob) and blob[pos:pos + 1].isspace():
            pos += 1
        if blob[pos:pos + 1] == b"#":
            while pos < len(blob) and blob[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PGM header")
        out.append(blob[start:pos])
    return out, pos


def read_pgm(path) -> np.ndarray:
    """Read a P2 or P5 graymap (8 or 16 bit) as floats in ``[0, 1]``."""
    with open(path, "rb") as fh:
        blob = fh.read()
    magic = blob[:2]
    if magic not in (b"P2", b"P5"):
        raise FormatError(f"{path} is not a PGM file")
    (w, h, maxval), pos = _pnm_tokens(blob, 3, 2)
    w, h, maxval = int(w), int(h), int(maxval)
    if not 0 < maxval < 65536 or w <= 0 or h <= 0:
        raise FormatError("bad PGM dimensions")
    if magic == b"P2":
        vals, _ = _pnm_tokens(blob, w * h, pos)
        data = np.array([int(v) for v in vals], dtype=np.float64)
    else:
        dt = np.dtype("u1") if maxval < 256 else np.dtype(">u2")
        data = np.frombuffer(blob, dt, w * h, pos + 1).astype(np.float64)
    return np.clip(data.reshape(h, w) / maxval, 0.0, 1.0)


def mask_from_image(image, K: int, n_channels: int, scaling: str = "db") -> Mask:
    """Turn an image (rows = channels, high frequency on top; columns = time) into a mask.

    The image has either one row per filterbank channel or ``K + 2`` rows for
    channels ``0..K+1``, in which case the mirrored channels reuse the rows
    of their partners.
    """
    img = np.asarray(image, dtype=np.float64)
    h = img.shape[0]
    rows = img[::-1]  # row index = channel
    if h == n_channels:
        grid = rows.T
    elif h == K + 2:
        mirrored = rows[1:K + 1][::-1]
        grid = np.concatenate([rows, mirrored]).T
    else:
        raise ShapeMismatch(
            f"mask image has {h} rows; expected {n_channels} or {K + 2}")
    return Mask(grid, scaling)


def read_mask(path, system, scaling: str = "db") -> Mask:
    return mask_from_image(read_pgm(path), n_cq_channels(system), len(system), scaling)


def _power_image(powers, width: int) -> np.ndarray:
    # rows = channels 0..K+1 in the given order; nearest-neighbour in time
    out = np.empty((len(powers), width))
    for i, p in enumerate(powers):
        n = p.shape[-1]
        idx = np.minimum(((np.arange(width) + 0.5) * n / width).astype(np.int64), n - 1)
        out[i] = p[idx]
    return out


_STOPS = np.array([[0, 0, 0], [40, 0, 110], [190, 20, 70], [250, 140, 0], [255, 255, 210]],
                  dtype=np.float64)


def colormap(levels: np.ndarray) -> np.ndarray:
    """Map ``[0, 1]`` to RGB along a dark-to-bright ramp."""
    x = np.clip(levels, 0, 1) * (len(_STOPS) - 1)
    i = np.minimum(x.astype(np.int64), len(_STOPS) - 2)
    t = (x - i)[..., None]
    return np.rint(_STOPS[i] * (1 - t) + _STOPS[i + 1] * t).astype(np.uint8)


def spectrogram_image(c, K: int, width: int | None = None, floor_db: float = -100.0,
                      color: bool = False) -> np.ndarray:
    """Log-frequency spectrogram of channels ``0..K+1``, highest frequency on top.

    Power is shown in dB relative to the maximum, clipped to ``[floor_db, 0]``.
    Sliced coefficients are shown as ``|s^0 + s^1|^2``.  The rows line up
    with :func:`mask_from_image`, so a painted copy can be used as a mask.
    """
    ragged = c.combined() if isinstance(c, SlicedCoefficients) else c
    powers = [np.abs(ragged.channels[k]) ** 2 for k in range(K + 2)]
    if width is None:
        width = min(int(max(p.size for p in powers)), 4096)
    P = _power_image(powers, width)[::-1]
    peak = P.max()
    if peak > 0:
        with np.errstate(divide="ignore"):
            db = 10 * np.log10(P / peak)
    else:
        db = np.full(P.shape, floor_db)
    levels = (np.clip(db, floor_db, 0.0) - floor_db) / -floor_db
    if color:
        return colormap(levels)
    return np.rint(levels * 255).astype(np.uint8)
