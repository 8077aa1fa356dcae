"""Waveforms, the scale-invariant SDR metric, pairwise costs, and mixing.

The metric follows the symmetric inner-product form

    si_sdr(u, v) = 10 * log10(<u, v>^2 / (|u|^2 |v|^2 - <u, v>^2))

with no mean subtraction by default (zero_mean opts in to the centered
variant) and a configurable dB clamp at the collinear/orthogonal
singularities so downstream solvers always see finite costs.
"""

from __future__ import annotations

import math
import wave
from dataclasses import dataclass

import numpy as np

from .matrices import CostMatrix

DEFAULT_CLAMP_DB = 60.0

WAV_PCM16_MONO = "wav-pcm16-mono"
RAW_F64LE = "raw-f64le"
_FORMATS = (WAV_PCM16_MONO, RAW_F64LE)

_PCM16_SCALE = 32768.0


@dataclass(frozen=True, eq=False)
class Waveform:
    """Sampled amplitudes with their rate; immutable after construction."""

    samples: np.ndarray
    sample_rate: int = 8000

    def __post_init__(self):
        arr = np.array(self.samples, dtype=float).reshape(-1)
        if arr.size == 0:
            raise ValueError("waveform must be non-empty")
        if not np.isfinite(arr).all():
            raise ValueError("waveform samples must be finite")
        if self.sample_rate < 1:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate}")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))


@dataclass(frozen=True, eq=False)
class MixingMatrix:
    """m x n matrix of non-negative linear amplitude gains.

    Zero entries are allowed (identity mixing is a valid degenerate case);
    every row must carry some gain so no mixture is silent.
    """

    gains: np.ndarray

    def __post_init__(self):
        arr = np.array(self.gains, dtype=float)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"gains must be a non-empty 2-D matrix, got shape {arr.shape}")
        if not np.isfinite(arr).all() or (arr < 0).any():
            raise ValueError("all gains must be finite and non-negative")
        if (arr.sum(axis=1) == 0).any():
            raise ValueError("every mixture row needs at least one positive gain")
        arr.setflags(write=False)
        object.__setattr__(self, "gains", arr)

    @property
    def m(self) -> int:
        return self.gains.shape[0]

    @property
    def n(self) -> int:
        return self.gains.shape[1]


def _samples(w, other=None) -> np.ndarray:
    if isinstance(w, Waveform):
        if isinstance(other, Waveform) and w.sample_rate != other.sample_rate:
            raise ValueError(
                f"sample rate mismatch: {w.sample_rate} vs {other.sample_rate} "
                "(resampling is out of scope)"
            )
        return w.samples
    return np.asarray(w, dtype=float)


def si_sdr(u, v, clamp_db: float = DEFAULT_CLAMP_DB, zero_mean: bool = False) -> float:
    """Scale-invariant SDR in dB, symmetric in its two arguments.

    Clamps to +clamp_db when the residual energy underflows (collinear
    signals) and to -clamp_db when the inner product vanishes (orthogonal
    signals); values in between are clipped to the same range.
    """
    x = _samples(u, v)
    y = _samples(v, u)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if zero_mean:
        x = x - x.mean()
        y = y - y.mean()
    xx = float(x @ x)
    yy = float(y @ y)
    if xx == 0.0 or yy == 0.0:
        raise ValueError("si_sdr is undefined for all-zero signals")
    d = float(x @ y)
    num = d * d
    den = xx * yy - num
    if den <= xx * yy * 1e-12:
        return clamp_db
    if num == 0.0:
        return -clamp_db
    return float(min(max(10.0 * math.log10(num / den), -clamp_db), clamp_db))


def pairwise_cost_matrix(
    sources,
    estimates,
    clamp_db: float = DEFAULT_CLAMP_DB,
    zero_mean: bool = False,
) -> CostMatrix:
    """Cost matrix C[i, j] = -si_sdr(estimate_j, source_i); rows index sources."""
    if len(sources) != len(estimates):
        raise ValueError(f"{len(sources)} sources vs {len(estimates)} estimates")
    if len(sources) == 0:
        raise ValueError("need at least one source")
    n = len(sources)
    c = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            c[i, j] = -si_sdr(estimates[j], sources[i], clamp_db=clamp_db, zero_mean=zero_mean)
    return CostMatrix(c)


def mix(sources, a: MixingMatrix) -> list[Waveform]:
    """Apply the mixing matrix: m output waveforms, samplewise weighted sums."""
    if a.n != len(sources):
        raise ValueError(f"mixing matrix has {a.n} columns but {len(sources)} sources given")
    rate = sources[0].sample_rate
    length = sources[0].samples.size
    for w in sources:
        if w.sample_rate != rate:
            raise ValueError("sources must share one sample rate")
        if w.samples.size != length:
            raise ValueError("sources must share one length")
    stacked = np.stack([w.samples for w in sources])
    return [Waveform(row, rate) for row in a.gains @ stacked]


def random_mixing_gains(
    m: int, n: int, dynamic_range_db: float, seed: int
) -> MixingMatrix:
    """Log-uniform gains: 10**(U/20) with U uniform on +-dynamic_range_db/2.

    Deterministic per seed; dynamic_range_db = 0 yields all-ones gains.
    """
    if m < 1 or n < 1:
        raise ValueError(f"matrix shape must be positive, got {m}x{n}")
    if dynamic_range_db < 0:
        raise ValueError(f"dynamic range must be >= 0, got {dynamic_range_db}")
    rng = np.random.default_rng(seed)
    half = dynamic_range_db / 2.0
    db = rng.uniform(-half, half, size=(m, n))
    return MixingMatrix(10.0 ** (db / 20.0))


def save_waveform(w: Waveform, path, fmt: str = WAV_PCM16_MONO) -> None:
    """Write a waveform as 16-bit mono PCM WAV or raw little-endian float64."""
    if fmt == WAV_PCM16_MONO:
        pcm = np.clip(np.rint(w.samples * _PCM16_SCALE), -32768, 32767).astype("<i2")
        with wave.open(str(path), "wb") as f:
            f.setnchannels(1)
            f.setsampwidth(2)
            f.setframerate(w.sample_rate)
            f.writeframes(pcm.tobytes())
    elif fmt == RAW_F64LE:
        w.samples.astype("<f8").tofile(path)
    else:
        raise ValueError(f"unknown format {fmt!r}, expected one of {_FORMATS}")


def load_waveform(path, fmt: str = WAV_PCM16_MONO, sample_rate: int = 8000) -> Waveform:
    """Read a waveform; sample_rate applies to the raw format only.

    PCM16 maps to [-1, 1) by division by 32768. Rejects WAV files that are
    not mono 16-bit PCM.
    """
    if fmt == WAV_PCM16_MONO:
        try:
            with wave.open(str(path), "rb") as f:
                if f.getnchannels() != 1:
                    raise ValueError(
                        f"{path}: unsupported channel count {f.getnchannels()}, expected mono"
                    )
                if f.getsampwidth() != 2:
                    raise ValueError(
                        f"{path}: unsupported sample width {f.getsampwidth()} bytes, expected 2"
                    )
                frames = f.readframes(f.getnframes())
                rate = f.getframerate()
        except wave.Error as exc:
            raise ValueError(f"{path}: malformed WAV header: {exc}") from None
        samples = np.frombuffer(frames, dtype="<i2").astype(float) / _PCM16_SCALE
        return Waveform(samples, rate)
    if fmt == RAW_F64LE:
        return Waveform(np.fromfile(path, dtype="<f8"), sample_rate)
    raise ValueError(f"unknown format {fmt!r}, expected one of {_FORMATS}")
