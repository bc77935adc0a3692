"""Short-time acoustic features over normalized PCM: loudness proxied by mean
squared amplitude, pitch region proxied by the zero-crossing rate, and
baseline normalization against the opening segment of a recording."""

from __future__ import annotations

import wave
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import EmptySignal, ZeroBaseline

# framing defaults: 50 ms frames, 25 ms hop
FRAME_S = 0.050
HOP_S = 0.025
BASELINE_FRACTION = 0.25


@dataclass(frozen=True)
class AcousticFrame:
    energy: float  # mean squared amplitude, signal normalized to [-1, 1]
    zcr: float     # sign changes per sample pair, in [0, 1]
    t_s: float     # frame center


def _frame_starts(n: int, frame_len: int, hop: int) -> range:
    if n < frame_len:
        return range(0)
    return range(0, n - frame_len + 1, hop)


def _analyze(samples: np.ndarray, frame_len: int, hop: int, rate: float | None) -> list[AcousticFrame]:
    if frame_len <= 0 or hop <= 0:
        raise ValueError("frame_len and hop must be positive")
    x = np.asarray(samples, dtype=np.float64)
    if x.size == 0:
        raise EmptySignal("no samples")
    sr = float(rate) if rate else 1.0
    frames: list[AcousticFrame] = []
    signs = np.where(x >= 0.0, 1.0, -1.0)  # zeros count as positive
    for start in _frame_starts(x.size, frame_len, hop):
        seg = x[start:start + frame_len]
        energy = float(np.mean(seg * seg))
        if frame_len >= 2:
            s = signs[start:start + frame_len]
            crossings = int(np.count_nonzero(s[1:] != s[:-1]))
            zcr = crossings / (frame_len - 1)
        else:
            zcr = 0.0
        t_s = (start + frame_len / 2.0) / sr
        frames.append(AcousticFrame(energy, zcr, t_s))
    return frames


def short_time_energy(samples, frame_len: int, hop: int, rate: float | None = None) -> list[AcousticFrame]:
    """Mean squared amplitude per frame (a unit sine's energy is 0.5)."""
    return _analyze(samples, frame_len, hop, rate)


def zero_crossing_rate(samples, frame_len: int, hop: int, rate: float | None = None) -> list[AcousticFrame]:
    """Sign changes between consecutive samples per frame, divided by
    frame_len - 1. Zeros are treated as positive. A pure tone at frequency f
    sampled at fs gives roughly 2 f / fs."""
    if frame_len < 2:
        raise ValueError("zcr needs frame_len >= 2")
    return _analyze(samples, frame_len, hop, rate)


def baseline_normalize(series: Sequence[float], fraction: float = BASELINE_FRACTION) -> list[float]:
    """Divide a series by the mean of its first ``fraction`` so the opening
    segment averages 1.0; used to compare recordings on change-from-baseline
    rather than absolute level."""
    if not (0.0 < fraction < 1.0):
        raise ValueError("fraction must be in (0, 1)")
    values = [float(v) for v in series]
    if not values:
        raise EmptySignal("empty series")
    n_base = max(1, int(len(values) * fraction))
    base = sum(values[:n_base]) / n_base
    if base <= 0.0:
        raise ZeroBaseline(f"baseline mean {base} is not positive")
    return [v / base for v in values]


def load_wav(path) -> tuple[np.ndarray, int]:
    """Read a mono 16-bit little-endian PCM WAV into floats in [-1, 1)."""
    with wave.open(str(path), "rb") as wav:
        if wav.getnchannels() != 1:
            raise ValueError("expected mono WAV")
        if wav.getsampwidth() != 2:
            raise ValueError("expected 16-bit PCM WAV")
        rate = wav.getframerate()
        raw = wav.readframes(wav.getnframes())
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    if samples.size == 0:
        raise EmptySignal(f"{path} holds no samples")
    return samples, rate


def write_wav(path, samples, rate: int) -> None:
    """Write floats in [-1, 1] as mono 16-bit PCM."""
    x = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 32767.0 / 32768.0)
    pcm = np.round(x * 32768.0).astype("<i2")
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(rate)
        wav.writeframes(pcm.tobytes())


def default_frames(rate: int) -> tuple[int, int]:
    return max(2, int(round(rate * FRAME_S))), max(1, int(round(rate * HOP_S)))
