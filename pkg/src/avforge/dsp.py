"""Float-domain signal processing: resampling, time stretching, EQ, mixing.

All functions take and return float64 arrays shaped (frames, channels); the
int16 boundary lives in :mod:`avforge.audio`.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy import signal as sps


def _as_2d(x: np.ndarray) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"expected (frames, channels), got shape {arr.shape}")
    return arr


def rms_dbfs(x: np.ndarray) -> float:
    """RMS level in dB relative to full scale; digital silence maps to -inf."""
    arr = np.asarray(x, dtype=np.float64)
    mean_sq = float(np.mean(arr * arr)) if arr.size else 0.0
    if mean_sq <= 0.0:
        return float("-inf")
    return 10.0 * np.log10(mean_sq)


def resample_by_factor(x: np.ndarray, factor: float) -> np.ndarray:
    """Resample so output length is about factor * input length.

    The factor is approximated by a rational with denominator <= 1000, which
    keeps the worst-case rate error near a millionth, far below audibility.
    """
    arr = _as_2d(x)
    if factor <= 0:
        raise ValueError(f"factor must be positive, got {factor}")
    frac = Fraction(factor).limit_denominator(1000)
    if frac.numerator == frac.denominator:
        return arr.copy()
    return sps.resample_poly(arr, frac.numerator, frac.denominator, axis=0)


def stretch_to_length(x: np.ndarray, out_frames: int, frame: int = 1024, search: int = 384) -> np.ndarray:
    """Time-stretch to exactly ``out_frames`` frames while preserving pitch.

    Waveform-similarity overlap-add: Hann-windowed frames at a fixed synthesis
    hop, each picked near its nominal analysis position by maximising the
    cross-correlation with the natural continuation of the previous frame.
    """
    arr = _as_2d(x)
    in_frames = arr.shape[0]
    if out_frames <= 0:
        raise ValueError(f"out_frames must be positive, got {out_frames}")
    if in_frames == out_frames:
        return arr.copy()
    # Too short for overlap-add: fall back to sample interpolation.  Pitch is
    # not preserved, but windows this small are below any planning minimum.
    if in_frames < 2 * frame or out_frames < 2 * frame:
        pos = np.linspace(0.0, in_frames - 1, out_frames)
        return np.stack(
            [np.interp(pos, np.arange(in_frames), arr[:, c]) for c in range(arr.shape[1])],
            axis=1,
        )

    hop = frame // 2
    window = np.hanning(frame)
    mono = arr.mean(axis=1)  # alignment search runs on the mono mix
    pad = frame + 2 * search + hop
    padded = np.concatenate([arr, np.zeros((pad, arr.shape[1]))], axis=0)
    padded_mono = np.concatenate([mono, np.zeros(pad)])

    out = np.zeros((out_frames + frame, arr.shape[1]))
    norm = np.zeros(out_frames + frame)
    ratio = in_frames / out_frames

    prev_sel = 0
    n_frames_out = out_frames // hop + 1
    for k in range(n_frames_out):
        out_pos = k * hop
        nominal = int(round(out_pos * ratio))
        nominal = min(max(nominal, 0), in_frames - 1)
        if k == 0:
            sel = nominal
        else:
            template = padded_mono[prev_sel + hop : prev_sel + hop + frame]
            lo = max(nominal - search, 0)
            hi = min(nominal + search, in_frames - 1)
            segment = padded_mono[lo : hi + frame]
            scores = sps.correlate(segment, template, mode="valid")
            sel = lo + int(np.argmax(scores))
        out[out_pos : out_pos + frame] += padded[sel : sel + frame] * window[:, None]
        norm[out_pos : out_pos + frame] += window
        prev_sel = sel

    norm = np.maximum(norm, 1e-8)
    return out[:out_frames] / norm[:out_frames, None]


def shift_pitch(x: np.ndarray, semitones: float, frame: int = 1024) -> np.ndarray:
    """Shift pitch by a semitone count; output frame count equals input exactly."""
    arr = _as_2d(x)
    if semitones == 0:
        return arr.copy()
    ratio = 2.0 ** (semitones / 12.0)
    shrunk = resample_by_factor(arr, 1.0 / ratio)
    return stretch_to_length(shrunk, arr.shape[0], frame=frame)


def _shelf_coefficients(
    kind: str, cutoff_hz: float, gain_db: float, sample_rate: int
) -> tuple[np.ndarray, np.ndarray]:
    # RBJ cookbook shelving filters with shelf slope S = 1.
    amp = 10.0 ** (gain_db / 40.0)
    w0 = 2.0 * np.pi * cutoff_hz / sample_rate
    cw, sw = np.cos(w0), np.sin(w0)
    alpha = sw / 2.0 * np.sqrt(2.0)
    two_rt = 2.0 * np.sqrt(amp) * alpha
    if kind == "high":
        b = np.array(
            [
                amp * ((amp + 1) + (amp - 1) * cw + two_rt),
                -2 * amp * ((amp - 1) + (amp + 1) * cw),
                amp * ((amp + 1) + (amp - 1) * cw - two_rt),
            ]
        )
        a = np.array(
            [
                (amp + 1) - (amp - 1) * cw + two_rt,
                2 * ((amp - 1) - (amp + 1) * cw),
                (amp + 1) - (amp - 1) * cw - two_rt,
            ]
        )
    elif kind == "low":
        b = np.array(
            [
                amp * ((amp + 1) - (amp - 1) * cw + two_rt),
                2 * amp * ((amp - 1) - (amp + 1) * cw),
                amp * ((amp + 1) - (amp - 1) * cw - two_rt),
            ]
        )
        a = np.array(
            [
                (amp + 1) + (amp - 1) * cw + two_rt,
                -2 * ((amp - 1) + (amp + 1) * cw),
                (amp + 1) + (amp - 1) * cw - two_rt,
            ]
        )
    else:
        raise ValueError(f"unknown shelf kind {kind!r}")
    return b / a[0], a / a[0]


def high_shelf(x: np.ndarray, cutoff_hz: float, gain_db: float, sample_rate: int) -> np.ndarray:
    arr = _as_2d(x)
    if gain_db == 0.0:
        return arr.copy()
    b, a = _shelf_coefficients("high", cutoff_hz, gain_db, sample_rate)
    return sps.lfilter(b, a, arr, axis=0)


def low_shelf(x: np.ndarray, cutoff_hz: float, gain_db: float, sample_rate: int) -> np.ndarray:
    arr = _as_2d(x)
    if gain_db == 0.0:
        return arr.copy()
    b, a = _shelf_coefficients("low", cutoff_hz, gain_db, sample_rate)
    return sps.lfilter(b, a, arr, axis=0)


def tremolo(x: np.ndarray, rate_hz: float, depth: float, sample_rate: int) -> np.ndarray:
    """Amplitude modulation; gain swings over [1 - depth, 1] so peaks never grow."""
    arr = _as_2d(x)
    if not 0.0 <= depth <= 1.0:
        raise ValueError(f"depth must lie in [0, 1], got {depth}")
    t = np.arange(arr.shape[0]) / sample_rate
    gain = (1.0 - depth / 2.0) + (depth / 2.0) * np.sin(2.0 * np.pi * rate_hz * t)
    return arr * gain[:, None]


def mix(terms: list[tuple[np.ndarray, float]]) -> tuple[np.ndarray, int]:
    """Weighted sum of equal-shape float signals.

    Returns the int16 result and the count of samples that clipped during
    quantization, so callers can surface headroom problems instead of
    silently folding them away.
    """
    if not terms:
        raise ValueError("nothing to mix")
    shape = _as_2d(terms[0][0]).shape
    acc = np.zeros(shape)
    for sig, gain in terms:
        arr = _as_2d(sig)
        if arr.shape != shape:
            raise ValueError(f"shape mismatch: {arr.shape} vs {shape}")
        acc += gain * arr
    quantized = np.round(acc * 32768.0)
    clip_count = int(np.count_nonzero((quantized < -32768) | (quantized > 32767)))
    out = np.clip(quantized, -32768, 32767).astype(np.int16)
    return out, clip_count
