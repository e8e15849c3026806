"""PCM audio container, WAV file round-trip and signal synthesis helpers.

Everything downstream works on 16-bit integer PCM so that files written and
re-read compare bit for bit.  Float arrays appear only transiently inside
processing steps.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DEFAULT_SAMPLE_RATE = 48_000
DEFAULT_CHANNELS = 2

# int16 <-> float convention: divide by 32768 so the round trip is exact.
_SCALE = 32768.0


def ms_to_frames(ms: int, sample_rate: int) -> int:
    return int(round(ms * sample_rate / 1000.0))


def frames_to_ms(frames: int, sample_rate: int) -> int:
    return int(round(frames * 1000.0 / sample_rate))


@dataclass(frozen=True, eq=False, slots=True)
class AudioBuffer:
    """Immutable-by-convention int16 PCM block, shape (frames, channels)."""

    samples: np.ndarray
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self) -> None:
        arr = np.asarray(self.samples)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise ValueError(f"samples must be (frames, channels), got shape {arr.shape}")
        if arr.dtype != np.int16:
            raise ValueError(f"samples must be int16, got {arr.dtype}")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", arr)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AudioBuffer):
            return NotImplemented
        return self.sample_rate == other.sample_rate and np.array_equal(
            self.samples, other.samples
        )

    @property
    def frames(self) -> int:
        return self.samples.shape[0]

    @property
    def channels(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.frames / self.sample_rate

    @property
    def duration_ms(self) -> int:
        return frames_to_ms(self.frames, self.sample_rate)

    def to_float(self) -> np.ndarray:
        return self.samples.astype(np.float64) / _SCALE

    def slice_ms(self, start_ms: int, end_ms: int) -> "AudioBuffer":
        a = ms_to_frames(start_ms, self.sample_rate)
        b = ms_to_frames(end_ms, self.sample_rate)
        if not 0 <= a < b <= self.frames:
            raise ValueError(
                f"slice [{start_ms}, {end_ms}] ms outside buffer of {self.duration_ms} ms"
            )
        return AudioBuffer(self.samples[a:b].copy(), self.sample_rate)

    def replace_ms(self, start_ms: int, end_ms: int, segment: "AudioBuffer") -> "AudioBuffer":
        """Return a copy with [start_ms, end_ms) swapped for ``segment``.

        The replacement must match the window frame count exactly; audio
        outside the window is untouched.
        """
        if segment.sample_rate != self.sample_rate:
            raise ValueError("sample rate mismatch")
        if segment.channels != self.channels:
            raise ValueError("channel count mismatch")
        a = ms_to_frames(start_ms, self.sample_rate)
        b = ms_to_frames(end_ms, self.sample_rate)
        if not 0 <= a < b <= self.frames:
            raise ValueError(
                f"window [{start_ms}, {end_ms}] ms outside buffer of {self.duration_ms} ms"
            )
        if segment.frames != b - a:
            raise ValueError(
                f"replacement has {segment.frames} frames, window needs {b - a}"
            )
        out = self.samples.copy()
        out[a:b] = segment.samples
        return AudioBuffer(out, self.sample_rate)


def buffer_from_float(
    floats: np.ndarray, sample_rate: int = DEFAULT_SAMPLE_RATE
) -> AudioBuffer:
    """Quantize float samples in [-1, 1) to int16, clipping out-of-range values."""
    arr = np.asarray(floats, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    quantized = np.round(arr * _SCALE)
    clipped = np.clip(quantized, -32768, 32767).astype(np.int16)
    return AudioBuffer(clipped, sample_rate)


def read_wav(path: str | Path) -> AudioBuffer:
    with wave.open(str(path), "rb") as wav:
        if wav.getsampwidth() != 2:
            raise ValueError(f"{path}: only 16-bit PCM is supported")
        channels = wav.getnchannels()
        rate = wav.getframerate()
        raw = wav.readframes(wav.getnframes())
    arr = np.frombuffer(raw, dtype="<i2").reshape(-1, channels).copy()
    return AudioBuffer(arr, rate)


def write_wav(path: str | Path, buf: AudioBuffer) -> None:
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(buf.channels)
        wav.setsampwidth(2)
        wav.setframerate(buf.sample_rate)
        wav.writeframes(np.ascontiguousarray(buf.samples, dtype="<i2").tobytes())


def silence(
    duration: float,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
    channels: int = DEFAULT_CHANNELS,
) -> AudioBuffer:
    frames = int(round(duration * sample_rate))
    return AudioBuffer(np.zeros((frames, channels), dtype=np.int16), sample_rate)


def tone(
    frequency: float,
    duration: float,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
    channels: int = DEFAULT_CHANNELS,
    amplitude: float = 0.5,
    phase: float = 0.0,
) -> AudioBuffer:
    frames = int(round(duration * sample_rate))
    t = np.arange(frames) / sample_rate
    mono = amplitude * np.sin(2.0 * np.pi * frequency * t + phase)
    return buffer_from_float(np.tile(mono[:, None], (1, channels)), sample_rate)


def white_noise(
    duration: float,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
    channels: int = DEFAULT_CHANNELS,
    amplitude: float = 0.2,
    seed: int = 0,
) -> AudioBuffer:
    frames = int(round(duration * sample_rate))
    rng = np.random.default_rng(seed)
    data = amplitude * rng.uniform(-1.0, 1.0, size=(frames, channels))
    return buffer_from_float(data, sample_rate)
