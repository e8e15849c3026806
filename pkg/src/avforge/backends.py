"""Pluggable audio backends: source separation, speech synthesis, sound assets.

Every backend has a deterministic in-process fallback so the full pipeline
runs hermetically; production-grade models attach through the subprocess
contracts documented on the wrapper classes.
"""

from __future__ import annotations

import hashlib
import math
import random
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np
from scipy import signal as sps

from .audio import (
    DEFAULT_CHANNELS,
    DEFAULT_SAMPLE_RATE,
    AudioBuffer,
    buffer_from_float,
    read_wav,
    write_wav,
)
from .taxonomy import EMOTION_TO_MUSIC, EMOTIONS, SOUND_CATEGORIES, VOICE_TYPES


class BackendError(RuntimeError):
    """An external or fallback backend failed to produce usable output."""


class SeparationBackend(Protocol):
    def separate(self, audio: AudioBuffer) -> tuple[AudioBuffer, AudioBuffer]:
        """Split into (vocals, background); both match the input length/rate."""
        ...


class TTSBackend(Protocol):
    def synthesize(self, text: str, voice: str | AudioBuffer) -> AudioBuffer:
        """Speak ``text``; ``voice`` is a preset name or a reference buffer."""
        ...


# ------------------------------------------------------------------ separation


@dataclass(frozen=True, slots=True)
class BandpassSeparation:
    """Telephone-band heuristic: vocals = 300-3400 Hz band, background = rest."""

    low_hz: float = 300.0
    high_hz: float = 3400.0
    order: int = 4

    def separate(self, audio: AudioBuffer) -> tuple[AudioBuffer, AudioBuffer]:
        floats = audio.to_float()
        nyquist = audio.sample_rate / 2.0
        sos = sps.butter(
            self.order,
            [self.low_hz / nyquist, self.high_hz / nyquist],
            btype="band",
            output="sos",
        )
        vocals = sps.sosfiltfilt(sos, floats, axis=0)
        background = floats - vocals
        return (
            buffer_from_float(vocals, audio.sample_rate),
            buffer_from_float(background, audio.sample_rate),
        )


@dataclass(frozen=True, slots=True)
class NullSeparation:
    """Treats everything as background; useful for vocal-free material."""

    def separate(self, audio: AudioBuffer) -> tuple[AudioBuffer, AudioBuffer]:
        zeros = AudioBuffer(
            np.zeros_like(audio.samples), audio.sample_rate
        )
        return zeros, AudioBuffer(audio.samples.copy(), audio.sample_rate)


@dataclass(frozen=True, slots=True)
class SubprocessSeparation:
    """External separator: `<prog> --in <wav> --out-vocals <wav> --out-bg <wav>`."""

    command: tuple[str, ...]

    def separate(self, audio: AudioBuffer) -> tuple[AudioBuffer, AudioBuffer]:
        with tempfile.TemporaryDirectory(prefix="avforge-sep-") as tmp:
            tmp_path = Path(tmp)
            in_path = tmp_path / "in.wav"
            vocals_path = tmp_path / "vocals.wav"
            bg_path = tmp_path / "bg.wav"
            write_wav(in_path, audio)
            argv = [
                *self.command,
                "--in", str(in_path),
                "--out-vocals", str(vocals_path),
                "--out-bg", str(bg_path),
            ]
            proc = subprocess.run(argv, capture_output=True, text=True)
            if proc.returncode != 0:
                raise BackendError(
                    f"separator exited {proc.returncode}: {proc.stderr.strip()[:500]}"
                )
            if not (vocals_path.exists() and bg_path.exists()):
                raise BackendError("separator did not write both output files")
            vocals = read_wav(vocals_path)
            background = read_wav(bg_path)
        for name, out in (("vocals", vocals), ("background", background)):
            if out.frames != audio.frames or out.sample_rate != audio.sample_rate:
                raise BackendError(
                    f"separator {name} output shape mismatch: "
                    f"{out.frames}@{out.sample_rate} vs {audio.frames}@{audio.sample_rate}"
                )
        return vocals, background


# ------------------------------------------------------------------------ tts

# Rough speaking rate used to size synthetic speech.
WORDS_PER_SECOND = 2.5

# Preset name -> fundamental frequency of the babble voice.
_BASE_F0 = 165.0
_VOICE_F0 = {
    "Female": _BASE_F0 * 2 ** (6 / 12),
    "Female_Young": _BASE_F0 * 2 ** (8 / 12),
    "Female_Old": _BASE_F0 * 2 ** (5 / 12),
    "Male": _BASE_F0 * 2 ** (-6 / 12),
    "Male_Deep": _BASE_F0 * 2 ** (-9 / 12),
    "Child": _BASE_F0 * 2 ** (10 / 12),
    "Elder": _BASE_F0 * 2 ** (-5 / 12),
}


@dataclass(frozen=True, slots=True)
class BabbleTTS:
    """Deterministic speech-like filler keyed by (text, voice).

    Produces vowel-ish syllables with per-word amplitude envelopes at
    WORDS_PER_SECOND, which keeps downstream tempo matching near 1.0 when
    text lengths follow the planner's word tiers.
    """

    sample_rate: int = DEFAULT_SAMPLE_RATE
    channels: int = DEFAULT_CHANNELS
    amplitude: float = 0.3

    def synthesize(self, text: str, voice: str | AudioBuffer) -> AudioBuffer:
        words = text.split()
        if not words:
            raise BackendError("cannot synthesize empty text")
        if isinstance(voice, AudioBuffer):
            f0 = _BASE_F0
            voice_key = "ref"
        else:
            if voice not in VOICE_TYPES:
                raise BackendError(f"unknown voice preset {voice!r}")
            f0 = _VOICE_F0[voice]
            voice_key = voice

        digest = hashlib.sha256(f"{voice_key}|{text}".encode()).digest()
        rng = random.Random(int.from_bytes(digest[:8], "big"))
        total_frames = int(round(len(words) / WORDS_PER_SECOND * self.sample_rate))
        out = np.zeros(total_frames)
        word_frames = total_frames / len(words)
        for w, word in enumerate(words):
            start = int(round(w * word_frames))
            end = int(round((w + 1) * word_frames))
            # Leave a short inter-word gap inside the slot.
            voiced = max(int((end - start) * 0.8), 1)
            n_syllables = max(1, math.ceil(len(word) / 3))
            syl_frames = voiced // n_syllables
            if syl_frames < 8:
                continue
            for s in range(n_syllables):
                a = start + s * syl_frames
                t = np.arange(syl_frames) / self.sample_rate
                jitter = 1.0 + rng.uniform(-0.05, 0.05)
                formant1 = rng.uniform(300.0, 800.0)
                formant2 = rng.uniform(900.0, 2200.0)
                tone = (
                    0.6 * np.sin(2 * np.pi * f0 * jitter * t)
                    + 0.25 * np.sin(2 * np.pi * formant1 * t)
                    + 0.15 * np.sin(2 * np.pi * formant2 * t)
                )
                envelope = np.sin(np.pi * np.arange(syl_frames) / syl_frames) ** 2
                out[a : a + syl_frames] += self.amplitude * tone * envelope
        stereo = np.tile(out[:, None], (1, self.channels))
        return buffer_from_float(stereo, self.sample_rate)


@dataclass(frozen=True, slots=True)
class SubprocessTTS:
    """External synthesizer: `<prog> --text <file> --ref <wav> --out <wav>`."""

    command: tuple[str, ...]
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def synthesize(self, text: str, voice: str | AudioBuffer) -> AudioBuffer:
        with tempfile.TemporaryDirectory(prefix="avforge-tts-") as tmp:
            tmp_path = Path(tmp)
            text_path = tmp_path / "text.txt"
            ref_path = tmp_path / "ref.wav"
            out_path = tmp_path / "out.wav"
            text_path.write_text(text, encoding="utf-8")
            if isinstance(voice, AudioBuffer):
                write_wav(ref_path, voice)
            else:
                # No reference audio for a named preset; ship a marker clip the
                # plugin may ignore in favor of the preset name.
                write_wav(ref_path, BabbleTTS(self.sample_rate).synthesize("reference", voice))
            argv = [
                *self.command,
                "--text", str(text_path),
                "--ref", str(ref_path),
                "--out", str(out_path),
            ]
            proc = subprocess.run(argv, capture_output=True, text=True)
            if proc.returncode != 0:
                raise BackendError(
                    f"tts exited {proc.returncode}: {proc.stderr.strip()[:500]}"
                )
            if not out_path.exists():
                raise BackendError("tts wrote no output file")
            return read_wav(out_path)


# --------------------------------------------------------------- sound library


def _tone_stack(freqs, amps, duration, sample_rate, envelope=None):
    frames = int(round(duration * sample_rate))
    t = np.arange(frames) / sample_rate
    out = np.zeros(frames)
    for f, a in zip(freqs, amps):
        out += a * np.sin(2 * np.pi * f * t)
    if envelope is not None:
        out *= envelope(t)
    return out


def _filtered_noise(duration, sample_rate, rng, low_hz=None, high_hz=None, amp=0.25):
    frames = int(round(duration * sample_rate))
    noise = rng.standard_normal(frames)
    nyquist = sample_rate / 2.0
    if low_hz and high_hz:
        sos = sps.butter(2, [low_hz / nyquist, high_hz / nyquist], "band", output="sos")
    elif high_hz:
        sos = sps.butter(2, high_hz / nyquist, "low", output="sos")
    elif low_hz:
        sos = sps.butter(2, low_hz / nyquist, "high", output="sos")
    else:
        sos = None
    if sos is not None:
        noise = sps.sosfilt(sos, noise)
    peak = np.max(np.abs(noise)) or 1.0
    return amp * noise / peak


def _arpeggio(root_hz, intervals, duration, sample_rate, note_s=0.25, amp=0.3):
    frames = int(round(duration * sample_rate))
    out = np.zeros(frames)
    note_frames = int(note_s * sample_rate)
    freqs = [root_hz * 2 ** (i / 12) for i in intervals]
    pos = 0
    k = 0
    while pos < frames:
        n = min(note_frames, frames - pos)
        t = np.arange(n) / sample_rate
        env = np.exp(-3.0 * t / note_s)
        f = freqs[k % len(freqs)]
        out[pos : pos + n] += amp * env * (
            np.sin(2 * np.pi * f * t) + 0.3 * np.sin(2 * np.pi * 2 * f * t)
        )
        pos += n
        k += 1
    return out


def _synthesize_category(name: str, variant: int, sample_rate: int) -> np.ndarray:
    digest = hashlib.sha256(f"{name}|{variant}".encode()).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:4], "big"))
    duration = 3.0 + 0.5 * variant
    frames = int(round(duration * sample_rate))
    t = np.arange(frames) / sample_rate

    if name == "city_traffic":
        base = _filtered_noise(duration, sample_rate, rng, high_hz=900, amp=0.3)
        swell = 0.6 + 0.4 * np.sin(2 * np.pi * 0.3 * t)
        return base * swell
    if name == "construction":
        base = _filtered_noise(duration, sample_rate, rng, low_hz=150, high_hz=3000, amp=0.2)
        hits = (np.sin(2 * np.pi * 2.0 * t) > 0.995).astype(float)
        return base + 0.4 * np.convolve(hits, np.exp(-np.arange(2000) / 300), "same")[:frames]
    if name == "siren":
        sweep = 900 + 300 * sps.sawtooth(2 * np.pi * 0.5 * t, width=0.5)
        phase = 2 * np.pi * np.cumsum(sweep) / sample_rate
        return 0.35 * np.sin(phase)
    if name == "subway":
        rumble = _filtered_noise(duration, sample_rate, rng, high_hz=400, amp=0.35)
        screech = 0.05 * np.sin(2 * np.pi * 2800 * t) * (np.sin(2 * np.pi * 0.7 * t) > 0.6)
        return rumble + screech
    if name == "train":
        clack = (np.sin(2 * np.pi * 3.0 * t) > 0.99).astype(float)
        bed = _filtered_noise(duration, sample_rate, rng, high_hz=600, amp=0.25)
        return bed + 0.3 * np.convolve(clack, np.exp(-np.arange(1500) / 200), "same")[:frames]
    if name == "car_horn":
        burst = (np.sin(2 * np.pi * 0.8 * t) > 0.3).astype(float)
        return 0.3 * burst * (np.sin(2 * np.pi * 440 * t) + np.sin(2 * np.pi * 554 * t))
    if name == "rain":
        return _filtered_noise(duration, sample_rate, rng, low_hz=1200, amp=0.25)
    if name == "thunder":
        envelope = np.exp(-t / 1.2)
        return _filtered_noise(duration, sample_rate, rng, high_hz=250, amp=0.5) * envelope
    if name == "wind":
        base = _filtered_noise(duration, sample_rate, rng, high_hz=700, amp=0.3)
        gust = 0.5 + 0.5 * np.sin(2 * np.pi * 0.2 * t + variant)
        return base * gust
    if name == "birds":
        out = np.zeros(frames)
        for _ in range(10):
            start = rng.integers(0, frames - sample_rate // 5)
            n = sample_rate // 8
            tt = np.arange(n) / sample_rate
            f = rng.uniform(2000, 4500)
            chirp = np.sin(2 * np.pi * (f + 800 * np.sin(2 * np.pi * 25 * tt)) * tt)
            out[start : start + n] += 0.2 * chirp * np.sin(np.pi * tt / tt[-1]) ** 2
        return out
    if name == "ocean_waves":
        base = _filtered_noise(duration, sample_rate, rng, high_hz=900, amp=0.35)
        surge = 0.3 + 0.7 * (0.5 + 0.5 * np.sin(2 * np.pi * 0.12 * t)) ** 2
        return base * surge
    if name == "dogs":
        out = np.zeros(frames)
        for _ in range(6):
            start = rng.integers(0, frames - sample_rate // 3)
            n = sample_rate // 6
            tt = np.arange(n) / sample_rate
            f = rng.uniform(250, 500)
            bark = np.sin(2 * np.pi * f * tt) * np.exp(-tt * 18)
            out[start : start + n] += 0.45 * bark
        return out
    if name == "cats":
        out = np.zeros(frames)
        for _ in range(4):
            start = rng.integers(0, frames - sample_rate // 2)
            n = sample_rate // 3
            tt = np.arange(n) / sample_rate
            f = 500 + 300 * np.sin(np.pi * tt / tt[-1])
            out[start : start + n] += 0.25 * np.sin(2 * np.pi * f * tt) * np.sin(
                np.pi * tt / tt[-1]
            )
        return out
    if name == "heavy_machinery":
        cycle = np.sin(2 * np.pi * 30 * t) + 0.4 * np.sin(2 * np.pi * 60 * t)
        grind = _filtered_noise(duration, sample_rate, rng, low_hz=800, high_hz=3500, amp=0.1)
        return 0.25 * cycle + grind
    if name == "factory":
        hum = 0.2 * np.sin(2 * np.pi * 100 * t)
        clatter = _filtered_noise(duration, sample_rate, rng, low_hz=600, amp=0.15)
        pulse = 0.5 + 0.5 * np.square(np.sin(2 * np.pi * 1.5 * t))
        return hum + clatter * pulse
    if name == "music_happy":
        return _arpeggio(392, (0, 4, 7, 12), duration, sample_rate, note_s=0.2)
    if name == "music_sad":
        return _arpeggio(220, (0, 3, 7, 10), duration, sample_rate, note_s=0.5, amp=0.25)
    if name == "music_peaceful":
        pad = _tone_stack(
            (261.6, 329.6, 392.0),
            (0.12, 0.1, 0.08),
            duration,
            sample_rate,
            envelope=lambda tt: 0.7 + 0.3 * np.sin(2 * np.pi * 0.15 * tt),
        )
        return pad
    if name == "music_excited":
        return _arpeggio(330, (0, 4, 7, 12, 16), duration, sample_rate, note_s=0.12)
    if name == "music_tense":
        drone = _tone_stack((110.0, 116.5), (0.2, 0.2), duration, sample_rate)
        pulse = 0.6 + 0.4 * np.sin(2 * np.pi * 5.0 * t)
        return drone * pulse
    raise KeyError(f"no synthesis recipe for category {name!r}")


class SoundLibrary:
    """Named ambience categories, each mapping to one or more audio assets."""

    def __init__(self, categories: dict[str, list[AudioBuffer]]):
        self._categories = {k: list(v) for k, v in categories.items()}

    @property
    def category_names(self) -> list[str]:
        return sorted(self._categories)

    def missing_categories(self) -> list[str]:
        return [c for c in SOUND_CATEGORIES if not self._categories.get(c)]

    @staticmethod
    def resolve(kind: str) -> str:
        """Map an emotion or category name to a concrete library category."""
        if kind in EMOTION_TO_MUSIC:
            return EMOTION_TO_MUSIC[kind]
        if kind in SOUND_CATEGORIES:
            return kind
        raise KeyError(
            f"{kind!r} is neither a sound category nor an emotion "
            f"({', '.join(EMOTIONS)})"
        )

    def pick(self, kind: str, seed: int) -> AudioBuffer:
        category = self.resolve(kind)
        assets = self._categories.get(category, [])
        if not assets:
            raise KeyError(f"sound library category {category!r} is empty")
        rng = random.Random(seed)
        return assets[rng.randrange(len(assets))]

    @classmethod
    def builtin(
        cls,
        sample_rate: int = DEFAULT_SAMPLE_RATE,
        channels: int = DEFAULT_CHANNELS,
        variants: int = 2,
    ) -> "SoundLibrary":
        """Procedurally synthesized assets covering every category."""
        categories: dict[str, list[AudioBuffer]] = {}
        for name in SOUND_CATEGORIES:
            assets = []
            for variant in range(variants):
                mono = _synthesize_category(name, variant, sample_rate)
                mono = np.clip(mono, -0.98, 0.98)
                assets.append(
                    buffer_from_float(np.tile(mono[:, None], (1, channels)), sample_rate)
                )
            categories[name] = assets
        return cls(categories)

    @classmethod
    def from_directory(cls, root: str | Path, fill_missing: bool = True) -> "SoundLibrary":
        """Load `<root>/<category>/*.wav`; optionally backfill absent categories."""
        root = Path(root)
        categories: dict[str, list[AudioBuffer]] = {}
        for sub in sorted(p for p in root.iterdir() if p.is_dir()):
            assets = [read_wav(p) for p in sorted(sub.glob("*.wav"))]
            if assets:
                categories[sub.name] = assets
        if fill_missing:
            base = cls.builtin()
            for name in SOUND_CATEGORIES:
                if not categories.get(name):
                    categories[name] = base._categories[name]
        return cls(categories)
