"""Shared builders for synthetic source media used by pipeline-level tests."""

import json
from pathlib import Path

import numpy as np

from avforge.audio import AudioBuffer, write_wav


def build_source_wav(
    path: Path,
    seed: int,
    duration: float = 30.0,
    sample_rate: int = 48_000,
) -> Path:
    """Write a loud/quiet/loud noise WAV plus a face sidecar over the first third.

    Under the default energy-VAD settings this yields one segment per class:
    speech with a face, then silence, then speech without a face.
    """
    rng = np.random.default_rng(seed)
    frames = int(round(duration * sample_rate))
    third = frames // 3
    samples = rng.standard_normal((frames, 2))
    gains = np.full((frames, 1), 0.08)
    gains[third : 2 * third] = 0.002
    quantized = np.round(samples * gains * 32768.0).clip(-32768, 32767)
    write_wav(path, AudioBuffer(quantized.astype(np.int16), sample_rate))
    sidecar = path.with_suffix(".faces.json")
    sidecar.write_text(json.dumps({"intervals": [[0.0, duration / 3.0]]}))
    return path


def build_source_set(root: Path, count: int, base_seed: int = 100) -> list[Path]:
    """A small corpus with slightly varied lengths, one file per index."""
    root.mkdir(parents=True, exist_ok=True)
    out = []
    for index in range(count):
        duration = 24.0 + 3.0 * index
        out.append(
            build_source_wav(
                root / f"clip{index:02d}.wav", base_seed + index, duration=duration
            )
        )
    return out


def build_choppy_wav(
    path: Path,
    seed: int,
    duration: float = 30.0,
    sample_rate: int = 48_000,
) -> Path:
    """A clip alternating loud/quiet every 3 s; every resulting segment is
    shorter than the 5 s planning floor, so feasibility screening drops it."""
    rng = np.random.default_rng(seed)
    frames = int(round(duration * sample_rate))
    block = int(round(3.0 * sample_rate))
    samples = rng.standard_normal((frames, 2))
    gains = np.full((frames, 1), 0.002)
    face_spans = []
    for start in range(0, frames, 2 * block):
        gains[start : start + block] = 0.08
        if (start // (2 * block)) % 2 == 0:  # alternate speakers on/off screen
            face_spans.append([start / sample_rate, min(start + block, frames) / sample_rate])
    quantized = np.round(samples * gains * 32768.0).clip(-32768, 32767)
    write_wav(path, AudioBuffer(quantized.astype(np.int16), sample_rate))
    path.with_suffix(".faces.json").write_text(json.dumps({"intervals": face_spans}))
    return path


def build_e2e_bundle(root: Path) -> list[Path]:
    """Five fixtures: four plannable clips plus one that screening excludes."""
    root.mkdir(parents=True, exist_ok=True)
    out = []
    for index, duration in enumerate((24.0, 27.0, 30.0, 33.0)):
        out.append(
            build_source_wav(root / f"take{index:02d}.wav", 200 + index, duration=duration)
        )
    out.append(build_choppy_wav(root / "take04_zigzag.wav", 204))
    return out
