"""The five audio manipulation injectors and the category dispatcher.

Every injector is a pure transform: it returns a new buffer with the same
frame count where only samples inside the plan window differ from the input.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .audio import AudioBuffer, buffer_from_float, ms_to_frames
from .backends import SeparationBackend, SoundLibrary, TTSBackend
from .dsp import high_shelf, low_shelf, mix, resample_by_factor, stretch_to_length, tremolo
from .manifest import EventAnnotation
from .planner import (
    MAX_SHIFT_SECONDS,
    MIN_SHIFT_SECONDS,
    BackgroundConflictParams,
    BackgroundSoundParams,
    EmotionMismatchParams,
    InjectionParams,
    InjectionPlan,
    LipSyncParams,
    SemanticDivergenceParams,
    TemporalShiftParams,
    VoiceIdentityParams,
    VolumeFluctuationParams,
)
from .taxonomy import (
    InconsistencyCategory,
    SegmentClass,
    TimeInterval,
)

IC = InconsistencyCategory


class InjectionError(ValueError):
    """An injector rejected its inputs or could not complete."""


class TempoOutOfRangeError(InjectionError):
    """Duration-matching would need a tempo factor outside [0.7, 1.3]."""


TEMPO_MIN = 0.7
TEMPO_MAX = 1.3

MUSIC_MIX_GAIN = 0.5
SOUND_MIX_GAIN = 0.6
SPEECH_MIX_GAIN = 1.0
BACKGROUND_UNDER_SPEECH_GAIN = 0.8

# Envelope endpoints for the spatial injector: far-field floor and near-field.
FAR_GAIN = 0.01
NEAR_GAIN = 1.0


@dataclass(frozen=True, slots=True)
class VoicePreset:
    name: str
    pitch_semitones: float
    formant: float
    brightness: float
    speed: float = 1.0
    tremolo: bool = False
    bass_boost: bool = False


VOICE_PRESETS: dict[str, VoicePreset] = {
    p.name: p
    for p in (
        VoicePreset("Female", 6.0, 1.15, 0.3),
        VoicePreset("Female_Young", 8.0, 1.2, 0.5),
        VoicePreset("Female_Old", 5.0, 1.1, 0.1, tremolo=True),
        VoicePreset("Male", -6.0, 0.85, -0.2),
        VoicePreset("Male_Deep", -9.0, 0.75, -0.4, bass_boost=True),
        VoicePreset("Child", 10.0, 1.25, 0.6, speed=1.1),
        VoicePreset("Elder", -5.0, 0.9, -0.2, tremolo=True),
    )
}


@dataclass(frozen=True, slots=True)
class EqConfig:
    """Filter placements for the identity injector; audibility-tuned defaults."""

    formant_shelf_hz: float = 2000.0
    formant_gain_db_per_step: float = 3.0  # dB per 0.25 of formant-ratio offset
    brightness_shelf_hz: float = 6000.0
    brightness_gain_db_per_unit: float = 6.0
    bass_shelf_hz: float = 100.0
    bass_gain_db: float = 6.0
    tremolo_hz: float = 4.5
    tremolo_depth: float = 0.3


@dataclass(frozen=True, slots=True)
class InjectionResult:
    audio: AudioBuffer
    delta: EventAnnotation
    applied_params: InjectionParams
    clipped_samples: int = 0


def _window_frames(audio: AudioBuffer, window: TimeInterval) -> tuple[int, int]:
    a = ms_to_frames(window.start_ms, audio.sample_rate)
    b = ms_to_frames(window.end_ms, audio.sample_rate)
    if not 0 <= a < b <= audio.frames:
        raise InjectionError(
            f"window [{window.start}, {window.end}] s outside buffer of "
            f"{audio.duration:.3f} s"
        )
    return a, b


def _result(
    audio: AudioBuffer,
    window: TimeInterval,
    category: IC,
    seg_class: SegmentClass,
    params: InjectionParams,
    clipped: int = 0,
) -> InjectionResult:
    delta = EventAnnotation(
        interval=window,
        category=category,
        segment_class=seg_class,
        reasoning="",
    )
    return InjectionResult(audio=audio, delta=delta, applied_params=params, clipped_samples=clipped)


# ------------------------------------------------------------- temporal shift


def inject_temporal_shift(
    audio: AudioBuffer, window: TimeInterval, shift_seconds: float
) -> InjectionResult:
    """Slide the window's audio against the picture.

    Positive shifts delay the audio: silence is prepended inside the window
    and the window's tail is cut.  Negative shifts advance it: the head is
    cut and silence appended.  Nothing outside the window changes.
    """
    if not MIN_SHIFT_SECONDS <= abs(shift_seconds) <= MAX_SHIFT_SECONDS:
        raise InjectionError(
            f"shift magnitude {abs(shift_seconds)} outside "
            f"[{MIN_SHIFT_SECONDS}, {MAX_SHIFT_SECONDS}]"
        )
    if abs(shift_seconds) >= window.duration:
        raise InjectionError(
            f"shift {shift_seconds}s does not fit a {window.duration}s window"
        )
    a, b = _window_frames(audio, window)
    n = int(round(abs(shift_seconds) * audio.sample_rate))
    segment = audio.samples[a:b]
    pad = np.zeros((n, audio.channels), dtype=np.int16)
    if shift_seconds > 0:
        shifted = np.concatenate([pad, segment[: len(segment) - n]])
    else:
        shifted = np.concatenate([segment[n:], pad])
    out = audio.samples.copy()
    out[a:b] = shifted
    return _result(
        AudioBuffer(out, audio.sample_rate),
        window,
        IC.TEMPORAL_SHIFT,
        SegmentClass.ACTIVE_SPEAKER,
        TemporalShiftParams(shift_seconds),
    )


# ------------------------------------------------------------------- semantic


def inject_semantic(
    audio: AudioBuffer,
    window: TimeInterval,
    text: str,
    voice_type: str,
    separation: SeparationBackend,
    tts: TTSBackend,
) -> InjectionResult:
    """Replace the window's speech with synthesized contradictory speech.

    The window is split into vocals and background; vocals are discarded and
    the synthesized line, tempo-matched to the window, is mixed over the
    retained background.
    """
    if not text.strip():
        raise InjectionError("text is empty")
    a, b = _window_frames(audio, window)
    piece = AudioBuffer(audio.samples[a:b].copy(), audio.sample_rate)
    _, background = separation.separate(piece)
    speech = tts.synthesize(text, voice_type)
    if speech.sample_rate != audio.sample_rate:
        speech = buffer_from_float(
            resample_by_factor(speech.to_float(), audio.sample_rate / speech.sample_rate),
            audio.sample_rate,
        )
    window_frames = b - a
    tempo = speech.frames / window_frames
    if not TEMPO_MIN <= tempo <= TEMPO_MAX:
        raise TempoOutOfRangeError(
            f"matching {speech.duration:.2f}s speech to a "
            f"{window_frames / audio.sample_rate:.2f}s window needs tempo "
            f"{tempo:.3f}, outside [{TEMPO_MIN}, {TEMPO_MAX}]"
        )
    stretched = stretch_to_length(speech.to_float(), window_frames)
    if stretched.shape[1] != audio.channels:
        stretched = np.tile(stretched.mean(axis=1, keepdims=True), (1, audio.channels))
    mixed, clipped = mix(
        [
            (stretched, SPEECH_MIX_GAIN),
            (background.to_float(), BACKGROUND_UNDER_SPEECH_GAIN),
        ]
    )
    out = audio.samples.copy()
    out[a:b] = mixed
    return _result(
        AudioBuffer(out, audio.sample_rate),
        window,
        IC.SEMANTIC_DIVERGENCE,
        SegmentClass.VOICEOVER,
        SemanticDivergenceParams(text, voice_type),
        clipped,
    )


# ------------------------------------------------------------------- identity


def inject_identity(
    audio: AudioBuffer,
    window: TimeInterval,
    target_voice: str,
    eq: EqConfig = EqConfig(),
) -> InjectionResult:
    """Re-voice the window with a named preset while keeping its length."""
    preset = VOICE_PRESETS.get(target_voice)
    if preset is None:
        raise InjectionError(
            f"unknown voice preset {target_voice!r}; "
            f"choose from {sorted(VOICE_PRESETS)}"
        )
    a, b = _window_frames(audio, window)
    window_frames = b - a
    floats = audio.to_float()[a:b]

    ratio = 2.0 ** (preset.pitch_semitones / 12.0)
    shrunk = resample_by_factor(floats, 1.0 / ratio)
    # Tempo compensation; any preset speed-up shortens the voiced portion and
    # the remainder is zero-padded so the frame count stays exact.
    voiced_frames = int(round(window_frames / preset.speed))
    processed = stretch_to_length(shrunk, voiced_frames)
    if voiced_frames < window_frames:
        processed = np.concatenate(
            [processed, np.zeros((window_frames - voiced_frames, processed.shape[1]))]
        )

    formant_gain = eq.formant_gain_db_per_step * (preset.formant - 1.0) / 0.25
    if formant_gain:
        processed = high_shelf(processed, eq.formant_shelf_hz, formant_gain, audio.sample_rate)
    brightness_gain = eq.brightness_gain_db_per_unit * preset.brightness
    if brightness_gain:
        processed = high_shelf(
            processed, eq.brightness_shelf_hz, brightness_gain, audio.sample_rate
        )
    if preset.tremolo:
        processed = tremolo(processed, eq.tremolo_hz, eq.tremolo_depth, audio.sample_rate)
    if preset.bass_boost:
        processed = low_shelf(processed, eq.bass_shelf_hz, eq.bass_gain_db, audio.sample_rate)

    mixed, clipped = mix([(processed, 1.0)])
    out = audio.samples.copy()
    out[a:b] = mixed
    return _result(
        AudioBuffer(out, audio.sample_rate),
        window,
        IC.VOICE_IDENTITY,
        SegmentClass.ACTIVE_SPEAKER,
        VoiceIdentityParams(target_voice),
        clipped,
    )


# -------------------------------------------------------------------- spatial


def spatial_envelope(n_frames: int, direction: str) -> np.ndarray:
    """Per-frame gain for a distance illusion over a window of n_frames.

    "away": linear NEAR_GAIN->FAR_GAIN over the first half, then hold at the
    floor.  "toward" is the mirror image.  The ramp covers [0, D/2); the hold
    covers [D/2, D].
    """
    if direction not in ("away", "toward"):
        raise InjectionError(f"direction must be 'away' or 'toward', got {direction!r}")
    if n_frames <= 0:
        raise InjectionError("window is empty")
    tau = np.arange(n_frames) / n_frames
    ramp_span = NEAR_GAIN - FAR_GAIN
    if direction == "away":
        gain = np.where(tau < 0.5, NEAR_GAIN - ramp_span * (tau / 0.5), FAR_GAIN)
    else:
        gain = np.where(tau < 0.5, FAR_GAIN + ramp_span * (tau / 0.5), NEAR_GAIN)
    return gain


def inject_spatial(
    audio: AudioBuffer, window: TimeInterval, direction: str
) -> InjectionResult:
    """Fade the window as if the source walked away from (or toward) the mic."""
    a, b = _window_frames(audio, window)
    gain = spatial_envelope(b - a, direction)
    shaped = audio.to_float()[a:b] * gain[:, None]
    mixed, clipped = mix([(shaped, 1.0)])
    out = audio.samples.copy()
    out[a:b] = mixed
    return _result(
        AudioBuffer(out, audio.sample_rate),
        window,
        IC.VOLUME_FLUCTUATION,
        SegmentClass.ACTIVE_SPEAKER,
        VolumeFluctuationParams(direction),
        clipped,
    )


# ----------------------------------------------------------------- background


def inject_background(
    audio: AudioBuffer,
    window: TimeInterval,
    kind: str,
    library: SoundLibrary,
    separation: SeparationBackend,
    seed: int,
) -> InjectionResult:
    """Swap the window's ambience for a library asset, keeping the vocals.

    ``kind`` may be a library category or an emotion name (resolved to its
    music category).  Music mixes at 0.5, other ambience at 0.6, under
    unchanged vocals at 1.0.
    """
    category = library.resolve(kind)  # raises KeyError on unknown kinds
    asset = library.pick(category, seed)
    a, b = _window_frames(audio, window)
    window_frames = b - a
    piece = AudioBuffer(audio.samples[a:b].copy(), audio.sample_rate)
    vocals, _ = separation.separate(piece)

    bed = asset.to_float()
    if asset.sample_rate != audio.sample_rate:
        bed = resample_by_factor(bed, audio.sample_rate / asset.sample_rate)
    if bed.shape[1] != audio.channels:
        bed = np.tile(bed.mean(axis=1, keepdims=True), (1, audio.channels))
    if bed.shape[0] < window_frames:
        reps = -(-window_frames // bed.shape[0])
        bed = np.tile(bed, (reps, 1))
    bed = bed[:window_frames]

    gain = MUSIC_MIX_GAIN if category.startswith("music_") else SOUND_MIX_GAIN
    mixed, clipped = mix([(vocals.to_float(), SPEECH_MIX_GAIN), (bed, gain)])
    out = audio.samples.copy()
    out[a:b] = mixed

    params: InjectionParams
    if kind != category:  # an emotion name was resolved to a music category
        params = EmotionMismatchParams(kind)
        delta_category = IC.EMOTION_MISMATCH
    else:
        params = BackgroundSoundParams(category)
        delta_category = IC.BACKGROUND_SOUND
    seg_class = SegmentClass.SCENIC
    return _result(
        AudioBuffer(out, audio.sample_rate),
        window,
        delta_category,
        seg_class,
        params,
        clipped,
    )


# ------------------------------------------------------------------- dispatch


@dataclass(frozen=True, slots=True)
class InjectorBackends:
    separation: SeparationBackend
    tts: TTSBackend
    library: SoundLibrary
    eq: EqConfig = EqConfig()


def dispatch(
    audio: AudioBuffer,
    plan: InjectionPlan,
    backends: InjectorBackends,
    seed: int = 0,
) -> InjectionResult:
    """Route a plan to its injector and stamp the plan's metadata on the delta."""
    params = plan.params
    window = plan.interval
    if isinstance(params, TemporalShiftParams):
        result = inject_temporal_shift(audio, window, params.shift_seconds)
    elif isinstance(params, LipSyncParams):
        result = inject_semantic(
            audio, window, params.text, params.voice_type, backends.separation, backends.tts
        )
    elif isinstance(params, SemanticDivergenceParams):
        result = inject_semantic(
            audio,
            window,
            params.contradictory_text,
            params.voice_type,
            backends.separation,
            backends.tts,
        )
    elif isinstance(params, VoiceIdentityParams):
        result = inject_identity(audio, window, params.target_voice, backends.eq)
    elif isinstance(params, VolumeFluctuationParams):
        result = inject_spatial(audio, window, params.direction)
    elif isinstance(params, (BackgroundConflictParams, BackgroundSoundParams)):
        result = inject_background(
            audio, window, params.bg_sound_type, backends.library, backends.separation, seed
        )
    elif isinstance(params, EmotionMismatchParams):
        result = inject_background(
            audio, window, params.emotion, backends.library, backends.separation, seed
        )
    else:
        raise InjectionError(f"no injector for params {type(params).__name__}")

    delta = EventAnnotation(
        interval=plan.interval,
        category=plan.injection_type,
        segment_class=plan.class_label,
        reasoning=plan.reasoning,
        sub_category=plan.sub_category,
    )
    return dataclasses.replace(result, delta=delta, applied_params=plan.params)
