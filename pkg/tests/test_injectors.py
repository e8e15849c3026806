import hashlib
import random

import numpy as np
import pytest
from scipy import signal as sps

from avforge import planner as pl
from avforge.audio import AudioBuffer, silence, tone, white_noise
from avforge.backends import (
    BabbleTTS,
    BackendError,
    BandpassSeparation,
    NullSeparation,
    SoundLibrary,
)
from avforge.dsp import rms_dbfs, stretch_to_length
from avforge.injectors import (
    FAR_GAIN,
    VOICE_PRESETS,
    InjectionError,
    InjectorBackends,
    TempoOutOfRangeError,
    dispatch,
    inject_background,
    inject_identity,
    inject_semantic,
    inject_spatial,
    inject_temporal_shift,
    spatial_envelope,
)
from avforge.planner import (
    InjectionPlan,
    TemporalShiftParams,
    Understanding,
)
from avforge.taxonomy import (
    InconsistencyCategory,
    SegmentClass,
    TimeInterval,
)

IC = InconsistencyCategory
AS = SegmentClass.ACTIVE_SPEAKER
SR = 48_000


def region_hash(samples, lo, hi):
    return hashlib.sha256(samples[lo:hi].tobytes()).hexdigest()


def assert_outside_untouched(before: AudioBuffer, after: AudioBuffer, window: TimeInterval):
    a = window.start_ms * SR // 1000
    b = window.end_ms * SR // 1000
    assert after.frames == before.frames
    assert region_hash(after.samples, 0, a) == region_hash(before.samples, 0, a)
    assert region_hash(after.samples, b, after.frames) == region_hash(
        before.samples, b, before.frames
    )


@pytest.fixture(scope="module")
def library():
    return SoundLibrary.builtin()


@pytest.fixture(scope="module")
def backends(library):
    return InjectorBackends(
        separation=BandpassSeparation(), tts=BabbleTTS(), library=library
    )


# ------------------------------------------------------------- temporal shift


def test_shift_positive_prepends_silence():
    audio = white_noise(6.0, seed=1)
    window = TimeInterval(1000, 5000)
    result = inject_temporal_shift(audio, window, 1.0)
    out = result.audio.samples
    a = SR  # window start frame
    assert np.all(out[a : a + SR] == 0)
    assert np.array_equal(out[a + SR : a + 4 * SR], audio.samples[a : a + 3 * SR])
    assert_outside_untouched(audio, result.audio, window)
    assert result.delta.category is IC.TEMPORAL_SHIFT
    assert result.applied_params == TemporalShiftParams(1.0)


def test_shift_negative_appends_silence():
    audio = white_noise(6.0, seed=2)
    window = TimeInterval(1000, 5000)
    result = inject_temporal_shift(audio, window, -1.5)
    out = result.audio.samples
    a, b = SR, 5 * SR
    n = int(1.5 * SR)
    assert np.array_equal(out[a : b - n], audio.samples[a + n : b])
    assert np.all(out[b - n : b] == 0)
    assert_outside_untouched(audio, result.audio, window)


def test_shift_range_enforced():
    audio = white_noise(6.0)
    window = TimeInterval(0, 5000)
    for bad in (0.0, 0.4, 3.1, -0.2, -3.5):
        with pytest.raises(InjectionError):
            inject_temporal_shift(audio, window, bad)


def test_shift_must_fit_window():
    audio = white_noise(6.0)
    with pytest.raises(InjectionError):
        inject_temporal_shift(audio, TimeInterval(0, 2500), 2.5)


def test_shift_window_bounds_checked():
    audio = white_noise(3.0)
    with pytest.raises(InjectionError):
        inject_temporal_shift(audio, TimeInterval(1000, 4000), 1.0)


def test_shift_cross_correlation_recovery():
    # An impulse inside the window must move by exactly the configured lag.
    rng = np.random.default_rng(0)
    for shift in (0.5, 1.5, -0.75, 2.25):
        data = (0.05 * rng.standard_normal((6 * SR, 2)) * 32768).astype(np.int16)
        data[2 * SR + SR] = 30_000  # impulse at window-relative t = 1 s
        audio = AudioBuffer(data, SR)
        window = TimeInterval(2000, 6000)
        result = inject_temporal_shift(audio, window, shift)
        a, b = 2 * SR, 6 * SR
        before = audio.to_float()[a:b, 0]
        after = result.audio.to_float()[a:b, 0]
        corr = sps.correlate(after, before, mode="full", method="fft")
        lag = int(np.argmax(corr)) - (len(before) - 1)
        assert abs(lag - round(shift * SR)) <= 1, shift


# ------------------------------------------------------------------- identity


def test_preset_table_values():
    presets = {
        "Female": (6.0, 1.15, 0.3, 1.0, False, False),
        "Female_Young": (8.0, 1.2, 0.5, 1.0, False, False),
        "Female_Old": (5.0, 1.1, 0.1, 1.0, True, False),
        "Male": (-6.0, 0.85, -0.2, 1.0, False, False),
        "Male_Deep": (-9.0, 0.75, -0.4, 1.0, False, True),
        "Child": (10.0, 1.25, 0.6, 1.1, False, False),
        "Elder": (-5.0, 0.9, -0.2, 1.0, True, False),
    }
    assert set(VOICE_PRESETS) == set(presets)
    for name, (pitch, formant, brightness, speed, trem, bass) in presets.items():
        p = VOICE_PRESETS[name]
        assert p.pitch_semitones == pitch
        assert p.formant == formant
        assert p.brightness == brightness
        assert p.speed == speed
        assert p.tremolo is trem
        assert p.bass_boost is bass


def fft_peak_hz(mono, n=2048, offset=None):
    if offset is None:
        offset = max((len(mono) - n) // 2, 0)
    seg = mono[offset : offset + n] * np.hanning(n)
    return np.argmax(np.abs(np.fft.rfft(seg))) * SR / n


def test_identity_female_pitch_factor():
    audio = tone(440.0, 3.0, amplitude=0.5)
    window = TimeInterval(500, 2500)
    result = inject_identity(audio, window, "Female")
    mono = result.audio.to_float()[:, 0]
    mid = int(1.5 * SR)
    peak = fft_peak_hz(mono, offset=mid)
    assert abs(peak - 440.0 * 2 ** 0.5) <= SR / 2048
    assert_outside_untouched(audio, result.audio, window)


def test_identity_male_deep_pitch_factor():
    audio = tone(440.0, 3.0, amplitude=0.5)
    window = TimeInterval(0, 3000)
    result = inject_identity(audio, window, "Male_Deep")
    peak = fft_peak_hz(result.audio.to_float()[:, 0], offset=SR)
    assert abs(peak - 440.0 * 2 ** (-9 / 12)) <= SR / 2048


def test_identity_child_speed_leaves_padded_tail():
    audio = tone(300.0, 3.0, amplitude=0.5)
    window = TimeInterval(0, 3000)
    result = inject_identity(audio, window, "Child")
    assert result.audio.frames == audio.frames
    mono = result.audio.to_float()[:, 0]
    tail = mono[int(2.95 * SR) :]  # deep inside the padded region
    body = mono[SR : 2 * SR]
    assert rms_dbfs(tail) < rms_dbfs(body) - 30


def test_identity_unknown_preset():
    with pytest.raises(InjectionError):
        inject_identity(white_noise(2.0), TimeInterval(0, 1000), "Baritone")


def test_identity_tremolo_modulation():
    audio = tone(440.0, 4.0, amplitude=0.4)
    window = TimeInterval(0, 4000)
    result = inject_identity(audio, window, "Elder")
    mono = result.audio.to_float()[:, 0]
    envelope = np.abs(sps.hilbert(mono[SR : 3 * SR]))
    spectrum = np.abs(np.fft.rfft(envelope - envelope.mean()))
    peak_hz = np.argmax(spectrum) * SR / len(envelope)
    assert abs(peak_hz - 4.5) < 0.5


# -------------------------------------------------------------------- spatial


def test_spatial_envelope_closed_form():
    n = 4800
    away = spatial_envelope(n, "away")
    toward = spatial_envelope(n, "toward")
    for k in range(100):
        i = k * n // 100
        tau = i / n
        if tau < 0.5:
            expected_away = 1.0 - 0.99 * (tau / 0.5)
            expected_toward = 0.01 + 0.99 * (tau / 0.5)
        else:
            expected_away = 0.01
            expected_toward = 1.0
        assert abs(away[i] - expected_away) < 1e-6
        assert abs(toward[i] - expected_toward) < 1e-6
    assert away[0] == 1.0
    assert away[n // 2] == FAR_GAIN
    assert away[-1] == FAR_GAIN


def test_spatial_away_example_points():
    # 10 s window: full gain at start, floor at the midpoint and beyond.
    n = 10 * SR
    env = spatial_envelope(n, "away")
    assert env[0] == 1.0
    assert env[5 * SR] == pytest.approx(0.01)
    assert env[9 * SR] == pytest.approx(0.01)


def test_spatial_toward_second_half_full_volume():
    audio = tone(500.0, 4.0, amplitude=0.5)
    window = TimeInterval(0, 4000)
    result = inject_spatial(audio, window, "toward")
    mono = result.audio.to_float()[:, 0]
    second_half = rms_dbfs(mono[2 * SR :])
    original = rms_dbfs(audio.to_float()[2 * SR :, 0])
    assert abs(second_half - original) < 0.1
    first_tenth = rms_dbfs(mono[: SR // 5])
    assert first_tenth < original - 15


def test_spatial_invalid_direction():
    with pytest.raises(InjectionError):
        inject_spatial(white_noise(2.0), TimeInterval(0, 1000), "sideways")


def test_spatial_locality():
    audio = white_noise(5.0, seed=4)
    window = TimeInterval(1500, 3500)
    result = inject_spatial(audio, window, "away")
    assert_outside_untouched(audio, result.audio, window)


# ------------------------------------------------------------------- semantic


def test_semantic_tempo_one_equals_tts_exactly():
    # 25 words at 2.5 words/s = 10 s of speech into a 10 s window: tempo 1.0,
    # silent background, so the window must equal the synthetic speech exactly.
    text = " ".join(["word"] * 25)
    audio = silence(14.0)
    window = TimeInterval(2000, 12_000)
    result = inject_semantic(audio, window, text, "Male", NullSeparation(), BabbleTTS())
    expected = BabbleTTS().synthesize(text, "Male")
    a = 2 * SR
    assert np.array_equal(result.audio.samples[a : a + expected.frames], expected.samples)
    assert_outside_untouched(audio, result.audio, window)


def test_semantic_tempo_stretch_within_range():
    text = " ".join(["word"] * 20)  # 8 s of speech
    audio = white_noise(12.0, seed=5, amplitude=0.05)
    window = TimeInterval(1000, 11_000)  # 10 s window -> tempo 0.8
    result = inject_semantic(audio, window, text, "Female", BandpassSeparation(), BabbleTTS())
    assert result.audio.frames == audio.frames
    assert_outside_untouched(audio, result.audio, window)
    assert result.delta.category is IC.SEMANTIC_DIVERGENCE


def test_semantic_tempo_out_of_range():
    text = " ".join(["word"] * 12)  # 4.8 s -> tempo 0.48 into 10 s
    audio = white_noise(12.0, seed=6)
    with pytest.raises(TempoOutOfRangeError):
        inject_semantic(
            audio, TimeInterval(0, 10_000), text, "Male", NullSeparation(), BabbleTTS()
        )


def test_semantic_backend_failure_leaves_input_alone():
    class ExplodingTTS:
        def synthesize(self, text, voice):
            raise BackendError("boom")

    audio = white_noise(12.0, seed=7)
    snapshot = audio.samples.copy()
    with pytest.raises(BackendError):
        inject_semantic(
            audio, TimeInterval(0, 10_000), "word " * 25, "Male",
            NullSeparation(), ExplodingTTS(),
        )
    assert np.array_equal(audio.samples, snapshot)


def test_semantic_rejects_empty_text():
    with pytest.raises(InjectionError):
        inject_semantic(
            white_noise(12.0), TimeInterval(0, 10_000), "  ", "Male",
            NullSeparation(), BabbleTTS(),
        )


# ----------------------------------------------------------------- background


def test_background_sound_gain_exact(library):
    audio = silence(12.0)
    window = TimeInterval(1000, 11_000)
    result = inject_background(audio, window, "rain", library, NullSeparation(), seed=3)
    asset = library.pick("rain", seed=3)
    n = 10 * SR
    reps = -(-n // asset.frames)
    bed = np.tile(asset.to_float(), (reps, 1))[:n]
    expected = np.clip(np.round(bed * 0.6 * 32768.0), -32768, 32767).astype(np.int16)
    a = SR
    assert np.array_equal(result.audio.samples[a : a + n], expected)
    assert_outside_untouched(audio, result.audio, window)
    assert result.delta.category is IC.BACKGROUND_SOUND


def test_background_music_gain_exact(library):
    audio = silence(8.0)
    window = TimeInterval(0, 8000)
    result = inject_background(audio, window, "music_happy", library, NullSeparation(), seed=0)
    asset = library.pick("music_happy", seed=0)
    n = 8 * SR
    reps = -(-n // asset.frames)
    bed = np.tile(asset.to_float(), (reps, 1))[:n]
    expected = np.clip(np.round(bed * 0.5 * 32768.0), -32768, 32767).astype(np.int16)
    assert np.array_equal(result.audio.samples[:n], expected)


def test_background_loops_short_asset():
    short = SoundLibrary({"rain": [tone(700, 3.0, amplitude=0.3)]})
    audio = silence(10.0)
    result = inject_background(
        audio, TimeInterval(0, 10_000), "rain", short, NullSeparation(), seed=0
    )
    out = result.audio.samples
    asset_frames = 3 * SR
    # The bed repeats with the asset's period.
    assert np.array_equal(out[:asset_frames], out[asset_frames : 2 * asset_frames])
    assert not np.all(out[: 10 * SR] == 0)


def test_background_emotion_resolution(library):
    audio = silence(8.0)
    result = inject_background(
        audio, TimeInterval(0, 8000), "sad", library, NullSeparation(), seed=1
    )
    assert result.delta.category is IC.EMOTION_MISMATCH
    assert result.applied_params == pl.EmotionMismatchParams("sad")


def test_background_keeps_vocals(library):
    # A mid-band tone survives separation as "vocals" and must stay in the mix.
    audio = tone(1000, 8.0, amplitude=0.3)
    result = inject_background(
        audio, TimeInterval(0, 8000), "rain", library, BandpassSeparation(), seed=0
    )
    mono = result.audio.to_float()[:, 0]
    spectrum = np.abs(np.fft.rfft(mono[SR : SR + 4096] * np.hanning(4096)))
    tone_bin = round(1000 * 4096 / SR)
    assert spectrum[tone_bin] > 0.5 * spectrum.max()


def test_background_unknown_kind(library):
    with pytest.raises(KeyError):
        inject_background(
            silence(8.0), TimeInterval(0, 8000), "dubstep", library, NullSeparation(), 0
        )


def test_background_seed_determinism(library):
    audio = silence(8.0)
    a = inject_background(audio, TimeInterval(0, 8000), "wind", library, NullSeparation(), 5)
    b = inject_background(audio, TimeInterval(0, 8000), "wind", library, NullSeparation(), 5)
    assert a.audio == b.audio


# ------------------------------------------------------------------- dispatch


def make_plan(category, seg_class, start_s, end_s, params):
    return InjectionPlan(
        interval=TimeInterval.from_seconds(start_s, end_s),
        class_label=seg_class,
        injection_type=category,
        params=params,
        understanding=Understanding("v", "a", "p"),
        sub_category="speech",
        reasoning="because",
    )


def test_dispatch_routes_every_category(backends):
    audio = white_noise(48.0, seed=9, amplitude=0.1)
    rng = random.Random(0)
    specs = [
        (IC.TEMPORAL_SHIFT, AS, TemporalShiftParams(1.25)),
        (IC.LIP_SYNC, AS, pl.LipSyncParams(" ".join(["word"] * 20), "Female")),
        (IC.VOICE_IDENTITY, AS, pl.VoiceIdentityParams("Male")),
        (IC.VOLUME_FLUCTUATION, AS, pl.VolumeFluctuationParams("away")),
        (
            IC.SEMANTIC_DIVERGENCE,
            SegmentClass.VOICEOVER,
            pl.SemanticDivergenceParams(" ".join(["word"] * 20), "Child"),
        ),
        (IC.BACKGROUND_CONFLICT, SegmentClass.VOICEOVER, pl.BackgroundConflictParams("rain")),
        (IC.BACKGROUND_SOUND, SegmentClass.SCENIC, pl.BackgroundSoundParams("birds")),
        (IC.EMOTION_MISMATCH, SegmentClass.SCENIC, pl.EmotionMismatchParams("tense")),
    ]
    for i, (category, seg_class, params) in enumerate(specs):
        start = i * 5.0
        plan = make_plan(category, seg_class, start, start + 8.0 - rng.random(), params)
        # Windows here may overlap across iterations; each dispatch is isolated.
        result = dispatch(audio, plan, backends, seed=1)
        assert result.audio.frames == audio.frames, category
        assert result.delta.category is category
        assert result.delta.segment_class is seg_class
        assert result.delta.reasoning == "because"
        assert result.delta.sub_category == "speech"
        assert result.applied_params == params
        changed = result.audio.samples != audio.samples
        assert changed.any(), category
        assert_outside_untouched(audio, result.audio, plan.interval)


def test_dispatch_commutes_for_disjoint_plans(backends):
    audio = white_noise(30.0, seed=11, amplitude=0.1)
    plan_a = make_plan(IC.TEMPORAL_SHIFT, AS, 1.0, 9.0, TemporalShiftParams(2.0))
    plan_b = make_plan(
        IC.BACKGROUND_SOUND, SegmentClass.SCENIC, 12.0, 22.0, pl.BackgroundSoundParams("rain")
    )
    ab = dispatch(dispatch(audio, plan_a, backends, seed=4).audio, plan_b, backends, seed=4)
    ba = dispatch(dispatch(audio, plan_b, backends, seed=4).audio, plan_a, backends, seed=4)
    assert ab.audio == ba.audio
