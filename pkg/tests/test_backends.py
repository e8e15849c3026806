import stat

import numpy as np
import pytest

from avforge.audio import AudioBuffer, read_wav, silence, tone, white_noise, write_wav
from avforge.backends import (
    WORDS_PER_SECOND,
    BabbleTTS,
    BackendError,
    BandpassSeparation,
    NullSeparation,
    SoundLibrary,
    SubprocessSeparation,
    SubprocessTTS,
)
from avforge.dsp import rms_dbfs
from avforge.taxonomy import EMOTIONS, SOUND_CATEGORIES


# ----------------------------------------------------------------- separation


def test_bandpass_separation_shapes_and_sum():
    audio = white_noise(0.5, seed=1)
    vocals, background = BandpassSeparation().separate(audio)
    assert vocals.frames == background.frames == audio.frames
    assert vocals.sample_rate == background.sample_rate == audio.sample_rate
    # The two stems partition the signal up to per-stem quantization.
    total = vocals.samples.astype(np.int32) + background.samples.astype(np.int32)
    assert np.max(np.abs(total - audio.samples.astype(np.int32))) <= 2


def test_bandpass_separation_band_routing():
    low = tone(100, 0.5, amplitude=0.5)
    vocals, background = BandpassSeparation().separate(low)
    assert rms_dbfs(vocals.to_float()) < rms_dbfs(background.to_float()) - 20

    mid = tone(1000, 0.5, amplitude=0.5)
    vocals, background = BandpassSeparation().separate(mid)
    assert rms_dbfs(vocals.to_float()) > rms_dbfs(background.to_float()) + 20


def test_null_separation():
    audio = white_noise(0.2, seed=2)
    vocals, background = NullSeparation().separate(audio)
    assert np.all(vocals.samples == 0)
    assert background == audio


def _script(tmp_path, name, body):
    path = tmp_path / name
    path.write_text(body)
    path.chmod(path.stat().st_mode | stat.S_IEXEC)
    return path


SEP_OK = """#!/usr/bin/env python3
import argparse, shutil, sys
sys.path.insert(0, {src!r})
from avforge.audio import read_wav, write_wav, AudioBuffer
import numpy as np
p = argparse.ArgumentParser()
p.add_argument('--in', dest='inp'); p.add_argument('--out-vocals'); p.add_argument('--out-bg')
a = p.parse_args()
buf = read_wav(a.inp)
write_wav(a.out_vocals, AudioBuffer(np.zeros_like(buf.samples), buf.sample_rate))
write_wav(a.out_bg, buf)
"""


def test_subprocess_separation(tmp_path):
    import avforge

    src = str(next(iter(avforge.__path__)) + "/..")
    script = _script(tmp_path, "sep.py", SEP_OK.format(src=src))
    audio = white_noise(0.2, seed=3)
    vocals, background = SubprocessSeparation(("python3", str(script))).separate(audio)
    assert np.all(vocals.samples == 0)
    assert background == audio


def test_subprocess_separation_errors(tmp_path):
    failing = _script(tmp_path, "fail.py", "#!/usr/bin/env python3\nraise SystemExit(2)\n")
    with pytest.raises(BackendError):
        SubprocessSeparation(("python3", str(failing))).separate(white_noise(0.1))
    lazy = _script(tmp_path, "lazy.py", "#!/usr/bin/env python3\npass\n")
    with pytest.raises(BackendError):
        SubprocessSeparation(("python3", str(lazy))).separate(white_noise(0.1))


# ------------------------------------------------------------------------ tts


def test_babble_duration_tracks_word_count():
    tts = BabbleTTS()
    for n_words in (5, 15, 25, 40):
        text = " ".join(["word"] * n_words)
        buf = tts.synthesize(text, "Male")
        expected = int(round(n_words / WORDS_PER_SECOND * 48_000))
        assert buf.frames == expected
        assert buf.channels == 2
        assert rms_dbfs(buf.to_float()) > -40  # actually audible


def test_babble_deterministic_and_text_sensitive():
    tts = BabbleTTS()
    a = tts.synthesize("hello there general", "Female")
    b = tts.synthesize("hello there general", "Female")
    c = tts.synthesize("hello there admiral", "Female")
    d = tts.synthesize("hello there general", "Male")
    assert a == b
    assert a != c
    assert a != d


def test_babble_accepts_reference_buffer():
    buf = BabbleTTS().synthesize("one two three", silence(0.5))
    assert buf.frames == int(round(3 / WORDS_PER_SECOND * 48_000))


def test_babble_rejects_bad_input():
    with pytest.raises(BackendError):
        BabbleTTS().synthesize("   ", "Male")
    with pytest.raises(BackendError):
        BabbleTTS().synthesize("hello", "Alto")


TTS_OK = """#!/usr/bin/env python3
import argparse, sys
sys.path.insert(0, {src!r})
from avforge.audio import write_wav, tone
p = argparse.ArgumentParser()
p.add_argument('--text'); p.add_argument('--ref'); p.add_argument('--out')
a = p.parse_args()
n_words = len(open(a.text).read().split())
write_wav(a.out, tone(220, n_words / 2.0))
"""


def test_subprocess_tts(tmp_path):
    import avforge

    src = str(next(iter(avforge.__path__)) + "/..")
    script = _script(tmp_path, "tts.py", TTS_OK.format(src=src))
    buf = SubprocessTTS(("python3", str(script))).synthesize("a b c d", "Male")
    assert buf.frames == 2 * 48_000


def test_subprocess_tts_failure(tmp_path):
    failing = _script(tmp_path, "bad.py", "#!/usr/bin/env python3\nraise SystemExit(1)\n")
    with pytest.raises(BackendError):
        SubprocessTTS(("python3", str(failing))).synthesize("hi", "Male")


# -------------------------------------------------------------- sound library


@pytest.fixture(scope="module")
def library():
    return SoundLibrary.builtin()


def test_builtin_covers_all_categories(library):
    assert library.missing_categories() == []
    assert set(library.category_names) == set(SOUND_CATEGORIES)
    for name in SOUND_CATEGORIES:
        asset = library.pick(name, seed=0)
        assert asset.sample_rate == 48_000
        assert asset.channels == 2
        assert asset.frames > 48_000  # at least a second of material
        assert rms_dbfs(asset.to_float()) > -45


def test_emotions_resolve_to_music(library):
    for emotion in EMOTIONS:
        category = SoundLibrary.resolve(emotion)
        assert category.startswith("music_")
        library.pick(emotion, seed=1)
    assert SoundLibrary.resolve("exciting") == "music_excited"


def test_pick_deterministic(library):
    a = library.pick("rain", seed=7)
    b = library.pick("rain", seed=7)
    assert a == b
    picks = {id(library.pick("rain", seed=s)) for s in range(10)}
    assert len(picks) > 1  # both variants get exercised


def test_unknown_kind_rejected(library):
    with pytest.raises(KeyError):
        library.pick("dubstep", seed=0)
    with pytest.raises(KeyError):
        SoundLibrary.resolve("angry")


def test_empty_category_rejected():
    lib = SoundLibrary({"rain": []})
    with pytest.raises(KeyError):
        lib.pick("rain", seed=0)


def test_from_directory_with_backfill(tmp_path):
    custom_dir = tmp_path / "rain"
    custom_dir.mkdir()
    marker = tone(777, 1.0)
    write_wav(custom_dir / "a.wav", marker)
    lib = SoundLibrary.from_directory(tmp_path)
    assert lib.missing_categories() == []
    assert lib.pick("rain", seed=0) == marker
    # Other categories come from the builtin synthesis.
    assert lib.pick("birds", seed=0).frames > 0


def test_from_directory_strict(tmp_path):
    lib = SoundLibrary.from_directory(tmp_path, fill_missing=False)
    assert len(lib.missing_categories()) == len(SOUND_CATEGORIES)
