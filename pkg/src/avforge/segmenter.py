"""Timeline construction: voice activity, face marks, class rules, smoothing."""

from __future__ import annotations

import json
import subprocess
import tempfile
from bisect import bisect_right
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import AudioBuffer
from .dsp import rms_dbfs
from .taxonomy import (
    SegmentClass,
    TimeInterval,
    Timeline,
    TimelineSegment,
    ms_from_seconds,
)

# Frames of pure digital silence have -inf dBFS; the floor estimate is clamped
# here so thresholds stay finite.
_FLOOR_CLAMP_DBFS = -100.0


@dataclass(frozen=True, slots=True)
class Marks:
    """Sorted, disjoint millisecond intervals where some binary property holds."""

    intervals: tuple[TimeInterval, ...] = ()

    def __post_init__(self) -> None:
        for prev, cur in zip(self.intervals, self.intervals[1:]):
            if cur.start_ms < prev.end_ms:
                raise ValueError("marks must be sorted and non-overlapping")

    @classmethod
    def from_pairs(cls, pairs_seconds) -> "Marks":
        """Build from (start, end) second pairs, merging touching or overlapping spans."""
        spans = sorted(
            (ms_from_seconds(s), ms_from_seconds(e)) for s, e in pairs_seconds
        )
        merged: list[list[int]] = []
        for s, e in spans:
            if e <= s:
                continue
            if merged and s <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], e)
            else:
                merged.append([s, e])
        return cls(tuple(TimeInterval(s, e) for s, e in merged))

    def covers(self, instant_ms: int) -> bool:
        idx = bisect_right([iv.start_ms for iv in self.intervals], instant_ms) - 1
        return idx >= 0 and self.intervals[idx].contains(instant_ms)

    def boundaries(self) -> list[int]:
        out: list[int] = []
        for iv in self.intervals:
            out.append(iv.start_ms)
            out.append(iv.end_ms)
        return out

    def to_pairs(self) -> list[list[float]]:
        return [[iv.start, iv.end] for iv in self.intervals]


class SpeechMarks(Marks):
    pass


class FaceMarks(Marks):
    pass


@dataclass(frozen=True, slots=True)
class SmoothingConfig:
    min_fragment: float = 0.5  # seconds; shorter segments get absorbed
    rounding_ms: int = 1

    def __post_init__(self) -> None:
        if self.min_fragment <= 0:
            raise ValueError("min_fragment must be positive")
        if self.rounding_ms < 1:
            raise ValueError("rounding_ms must be at least 1")


def energy_vad(
    audio: AudioBuffer,
    frame: float = 0.03,
    threshold_db: float = 12.0,
    hangover: int = 5,
) -> SpeechMarks:
    """Frame-energy voice activity detection.

    A frame counts as speech when its RMS level exceeds the buffer's noise
    floor (5th-percentile frame level, clamped at -100 dBFS) by threshold_db.
    Runs of at most ``hangover`` quiet frames between speech frames are
    bridged so natural pauses do not split an utterance.
    """
    if frame <= 0:
        raise ValueError("frame must be positive")
    if audio.frames == 0:
        raise ValueError("audio is empty")
    frame_len = max(int(round(frame * audio.sample_rate)), 1)
    mono = audio.to_float().mean(axis=1)
    n_frames = (len(mono) + frame_len - 1) // frame_len
    levels = np.array(
        [rms_dbfs(mono[i * frame_len : (i + 1) * frame_len]) for i in range(n_frames)]
    )
    # Clamp before the percentile: -inf frames would poison the interpolation.
    floor = float(np.percentile(np.maximum(levels, _FLOOR_CLAMP_DBFS), 5))
    active = levels > floor + threshold_db

    if hangover > 0 and active.any():
        active = active.copy()
        speech_idx = np.flatnonzero(active)
        for a, b in zip(speech_idx, speech_idx[1:]):
            if 0 < b - a - 1 <= hangover:
                active[a:b] = True

    duration_ms = ms_from_seconds(audio.duration)
    intervals: list[TimeInterval] = []
    i = 0
    while i < n_frames:
        if not active[i]:
            i += 1
            continue
        j = i
        while j < n_frames and active[j]:
            j += 1
        start = ms_from_seconds(i * frame)
        end = min(ms_from_seconds(j * frame), duration_ms)
        if end > start:
            intervals.append(TimeInterval(start, end))
        i = j
    return SpeechMarks(tuple(intervals))


def assign_classes(
    speech: SpeechMarks, faces: FaceMarks, duration: float
) -> Timeline:
    """Label every instant by the two binary attributes speech and face.

    Speech with a visible face is an active speaker; speech without one is a
    voiceover; anything without speech is scenic regardless of faces.
    """
    duration_ms = ms_from_seconds(duration)
    if duration_ms <= 0:
        raise ValueError("duration must be positive")
    for marks in (speech, faces):
        for iv in marks.intervals:
            if iv.end_ms > duration_ms:
                raise ValueError(f"mark [{iv.start}, {iv.end}] exceeds duration {duration}")

    cuts = sorted({0, duration_ms, *speech.boundaries(), *faces.boundaries()})
    segments: list[TimelineSegment] = []
    for a, b in zip(cuts, cuts[1:]):
        # Attributes are constant on [a, b): every mark endpoint is a cut.
        has_speech = speech.covers(a)
        if not has_speech:
            label = SegmentClass.SCENIC
        elif faces.covers(a):
            label = SegmentClass.ACTIVE_SPEAKER
        else:
            label = SegmentClass.VOICEOVER
        if segments and segments[-1].segment_class is label:
            last = segments[-1]
            segments[-1] = TimelineSegment(
                TimeInterval(last.interval.start_ms, b), label, last.confidence
            )
        else:
            segments.append(TimelineSegment(TimeInterval(a, b), label))
    return Timeline("", duration_ms, tuple(segments))


def _merge_adjacent(segments: list[TimelineSegment]) -> list[TimelineSegment]:
    out: list[TimelineSegment] = []
    for seg in segments:
        if out and out[-1].segment_class is seg.segment_class:
            prev = out[-1]
            total = prev.interval.duration_ms + seg.interval.duration_ms
            conf = (
                prev.confidence * prev.interval.duration_ms
                + seg.confidence * seg.interval.duration_ms
            ) / total
            out[-1] = TimelineSegment(
                TimeInterval(prev.interval.start_ms, seg.interval.end_ms),
                seg.segment_class,
                conf,
            )
        else:
            out.append(seg)
    return out


def fuse_and_smooth(timeline: Timeline, cfg: SmoothingConfig = SmoothingConfig()) -> Timeline:
    """Merge same-class neighbors and absorb sub-threshold fragments.

    Every segment shorter than min_fragment is folded into its longer
    neighbor (earlier neighbor on ties) until none remain or only a single
    segment is left.  Total span is preserved and the pass is idempotent.
    """
    if not timeline.segments:
        return timeline

    # Snap boundaries to the rounding grid, keeping both endpoints pinned.
    r = cfg.rounding_ms
    cuts = [timeline.segments[0].interval.start_ms]
    labels: list[SegmentClass] = []
    confs: list[float] = []
    for seg in timeline.segments:
        end = seg.interval.end_ms
        snapped = int(round(end / r)) * r if end != timeline.duration_ms else end
        snapped = max(snapped, cuts[-1])
        if snapped == cuts[-1]:
            continue  # segment collapsed by rounding
        cuts.append(min(snapped, timeline.duration_ms))
        labels.append(seg.segment_class)
        confs.append(seg.confidence)
    if len(cuts) < 2:
        return timeline
    cuts[-1] = timeline.segments[-1].interval.end_ms
    segments = _merge_adjacent(
        [
            TimelineSegment(TimeInterval(a, b), lab, c)
            for a, b, lab, c in zip(cuts, cuts[1:], labels, confs)
        ]
    )

    min_ms = ms_from_seconds(cfg.min_fragment)
    while len(segments) > 1:
        candidates = [
            i for i, seg in enumerate(segments) if seg.interval.duration_ms < min_ms
        ]
        if not candidates:
            break
        i = min(candidates, key=lambda k: (segments[k].interval.duration_ms, k))
        frag = segments[i]
        left = segments[i - 1] if i > 0 else None
        right = segments[i + 1] if i + 1 < len(segments) else None
        if left is not None and (
            right is None or left.interval.duration_ms >= right.interval.duration_ms
        ):
            host, host_idx = left, i - 1
            merged = TimelineSegment(
                TimeInterval(host.interval.start_ms, frag.interval.end_ms),
                host.segment_class,
                host.confidence,
            )
        else:
            host, host_idx = right, i + 1
            merged = TimelineSegment(
                TimeInterval(frag.interval.start_ms, host.interval.end_ms),
                host.segment_class,
                host.confidence,
            )
        lo, hi = min(i, host_idx), max(i, host_idx)
        segments = _merge_adjacent(segments[:lo] + [merged] + segments[hi + 1 :])

    return Timeline(timeline.media_id, timeline.duration_ms, tuple(segments))


class DetectorError(RuntimeError):
    pass


@dataclass(frozen=True, slots=True)
class SubprocessDetector:
    """External mark producer invoked as `<prog> --input <media> --output <json>`."""

    command: tuple[str, ...]
    kind: str = "asd"  # "vad" or "asd"

    def __post_init__(self) -> None:
        if self.kind not in ("vad", "asd"):
            raise ValueError(f"kind must be 'vad' or 'asd', got {self.kind!r}")
        if not self.command:
            raise ValueError("command must not be empty")

    def detect(self, media_path: str | Path) -> Marks:
        with tempfile.TemporaryDirectory(prefix="avforge-det-") as tmp:
            out_path = Path(tmp) / "marks.json"
            argv = [*self.command, "--input", str(media_path), "--output", str(out_path)]
            proc = subprocess.run(argv, capture_output=True, text=True)
            if proc.returncode != 0:
                raise DetectorError(
                    f"detector {self.command[0]} exited {proc.returncode}: "
                    f"{proc.stderr.strip()[:500]}"
                )
            if not out_path.exists():
                raise DetectorError(f"detector {self.command[0]} wrote no output file")
            marks = load_marks_file(out_path)
        cls = SpeechMarks if self.kind == "vad" else FaceMarks
        return cls(marks.intervals)


def load_marks_file(path: str | Path) -> Marks:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict) or "intervals" not in data:
        raise DetectorError(f"{path}: expected an object with an 'intervals' key")
    return Marks.from_pairs(data["intervals"])


def sidecar_face_marks(media_path: str | Path) -> FaceMarks:
    """Face marks from `<media>.faces.json`; absent file means no faces."""
    sidecar = Path(media_path).with_suffix(".faces.json")
    if not sidecar.exists():
        return FaceMarks(())
    return FaceMarks(load_marks_file(sidecar).intervals)


def segment_media(
    audio: AudioBuffer,
    faces: FaceMarks,
    media_id: str = "",
    vad_frame: float = 0.03,
    vad_threshold_db: float = 12.0,
    vad_hangover: int = 5,
    smoothing: SmoothingConfig = SmoothingConfig(),
) -> Timeline:
    """Full segmentation pass: VAD, class assignment, smoothing."""
    speech = energy_vad(audio, vad_frame, vad_threshold_db, vad_hangover)
    timeline = assign_classes(speech, faces, audio.duration)
    smoothed = fuse_and_smooth(timeline, smoothing)
    return Timeline(media_id, smoothed.duration_ms, smoothed.segments)
