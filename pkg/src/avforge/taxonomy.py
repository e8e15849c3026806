"""Core vocabulary: segment classes, inconsistency categories, time intervals.

Every other module builds on the three segment classes, the eight
inconsistency categories and the class-conditional legality map defined
here.  Timestamps are kept as integer milliseconds internally; floats only
appear at (de)serialization boundaries, rounded to millisecond precision.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class SegmentClass(enum.Enum):
    """Semantic class of a media segment."""

    ACTIVE_SPEAKER = "class_1_active_speaker"
    VOICEOVER = "class_2_voiceover"
    SCENIC = "class_3_scenic"

    @classmethod
    def from_name(cls, name: str) -> "SegmentClass":
        for member in cls:
            if member.value == name:
                return member
        raise ValueError(f"unknown segment class: {name!r}")


class InconsistencyCategory(enum.Enum):
    """One of the eight audio-visual conflict types."""

    TEMPORAL_SHIFT = "TEMPORAL_SHIFT"
    LIP_SYNC = "LIP_SYNC"
    VOICE_IDENTITY = "VOICE_IDENTITY"
    VOLUME_FLUCTUATION = "VOLUME_FLUCTUATION"
    SEMANTIC_DIVERGENCE = "SEMANTIC_DIVERGENCE"
    BACKGROUND_CONFLICT = "BACKGROUND_CONFLICT"
    EMOTION_MISMATCH = "EMOTION_MISMATCH"
    BACKGROUND_SOUND = "BACKGROUND_SOUND"

    @classmethod
    def from_name(cls, name: str) -> "InconsistencyCategory":
        try:
            return cls[name]
        except KeyError:
            raise ValueError(f"unknown inconsistency category: {name!r}") from None


# Class-conditional legality: which categories may be injected into which
# segment class.  Disjoint by construction; union covers all 8 categories.
_LEGAL: dict[SegmentClass, frozenset[InconsistencyCategory]] = {
    SegmentClass.ACTIVE_SPEAKER: frozenset(
        {
            InconsistencyCategory.VOICE_IDENTITY,
            InconsistencyCategory.VOLUME_FLUCTUATION,
            InconsistencyCategory.LIP_SYNC,
            InconsistencyCategory.TEMPORAL_SHIFT,
        }
    ),
    SegmentClass.VOICEOVER: frozenset(
        {
            InconsistencyCategory.BACKGROUND_CONFLICT,
            InconsistencyCategory.SEMANTIC_DIVERGENCE,
        }
    ),
    SegmentClass.SCENIC: frozenset(
        {
            InconsistencyCategory.EMOTION_MISMATCH,
            InconsistencyCategory.BACKGROUND_SOUND,
        }
    ),
}


def legal_categories(segment_class: SegmentClass) -> frozenset[InconsistencyCategory]:
    """Return the set of categories that may legally target ``segment_class``."""
    return _LEGAL[segment_class]


# Voice conversion presets understood by the identity-style injectors.
VOICE_TYPES: tuple[str, ...] = (
    "Female",
    "Female_Young",
    "Female_Old",
    "Male",
    "Male_Deep",
    "Child",
    "Elder",
)

# The 20-category ambient sound library available to background injections.
SOUND_CATEGORIES: tuple[str, ...] = (
    "city_traffic",
    "construction",
    "siren",
    "subway",
    "train",
    "car_horn",
    "rain",
    "thunder",
    "wind",
    "birds",
    "ocean_waves",
    "dogs",
    "cats",
    "heavy_machinery",
    "factory",
    "music_happy",
    "music_sad",
    "music_peaceful",
    "music_excited",
    "music_tense",
)

EMOTIONS: tuple[str, ...] = ("happy", "sad", "peaceful", "exciting", "tense")

# Emotion label -> music category used to realize an emotion mismatch.
EMOTION_TO_MUSIC: dict[str, str] = {
    "happy": "music_happy",
    "sad": "music_sad",
    "peaceful": "music_peaceful",
    "exciting": "music_excited",
    "tense": "music_tense",
}

VOLUME_DIRECTIONS: tuple[str, ...] = ("away", "toward")


def ms_from_seconds(seconds: float) -> int:
    return int(round(seconds * 1000.0))


def seconds_from_ms(ms: int) -> float:
    return ms / 1000.0


@dataclass(frozen=True, slots=True)
class TimeInterval:
    """Half-open time interval [start, end), stored as integer milliseconds."""

    start_ms: int
    end_ms: int

    def __post_init__(self) -> None:
        if self.start_ms < 0:
            raise ValueError(f"interval start must be non-negative, got {self.start_ms} ms")
        if self.start_ms >= self.end_ms:
            raise ValueError(
                f"interval start must precede end, got [{self.start_ms}, {self.end_ms}] ms"
            )

    @classmethod
    def from_seconds(cls, start: float, end: float) -> "TimeInterval":
        return cls(ms_from_seconds(start), ms_from_seconds(end))

    @property
    def start(self) -> float:
        return seconds_from_ms(self.start_ms)

    @property
    def end(self) -> float:
        return seconds_from_ms(self.end_ms)

    @property
    def duration_ms(self) -> int:
        return self.end_ms - self.start_ms

    @property
    def duration(self) -> float:
        return seconds_from_ms(self.duration_ms)

    def overlaps(self, other: "TimeInterval") -> bool:
        return self.start_ms < other.end_ms and other.start_ms < self.end_ms

    def contains(self, instant_ms: int) -> bool:
        """Half-open membership test for a single millisecond instant."""
        return self.start_ms <= instant_ms < self.end_ms

    def covers(self, other: "TimeInterval") -> bool:
        return self.start_ms <= other.start_ms and other.end_ms <= self.end_ms

    def to_json(self) -> dict:
        return {"start": self.start, "end": self.end}


@dataclass(frozen=True, slots=True)
class TimelineSegment:
    interval: TimeInterval
    segment_class: SegmentClass
    confidence: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must lie in [0, 1], got {self.confidence}")


@dataclass(frozen=True, slots=True)
class Timeline:
    """Ordered, non-overlapping classed segments over one media item."""

    media_id: str
    duration_ms: int
    segments: tuple[TimelineSegment, ...]

    def __post_init__(self) -> None:
        if self.duration_ms <= 0:
            raise ValueError("timeline duration must be positive")
        prev_end = 0
        last_start = -1
        for seg in self.segments:
            if seg.interval.start_ms < last_start:
                raise ValueError("timeline segments must be sorted by start")
            if seg.interval.start_ms < prev_end:
                raise ValueError(
                    f"timeline segments overlap near {seg.interval.start_ms} ms"
                )
            if seg.interval.end_ms > self.duration_ms:
                raise ValueError("timeline segment exceeds media duration")
            last_start = seg.interval.start_ms
            prev_end = seg.interval.end_ms

    @property
    def duration(self) -> float:
        return seconds_from_ms(self.duration_ms)

    def to_json(self) -> dict:
        return {
            "media_id": self.media_id,
            "duration": self.duration,
            "segments": [
                {
                    "start": seg.interval.start,
                    "end": seg.interval.end,
                    "class_label": seg.segment_class.value,
                    "confidence": seg.confidence,
                }
                for seg in self.segments
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Timeline":
        segments = tuple(
            TimelineSegment(
                interval=TimeInterval.from_seconds(seg["start"], seg["end"]),
                segment_class=SegmentClass.from_name(seg["class_label"]),
                confidence=float(seg.get("confidence", 1.0)),
            )
            for seg in data["segments"]
        )
        return cls(
            media_id=data["media_id"],
            duration_ms=ms_from_seconds(data["duration"]),
            segments=segments,
        )
