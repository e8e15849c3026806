"""Dataset manifest: ground-truth annotations, validation and split bookkeeping."""

from __future__ import annotations

import json
import random
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .taxonomy import (
    InconsistencyCategory,
    SegmentClass,
    TimeInterval,
    legal_categories,
    ms_from_seconds,
    seconds_from_ms,
)


@dataclass(frozen=True, slots=True)
class EventAnnotation:
    """One ground-truth inconsistency event inside a media item."""

    interval: TimeInterval
    category: InconsistencyCategory
    segment_class: SegmentClass
    reasoning: str
    sub_category: str = ""

    def to_json(self) -> dict:
        return {
            "start": self.interval.start,
            "end": self.interval.end,
            "injection_type": self.category.value,
            "class_label": self.segment_class.value,
            "reasoning": self.reasoning,
            "dataset_sub_category": self.sub_category,
        }

    @classmethod
    def from_json(cls, data: dict) -> "EventAnnotation":
        return cls(
            interval=TimeInterval.from_seconds(data["start"], data["end"]),
            category=InconsistencyCategory.from_name(data["injection_type"]),
            segment_class=SegmentClass.from_name(data["class_label"]),
            reasoning=data.get("reasoning", ""),
            sub_category=data.get("dataset_sub_category", ""),
        )


@dataclass(frozen=True, slots=True)
class ManifestEntry:
    media_id: str
    duration_ms: int
    is_inconsistent: bool
    events: tuple[EventAnnotation, ...] = ()
    split: str = ""  # "train", "test" or "" when unsplit

    @property
    def duration(self) -> float:
        return seconds_from_ms(self.duration_ms)

    def to_json(self) -> dict:
        return {
            "media_id": self.media_id,
            "duration": self.duration,
            "is_inconsistent": self.is_inconsistent,
            "split": self.split,
            "events": [ev.to_json() for ev in self.events],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ManifestEntry":
        return cls(
            media_id=data["media_id"],
            duration_ms=ms_from_seconds(data["duration"]),
            is_inconsistent=bool(data["is_inconsistent"]),
            events=tuple(EventAnnotation.from_json(ev) for ev in data.get("events", [])),
            split=data.get("split", ""),
        )


@dataclass(frozen=True, slots=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...] = ()

    def to_json(self) -> dict:
        return {"entries": [e.to_json() for e in self.entries]}

    @classmethod
    def from_json(cls, data: dict) -> "DatasetManifest":
        return cls(entries=tuple(ManifestEntry.from_json(e) for e in data["entries"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True, slots=True)
class Violation:
    """One broken manifest rule, reported as data rather than an exception."""

    media_id: str
    field: str
    rule: str
    message: str


def validate_manifest(manifest: DatasetManifest) -> list[Violation]:
    """Check every manifest invariant; an empty list means the manifest is clean."""
    violations: list[Violation] = []
    seen_ids: set[str] = set()
    for entry in manifest.entries:
        if entry.media_id in seen_ids:
            violations.append(
                Violation(entry.media_id, "media_id", "duplicate_id", "media_id appears twice")
            )
        seen_ids.add(entry.media_id)

        if entry.duration_ms <= 0:
            violations.append(
                Violation(entry.media_id, "duration", "positive_duration", "duration must be > 0")
            )
        if entry.split not in ("", "train", "test"):
            violations.append(
                Violation(entry.media_id, "split", "split_name", f"unknown split {entry.split!r}")
            )

        if entry.is_inconsistent and not entry.events:
            violations.append(
                Violation(
                    entry.media_id,
                    "events",
                    "consistency_contradiction",
                    "inconsistent entry carries no events",
                )
            )
        if not entry.is_inconsistent and entry.events:
            violations.append(
                Violation(
                    entry.media_id,
                    "events",
                    "consistency_contradiction",
                    "consistent entry carries events",
                )
            )

        ordered = sorted(entry.events, key=lambda ev: ev.interval.start_ms)
        for prev, cur in zip(ordered, ordered[1:]):
            if prev.interval.overlaps(cur.interval):
                violations.append(
                    Violation(
                        entry.media_id,
                        "events",
                        "overlap",
                        f"events [{prev.interval.start}, {prev.interval.end}] and "
                        f"[{cur.interval.start}, {cur.interval.end}] overlap",
                    )
                )
        for ev in entry.events:
            if ev.interval.end_ms > entry.duration_ms:
                violations.append(
                    Violation(
                        entry.media_id,
                        "events",
                        "event_within_duration",
                        f"event ends at {ev.interval.end} beyond duration {entry.duration}",
                    )
                )
            if ev.category not in legal_categories(ev.segment_class):
                violations.append(
                    Violation(
                        entry.media_id,
                        "events",
                        "illegal_category_for_class",
                        f"{ev.category.value} not legal for {ev.segment_class.value}",
                    )
                )
    return violations


# Stratification buckets for the split: duration in seconds and events per entry.
_DURATION_EDGES = (60_000, 180_000)  # ms boundaries between the 30-60/60-180/180-600 buckets
_EVENT_EDGES = (0, 2, 6)  # upper bounds of the 0 / 1-2 / 3-6 buckets; above -> 7+


def duration_bucket(duration_ms: int) -> int:
    for i, edge in enumerate(_DURATION_EDGES):
        if duration_ms <= edge:
            return i
    return len(_DURATION_EDGES)


def event_bucket(n_events: int) -> int:
    for i, edge in enumerate(_EVENT_EDGES):
        if n_events <= edge:
            return i
    return len(_EVENT_EDGES)


def _stratum(entry: ManifestEntry) -> tuple[int, int]:
    return (duration_bucket(entry.duration_ms), event_bucket(len(entry.events)))


class SplitError(ValueError):
    pass


def split_manifest(
    manifest: DatasetManifest, ratio: float, seed: int
) -> tuple[DatasetManifest, DatasetManifest]:
    """Partition entries into (train, test) stratified by duration and event count.

    ``ratio`` is the test fraction.  The test size is round(ratio * N) overall,
    allocated across strata by largest remainder so per-bucket proportions stay
    within a few points of the global ratio.  Deterministic for a fixed seed.
    """
    if not 0.0 < ratio < 1.0:
        raise SplitError(f"split ratio must lie in (0, 1), got {ratio}")

    strata: dict[tuple[int, int], list[ManifestEntry]] = defaultdict(list)
    for entry in manifest.entries:
        strata[_stratum(entry)].append(entry)
    for key, members in strata.items():
        if len(members) < 2:
            raise SplitError(
                f"stratum duration_bucket={key[0]} event_bucket={key[1]} has "
                f"{len(members)} entries; need at least 2 to split"
            )

    n_total = len(manifest.entries)
    n_test = int(round(ratio * n_total))
    n_test = min(max(n_test, 1), n_total - 1)

    # Largest-remainder allocation of the test budget over strata.
    keys = sorted(strata)
    ideals = {k: ratio * len(strata[k]) for k in keys}
    counts = {k: int(ideals[k]) for k in keys}
    # Keep at least one entry on each side per stratum where possible.
    for k in keys:
        counts[k] = min(counts[k], len(strata[k]) - 1)
    shortfall = n_test - sum(counts.values())
    remainders = sorted(
        keys, key=lambda k: (ideals[k] - counts[k], len(strata[k]), k), reverse=True
    )
    i = 0
    while shortfall > 0 and i < len(remainders) * 2:
        k = remainders[i % len(remainders)]
        if counts[k] < len(strata[k]) - 1:
            counts[k] += 1
            shortfall -= 1
        i += 1

    rng = random.Random(seed)
    train: list[ManifestEntry] = []
    test: list[ManifestEntry] = []
    for k in keys:
        members = list(strata[k])
        rng.shuffle(members)
        take = counts[k]
        test.extend(members[:take])
        train.extend(members[take:])

    def retag(entries: list[ManifestEntry], split: str) -> tuple[ManifestEntry, ...]:
        ordered = sorted(entries, key=lambda e: e.media_id)
        return tuple(
            ManifestEntry(e.media_id, e.duration_ms, e.is_inconsistent, e.events, split)
            for e in ordered
        )

    return DatasetManifest(retag(train, "train")), DatasetManifest(retag(test, "test"))
