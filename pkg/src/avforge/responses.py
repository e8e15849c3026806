"""Parsers for model answers to the two evaluation tasks.

Segment-clip answers carry three fields (verdict, category, description);
full-video answers carry a verdict line followed by ``from A.As to B.Bs,
reasoning`` event lines.  Both parsers are total: any input yields either a
parsed value or an abstention that records the raw text, never an exception.
Abstentions are scored as negative predictions downstream.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .taxonomy import InconsistencyCategory, TimeInterval

CONSISTENT_REASONING = "Audio and video are consistent"

_ENUM_PREFIX = re.compile(r"^\s*(?:[-*•]\s*)?(?:\d+\s*[.):]\s*)?")
# A label prefix is only stripped when the text before the colon looks like
# one of the three questionnaire prompts; reasoning prose keeps its colons.
_FIELD_LABEL = re.compile(
    r"^(?P<label>[^:]{0,80}?(?:inconsisten|category|description|answer|reasoning)[^:]*):\s*(?P<rest>.*)$",
    re.IGNORECASE,
)
_YES_NO = re.compile(r"\b(yes|no)\b", re.IGNORECASE)
_NOT_APPLICABLE = re.compile(r"^n/?a\.?$", re.IGNORECASE)
_EVENT_LINE = re.compile(
    r"from\s+(\d+(?:\.\d+)?)\s*s?\s+to\s+(\d+(?:\.\d+)?)\s*s?\s*[-,.:;]*\s*(.*)",
    re.IGNORECASE,
)


@dataclass(frozen=True, slots=True)
class GroundedEvent:
    """One predicted or reference event: a window plus its explanation."""

    interval: TimeInterval
    reasoning: str = ""
    category: InconsistencyCategory | None = None


@dataclass(frozen=True, slots=True)
class GroundedPrediction:
    """Per-video event list; intervals are untrusted and may overlap."""

    media_id: str
    events: tuple[GroundedEvent, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "events", tuple(self.events))


@dataclass(frozen=True, slots=True)
class SegmentParse:
    """Outcome of parsing one segment-clip answer."""

    label: int
    category: InconsistencyCategory | None
    reasoning: str
    abstained: bool
    raw: str


@dataclass(frozen=True, slots=True)
class FullVideoParse:
    """Outcome of parsing one full-video answer.

    ``dropped_lines`` keeps event lines that failed extraction (no time span,
    or start >= end) for audit; they contribute nothing to scoring.
    """

    label: int
    events: tuple[GroundedEvent, ...]
    abstained: bool
    raw: str
    dropped_lines: tuple[str, ...] = ()


def _verdict(text: str) -> int | None:
    match = _YES_NO.search(text)
    if match is None:
        return None
    return 1 if match.group(1).lower() == "yes" else 0


def _category_token(text: str) -> InconsistencyCategory | None:
    cleaned = re.sub(r"[^A-Za-z]+", "_", text).strip("_").upper()
    try:
        return InconsistencyCategory[cleaned]
    except KeyError:
        return None


def _segment_abstention(raw: str) -> SegmentParse:
    return SegmentParse(label=0, category=None, reasoning="", abstained=True, raw=raw)


def parse_segment_response(text: str) -> SegmentParse:
    """Extract (verdict, category, description) from a segment-clip answer.

    Accepts the numbered questionnaire layout, bare three-line answers and the
    compact ``Yes / CATEGORY / description`` form.  A "No" verdict normalizes
    the description to the fixed consistent-case string.  Unknown category
    names and missing fields become abstentions with the raw text retained.
    """
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines:
        return _segment_abstention(text)
    if len(lines) == 1 and "/" in lines[0]:
        fields = [part.strip() for part in lines[0].split("/", 2)]
    else:
        fields = []
        for line in lines:
            line = _ENUM_PREFIX.sub("", line).strip()
            labelled = _FIELD_LABEL.match(line)
            if labelled is not None:
                line = labelled.group("rest").strip()
            if line:
                fields.append(line)
    if not fields:
        return _segment_abstention(text)
    label = _verdict(fields[0])
    if label is None:
        return _segment_abstention(text)
    if label == 0:
        return SegmentParse(
            label=0,
            category=None,
            reasoning=CONSISTENT_REASONING,
            abstained=False,
            raw=text,
        )
    if len(fields) < 2:
        return _segment_abstention(text)
    category = _category_token(fields[1])
    if category is None:
        return _segment_abstention(text)
    reasoning = " ".join(fields[2:]).strip()
    return SegmentParse(
        label=1, category=category, reasoning=reasoning, abstained=False, raw=text
    )


def parse_fullvideo_response(text: str, media_id: str = "") -> FullVideoParse:
    """Extract the verdict and event list from a full-video answer.

    The first non-empty line must contain Yes or No; otherwise the whole
    answer is an abstention.  Event lines are salvaged with a regular
    expression wherever the time span appears, so bullets and stray prefixes
    survive.  Lines with ``start >= end`` or no recognizable span are dropped
    and retained for audit.
    """
    del media_id  # callers track ids; kept for signature symmetry
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines:
        return FullVideoParse(
            label=0, events=(), abstained=True, raw=text, dropped_lines=()
        )
    label = _verdict(lines[0])
    if label is None:
        return FullVideoParse(
            label=0, events=(), abstained=True, raw=text, dropped_lines=()
        )
    events: list[GroundedEvent] = []
    dropped: list[str] = []
    if label == 1:
        for line in lines[1:]:
            if _NOT_APPLICABLE.match(line):
                continue
            match = _EVENT_LINE.search(line)
            if match is None:
                dropped.append(line)
                continue
            start, end = float(match.group(1)), float(match.group(2))
            if start >= end:
                dropped.append(line)
                continue
            events.append(
                GroundedEvent(
                    interval=TimeInterval.from_seconds(start, end),
                    reasoning=match.group(3).strip(),
                )
            )
    return FullVideoParse(
        label=label,
        events=tuple(events),
        abstained=False,
        raw=text,
        dropped_lines=tuple(dropped),
    )


def load_predictions_jsonl(path: str | Path) -> dict[str, str]:
    """Read a predictions file: one ``{"id": ..., "raw_text": ...}`` per line."""
    predictions: dict[str, str] = {}
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {line_number}: invalid JSON: {exc}") from exc
            if not isinstance(record, dict) or "id" not in record or "raw_text" not in record:
                raise ValueError(f"line {line_number}: expected keys 'id' and 'raw_text'")
            sample_id = str(record["id"])
            if sample_id in predictions:
                raise ValueError(f"line {line_number}: duplicate id {sample_id!r}")
            predictions[sample_id] = str(record["raw_text"])
    return predictions
