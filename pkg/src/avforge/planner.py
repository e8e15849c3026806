"""Injection planning: feasibility screening, plan records, parsing, fallback.

Plans may come from an external language-model backend or from the built-in
deterministic fallback.  Both routes go through the same strict parser and
validator; a plan set is either fully valid or rejected, never repaired.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from typing import ClassVar, Protocol

from .taxonomy import (
    EMOTIONS,
    SOUND_CATEGORIES,
    VOICE_TYPES,
    VOLUME_DIRECTIONS,
    InconsistencyCategory,
    SegmentClass,
    TimeInterval,
    Timeline,
    TimelineSegment,
    legal_categories,
    ms_from_seconds,
)

IC = InconsistencyCategory

MIN_PLAN_SECONDS = 5.0
MAX_PLAN_SECONDS = 30.0
MIN_SHIFT_SECONDS = 0.5
MAX_SHIFT_SECONDS = 3.0


# --------------------------------------------------------------------- errors


class PlanParseError(ValueError):
    """Base class for backend-output rejection."""


class PlanJSONError(PlanParseError):
    """The backend response is not well-formed JSON."""


class PlanSchemaError(PlanParseError):
    """A required field is missing or has an unusable value."""


class UnknownCategoryError(PlanParseError):
    """injection_type names a category outside the predefined list."""


# --------------------------------------------------------------- plan records


def word_count(text: str) -> int:
    return len(text.split())


def word_bounds(duration: float) -> tuple[int, int]:
    """Required word-count range for spoken text covering ``duration`` seconds.

    Durations of 20 s and above get the widened upper bound so longer reads
    stay plausible at a natural speaking rate.
    """
    if not MIN_PLAN_SECONDS <= duration <= MAX_PLAN_SECONDS:
        raise ValueError(f"duration {duration} outside [{MIN_PLAN_SECONDS}, {MAX_PLAN_SECONDS}]")
    if duration < 10.0:
        return (15, 25)
    if duration < 15.0:
        return (25, 35)
    if duration < 20.0:
        return (35, 50)
    return (35, 70)


@dataclass(frozen=True, slots=True)
class TemporalShiftParams:
    shift_seconds: float
    category: ClassVar[IC] = IC.TEMPORAL_SHIFT

    def to_json(self) -> dict:
        return {"shift_seconds": self.shift_seconds}

    def violations(self) -> list[str]:
        if not MIN_SHIFT_SECONDS <= abs(self.shift_seconds) <= MAX_SHIFT_SECONDS:
            return [
                f"shift_seconds magnitude {abs(self.shift_seconds)} outside "
                f"[{MIN_SHIFT_SECONDS}, {MAX_SHIFT_SECONDS}]"
            ]
        return []


@dataclass(frozen=True, slots=True)
class LipSyncParams:
    text: str
    voice_type: str
    category: ClassVar[IC] = IC.LIP_SYNC

    def to_json(self) -> dict:
        return {"text": self.text, "voice_type": self.voice_type}

    def violations(self) -> list[str]:
        out = []
        if self.voice_type not in VOICE_TYPES:
            out.append(f"unknown voice_type {self.voice_type!r}")
        if not self.text.strip():
            out.append("text is empty")
        return out


@dataclass(frozen=True, slots=True)
class SemanticDivergenceParams:
    contradictory_text: str
    voice_type: str
    category: ClassVar[IC] = IC.SEMANTIC_DIVERGENCE

    def to_json(self) -> dict:
        return {"contradictory_text": self.contradictory_text, "voice_type": self.voice_type}

    def violations(self) -> list[str]:
        out = []
        if self.voice_type not in VOICE_TYPES:
            out.append(f"unknown voice_type {self.voice_type!r}")
        if not self.contradictory_text.strip():
            out.append("contradictory_text is empty")
        return out


@dataclass(frozen=True, slots=True)
class VoiceIdentityParams:
    target_voice: str
    category: ClassVar[IC] = IC.VOICE_IDENTITY

    def to_json(self) -> dict:
        return {"target_voice": self.target_voice}

    def violations(self) -> list[str]:
        if self.target_voice not in VOICE_TYPES:
            return [f"unknown target_voice {self.target_voice!r}"]
        return []


@dataclass(frozen=True, slots=True)
class VolumeFluctuationParams:
    direction: str
    category: ClassVar[IC] = IC.VOLUME_FLUCTUATION

    def to_json(self) -> dict:
        return {"direction": self.direction}

    def violations(self) -> list[str]:
        if self.direction not in VOLUME_DIRECTIONS:
            return [f"direction must be one of {VOLUME_DIRECTIONS}, got {self.direction!r}"]
        return []


@dataclass(frozen=True, slots=True)
class BackgroundConflictParams:
    bg_sound_type: str
    category: ClassVar[IC] = IC.BACKGROUND_CONFLICT

    def to_json(self) -> dict:
        return {"bg_sound_type": self.bg_sound_type}

    def violations(self) -> list[str]:
        if self.bg_sound_type not in SOUND_CATEGORIES:
            return [f"bg_sound_type {self.bg_sound_type!r} not in the sound library"]
        return []


@dataclass(frozen=True, slots=True)
class BackgroundSoundParams:
    bg_sound_type: str
    category: ClassVar[IC] = IC.BACKGROUND_SOUND

    def to_json(self) -> dict:
        return {"bg_sound_type": self.bg_sound_type}

    def violations(self) -> list[str]:
        if self.bg_sound_type not in SOUND_CATEGORIES:
            return [f"bg_sound_type {self.bg_sound_type!r} not in the sound library"]
        return []


@dataclass(frozen=True, slots=True)
class EmotionMismatchParams:
    emotion: str
    category: ClassVar[IC] = IC.EMOTION_MISMATCH

    def to_json(self) -> dict:
        return {"emotion": self.emotion}

    def violations(self) -> list[str]:
        if self.emotion not in EMOTIONS:
            return [f"emotion must be one of {EMOTIONS}, got {self.emotion!r}"]
        return []


InjectionParams = (
    TemporalShiftParams
    | LipSyncParams
    | SemanticDivergenceParams
    | VoiceIdentityParams
    | VolumeFluctuationParams
    | BackgroundConflictParams
    | BackgroundSoundParams
    | EmotionMismatchParams
)

_PARAM_TYPES: dict[IC, type] = {
    IC.TEMPORAL_SHIFT: TemporalShiftParams,
    IC.LIP_SYNC: LipSyncParams,
    IC.SEMANTIC_DIVERGENCE: SemanticDivergenceParams,
    IC.VOICE_IDENTITY: VoiceIdentityParams,
    IC.VOLUME_FLUCTUATION: VolumeFluctuationParams,
    IC.BACKGROUND_CONFLICT: BackgroundConflictParams,
    IC.BACKGROUND_SOUND: BackgroundSoundParams,
    IC.EMOTION_MISMATCH: EmotionMismatchParams,
}

_PARAM_FIELDS: dict[IC, tuple[str, ...]] = {
    IC.TEMPORAL_SHIFT: ("shift_seconds",),
    IC.LIP_SYNC: ("text", "voice_type"),
    IC.SEMANTIC_DIVERGENCE: ("contradictory_text", "voice_type"),
    IC.VOICE_IDENTITY: ("target_voice",),
    IC.VOLUME_FLUCTUATION: ("direction",),
    IC.BACKGROUND_CONFLICT: ("bg_sound_type",),
    IC.BACKGROUND_SOUND: ("bg_sound_type",),
    IC.EMOTION_MISMATCH: ("emotion",),
}


@dataclass(frozen=True, slots=True)
class Understanding:
    visual_description: str = ""
    audio_description: str = ""
    inconsistency_point: str = ""
    extras: tuple[tuple[str, object], ...] = ()

    def to_json(self) -> dict:
        out = {
            "visual_description": self.visual_description,
            "audio_description": self.audio_description,
            "inconsistency_point": self.inconsistency_point,
        }
        out.update(dict(self.extras))
        return out


@dataclass(frozen=True, slots=True)
class InjectionPlan:
    interval: TimeInterval
    class_label: SegmentClass
    injection_type: IC
    params: InjectionParams
    understanding: Understanding = Understanding()
    sub_category: str = ""
    reasoning: str = ""
    extras: tuple[tuple[str, object], ...] = ()

    def to_json(self) -> dict:
        out = {
            "start": self.interval.start,
            "end": self.interval.end,
            "class_label": self.class_label.value,
            "injection_type": self.injection_type.value,
            "injection_params": self.params.to_json(),
            "inconsistency_understanding": self.understanding.to_json(),
            "dataset_sub_category": self.sub_category,
            "reasoning": self.reasoning,
        }
        out.update(dict(self.extras))
        return out


@dataclass(frozen=True, slots=True)
class PlanSet:
    media_id: str
    plans: tuple[InjectionPlan, ...] = ()
    summary: str = ""
    extras: tuple[tuple[str, object], ...] = ()

    def to_json(self) -> dict:
        out = {
            "media_id": self.media_id,
            "injection_plans": [p.to_json() for p in self.plans],
            "summary": self.summary,
        }
        out.update(dict(self.extras))
        return out


def serialize_plan_set(plan_set: PlanSet) -> str:
    return json.dumps(plan_set.to_json(), indent=2)


@dataclass(frozen=True, slots=True)
class Budget:
    min_injections: int
    max_injections: int

    def __post_init__(self) -> None:
        if self.min_injections < 1 or self.max_injections < self.min_injections:
            raise ValueError(
                f"need 1 <= min <= max, got ({self.min_injections}, {self.max_injections})"
            )


def default_budget(duration: float) -> Budget:
    """Minimum grows slowly with media length so most items land on 3-6 events."""
    lo = max(1, math.floor(duration / 120.0) + 2)
    return Budget(lo, lo + 3)


class PlannerBackend(Protocol):
    def plan(self, timeline: Timeline, budget: Budget) -> str:
        """Return candidate plan-set text for parse_backend_output."""
        ...


# -------------------------------------------------------------------- parsing


def _parse_time(value, label: str) -> float:
    if isinstance(value, bool):
        raise PlanSchemaError(f"{label} must be a number, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        text = value.strip()
        if text.endswith("s"):
            text = text[:-1]
        try:
            return float(text)
        except ValueError:
            raise PlanSchemaError(f"{label} is not a time value: {value!r}") from None
    raise PlanSchemaError(f"{label} has unsupported type {type(value).__name__}")


def _require(data: dict, key: str, where: str):
    if key not in data:
        raise PlanSchemaError(f"{where}: missing required field {key!r}")
    return data[key]


def _parse_params(category: IC, raw, where: str) -> InjectionParams:
    if not isinstance(raw, dict):
        raise PlanSchemaError(f"{where}: injection_params must be an object")
    required = _PARAM_FIELDS[category]
    missing = [k for k in required if k not in raw]
    if missing:
        raise PlanSchemaError(f"{where}: injection_params missing {missing} for {category.value}")
    extra = [k for k in raw if k not in required]
    if extra:
        raise PlanSchemaError(f"{where}: injection_params has unexpected keys {extra}")
    values = {}
    for key in required:
        value = raw[key]
        if key == "shift_seconds":
            values[key] = _parse_time(value, f"{where}: shift_seconds")
        else:
            if not isinstance(value, str):
                raise PlanSchemaError(f"{where}: {key} must be a string")
            values[key] = value
    return _PARAM_TYPES[category](**values)


def _parse_understanding(raw, where: str) -> Understanding:
    if not isinstance(raw, dict):
        raise PlanSchemaError(f"{where}: inconsistency_understanding must be an object")
    known = ("visual_description", "audio_description", "inconsistency_point")
    values = {}
    for key in known:
        value = _require(raw, key, where)
        if not isinstance(value, str):
            raise PlanSchemaError(f"{where}: {key} must be a string")
        values[key] = value
    extras = tuple((k, v) for k, v in raw.items() if k not in known)
    return Understanding(**values, extras=extras)


_PLAN_KEYS = (
    "start",
    "end",
    "class_label",
    "injection_type",
    "injection_params",
    "inconsistency_understanding",
    "dataset_sub_category",
    "reasoning",
)


def _parse_plan(raw, index: int) -> InjectionPlan:
    where = f"injection_plans[{index}]"
    if not isinstance(raw, dict):
        raise PlanSchemaError(f"{where}: plan must be an object")
    start = _parse_time(_require(raw, "start", where), f"{where}: start")
    end = _parse_time(_require(raw, "end", where), f"{where}: end")
    try:
        interval = TimeInterval.from_seconds(start, end)
    except ValueError as exc:
        raise PlanSchemaError(f"{where}: {exc}") from None

    label_raw = _require(raw, "class_label", where)
    try:
        class_label = SegmentClass.from_name(label_raw)
    except ValueError:
        raise PlanSchemaError(f"{where}: unknown class_label {label_raw!r}") from None

    type_raw = _require(raw, "injection_type", where)
    try:
        category = IC.from_name(str(type_raw))
    except ValueError:
        raise UnknownCategoryError(f"{where}: unknown injection_type {type_raw!r}") from None

    params = _parse_params(category, _require(raw, "injection_params", where), where)
    understanding = _parse_understanding(
        _require(raw, "inconsistency_understanding", where), where
    )
    sub_category = _require(raw, "dataset_sub_category", where)
    reasoning = _require(raw, "reasoning", where)
    for name, value in (("dataset_sub_category", sub_category), ("reasoning", reasoning)):
        if not isinstance(value, str):
            raise PlanSchemaError(f"{where}: {name} must be a string")

    extras = tuple((k, v) for k, v in raw.items() if k not in _PLAN_KEYS)
    return InjectionPlan(
        interval=interval,
        class_label=class_label,
        injection_type=category,
        params=params,
        understanding=understanding,
        sub_category=sub_category,
        reasoning=reasoning,
        extras=extras,
    )


def parse_backend_output(text: str) -> PlanSet:
    """Strictly parse plan-set text; reject anything malformed outright."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PlanJSONError(f"response is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise PlanSchemaError("top level must be a JSON object")
    raw_plans = _require(data, "injection_plans", "top level")
    if not isinstance(raw_plans, list):
        raise PlanSchemaError("injection_plans must be an array")
    summary = _require(data, "summary", "top level")
    if not isinstance(summary, str):
        raise PlanSchemaError("summary must be a string")
    media_id = data.get("media_id", "")
    if not isinstance(media_id, str):
        raise PlanSchemaError("media_id must be a string")
    plans = tuple(_parse_plan(raw, i) for i, raw in enumerate(raw_plans))
    known = ("media_id", "injection_plans", "summary")
    extras = tuple((k, v) for k, v in data.items() if k not in known)
    return PlanSet(media_id=media_id, plans=plans, summary=summary, extras=extras)


# ----------------------------------------------------------------- validation


@dataclass(frozen=True, slots=True)
class PlanViolation:
    plan_index: int  # -1 for set-level problems
    rule: str
    message: str


def validate_plan_set(plan_set: PlanSet, timeline: Timeline) -> list[PlanViolation]:
    """Check every structural constraint a plan set must satisfy.

    Covers pairwise overlap, the 5-30 s duration window, class-conditional
    category legality, per-category parameter schemas, spoken-text word
    tiers, and containment of each plan inside a same-class timeline segment.
    """
    violations: list[PlanViolation] = []

    ordered = sorted(enumerate(plan_set.plans), key=lambda kv: kv[1].interval.start_ms)
    for (ia, a), (ib, b) in zip(ordered, ordered[1:]):
        if a.interval.overlaps(b.interval):
            violations.append(
                PlanViolation(
                    ib,
                    "overlap",
                    f"plan {ib} overlaps plan {ia} "
                    f"([{a.interval.start}, {a.interval.end}] vs "
                    f"[{b.interval.start}, {b.interval.end}])",
                )
            )

    for i, plan in enumerate(plan_set.plans):
        duration = plan.interval.duration
        if not MIN_PLAN_SECONDS <= duration <= MAX_PLAN_SECONDS:
            violations.append(
                PlanViolation(
                    i,
                    "duration_bounds",
                    f"duration {duration:.3f}s outside "
                    f"[{MIN_PLAN_SECONDS}, {MAX_PLAN_SECONDS}]",
                )
            )
        if plan.injection_type not in legal_categories(plan.class_label):
            violations.append(
                PlanViolation(
                    i,
                    "illegal_category",
                    f"{plan.injection_type.value} is not legal for {plan.class_label.value}",
                )
            )
        if plan.params.category is not plan.injection_type:
            violations.append(
                PlanViolation(
                    i,
                    "param_schema",
                    f"params are for {plan.params.category.value}, "
                    f"plan is {plan.injection_type.value}",
                )
            )
        for message in plan.params.violations():
            violations.append(PlanViolation(i, "param_schema", message))

        spoken = None
        if isinstance(plan.params, LipSyncParams):
            spoken = plan.params.text
        elif isinstance(plan.params, SemanticDivergenceParams):
            spoken = plan.params.contradictory_text
        if spoken is not None and MIN_PLAN_SECONDS <= duration <= MAX_PLAN_SECONDS:
            lo, hi = word_bounds(duration)
            n = word_count(spoken)
            if not lo <= n <= hi:
                violations.append(
                    PlanViolation(
                        i,
                        "word_tier",
                        f"text has {n} words; {duration:.1f}s window requires {lo}-{hi}",
                    )
                )

        host = next(
            (
                seg
                for seg in timeline.segments
                if seg.interval.covers(plan.interval)
                and seg.segment_class is plan.class_label
            ),
            None,
        )
        if host is None:
            violations.append(
                PlanViolation(
                    i,
                    "containment",
                    f"[{plan.interval.start}, {plan.interval.end}] does not sit inside "
                    f"a {plan.class_label.value} timeline segment",
                )
            )
    return violations


# ---------------------------------------------------------------- feasibility


def screen_feasibility(timeline: Timeline) -> list[TimelineSegment]:
    """Candidate injection windows: segments >= 5 s, long ones split <= 30 s.

    Oversize segments are divided into equal near-integer-ms sub-windows that
    tile the original exactly; sub-second remainders go to the earliest
    windows.  Deterministic, no randomness involved.
    """
    min_ms = ms_from_seconds(MIN_PLAN_SECONDS)
    max_ms = ms_from_seconds(MAX_PLAN_SECONDS)
    out: list[TimelineSegment] = []
    for seg in timeline.segments:
        dur = seg.interval.duration_ms
        if dur < min_ms:
            continue
        if dur <= max_ms:
            out.append(seg)
            continue
        n = math.ceil(dur / max_ms)
        base, rem = divmod(dur, n)
        cursor = seg.interval.start_ms
        for k in range(n):
            size = base + (1 if k < rem else 0)
            out.append(
                TimelineSegment(
                    TimeInterval(cursor, cursor + size), seg.segment_class, seg.confidence
                )
            )
            cursor += size
    return out


# ------------------------------------------------------------------- fallback

# Sampling weights: the two high-signal speech manipulations are promoted
# over the two ambience-only ones.
_CATEGORY_WEIGHTS: dict[IC, float] = {
    IC.TEMPORAL_SHIFT: 2.0,
    IC.LIP_SYNC: 2.0,
    IC.VOICE_IDENTITY: 1.0,
    IC.VOLUME_FLUCTUATION: 1.0,
    IC.SEMANTIC_DIVERGENCE: 1.0,
    IC.BACKGROUND_CONFLICT: 1.0,
    IC.BACKGROUND_SOUND: 1.0,
    IC.EMOTION_MISMATCH: 1.0,
}

_SUB_CATEGORY: dict[IC, str] = {
    IC.TEMPORAL_SHIFT: "speech",
    IC.LIP_SYNC: "speech",
    IC.SEMANTIC_DIVERGENCE: "speech",
    IC.VOICE_IDENTITY: "speech",
    IC.VOLUME_FLUCTUATION: "speech",
    IC.BACKGROUND_CONFLICT: "music",
    IC.EMOTION_MISMATCH: "music",
    IC.BACKGROUND_SOUND: "sound_effects",
}

# Phrase pool for fallback spoken text; sentences are assembled to an exact
# word count, so phrasing quality matters less than coverage.
_PHRASES = (
    "the weather service announced clear skies across the entire region today",
    "workers finished the new bridge three months ahead of schedule",
    "the museum opened a wing dedicated to early radio broadcasting",
    "local farmers reported an unusually strong harvest this season",
    "the city council approved funding for two more tram lines",
    "engineers tested the turbine at full load through the night",
    "the librarian catalogued every donated volume before the weekend",
    "heavy rain flooded the lower car park near the stadium",
    "the chef prepared the entire banquet with seasonal produce only",
    "students presented their robotics projects to a packed auditorium",
)


def _compose_text(rng: random.Random, n_words: int) -> str:
    words: list[str] = []
    while len(words) < n_words:
        words.extend(rng.choice(_PHRASES).split())
    return " ".join(words[:n_words])


def _speakable_words(rng: random.Random, duration: float) -> int:
    """A tier-legal word count the bundled synthesizer can fit into the window.

    Tempo matching rejects stretches outside [0.7, 1.3]; sampling inside a
    slightly tighter band leaves headroom for frame rounding on both sides.
    """
    from .backends import WORDS_PER_SECOND

    tier_lo, tier_hi = word_bounds(duration)
    lo = max(tier_lo, math.ceil(0.75 * duration * WORDS_PER_SECOND))
    hi = min(tier_hi, math.floor(1.25 * duration * WORDS_PER_SECOND))
    if lo > hi:  # tiers and rate disagree for this window; take the closest legal count
        nominal = round(duration * WORDS_PER_SECOND)
        return min(max(nominal, tier_lo), tier_hi)
    return rng.randint(lo, hi)


def _draw_params(rng: random.Random, category: IC, duration: float) -> InjectionParams:
    if category is IC.TEMPORAL_SHIFT:
        sign = rng.choice((-1.0, 1.0))
        return TemporalShiftParams(sign * round(rng.uniform(0.5, 3.0), 2))
    if category is IC.LIP_SYNC:
        return LipSyncParams(
            _compose_text(rng, _speakable_words(rng, duration)), rng.choice(VOICE_TYPES)
        )
    if category is IC.SEMANTIC_DIVERGENCE:
        return SemanticDivergenceParams(
            _compose_text(rng, _speakable_words(rng, duration)), rng.choice(VOICE_TYPES)
        )
    if category is IC.VOICE_IDENTITY:
        return VoiceIdentityParams(rng.choice(VOICE_TYPES))
    if category is IC.VOLUME_FLUCTUATION:
        return VolumeFluctuationParams(rng.choice(VOLUME_DIRECTIONS))
    if category is IC.BACKGROUND_CONFLICT:
        return BackgroundConflictParams(rng.choice(SOUND_CATEGORIES))
    if category is IC.BACKGROUND_SOUND:
        return BackgroundSoundParams(rng.choice(SOUND_CATEGORIES))
    if category is IC.EMOTION_MISMATCH:
        return EmotionMismatchParams(rng.choice(EMOTIONS))
    raise ValueError(f"unhandled category {category}")


def _draw_category(rng: random.Random, legal: frozenset[IC], used: set[IC]) -> IC:
    fresh = sorted((c for c in legal if c not in used), key=lambda c: c.value)
    pool = fresh if fresh else sorted(legal, key=lambda c: c.value)
    weights = [_CATEGORY_WEIGHTS[c] for c in pool]
    return rng.choices(pool, weights=weights, k=1)[0]


def _understanding_for(category: IC, seg_class: SegmentClass) -> Understanding:
    visual = {
        SegmentClass.ACTIVE_SPEAKER: "A person is on screen speaking directly to the camera.",
        SegmentClass.VOICEOVER: "Footage plays while an unseen narrator talks over it.",
        SegmentClass.SCENIC: "The scene shows ambient footage with no speech.",
    }[seg_class]
    audio = {
        IC.TEMPORAL_SHIFT: "The speech track is displaced in time against the picture.",
        IC.LIP_SYNC: "The spoken words no longer match the visible mouth movements.",
        IC.VOICE_IDENTITY: "The voice no longer matches the visible speaker's identity.",
        IC.VOLUME_FLUCTUATION: "The loudness drifts against the speaker's distance on screen.",
        IC.SEMANTIC_DIVERGENCE: "The narration contradicts what the footage shows.",
        IC.BACKGROUND_CONFLICT: "An out-of-place background bed plays under the narration.",
        IC.BACKGROUND_SOUND: "An ambient sound with no visible source enters the scene.",
        IC.EMOTION_MISMATCH: "The music's mood clashes with the scene's emotional tone.",
    }[category]
    return Understanding(
        visual_description=visual,
        audio_description=audio,
        inconsistency_point="What is heard stops agreeing with what is seen.",
    )


def plan_fallback(timeline: Timeline, budget: Budget, seed: int) -> PlanSet:
    """Deterministic constraint-respecting planner used when no backend exists.

    Guarantees: plans never overlap, every class present is covered when the
    budget allows, categories are diversified with the configured weights,
    and the emitted set passes validate_plan_set with zero violations.
    """
    rng = random.Random(seed)
    candidates = screen_feasibility(timeline)
    if not candidates:
        return PlanSet(
            media_id=timeline.media_id,
            plans=(),
            summary="No feasible segments: nothing is at least 5 seconds long.",
        )

    n_target = min(budget.max_injections, len(candidates))

    by_class: dict[SegmentClass, list[TimelineSegment]] = {}
    for seg in candidates:
        by_class.setdefault(seg.segment_class, []).append(seg)

    selected: list[TimelineSegment] = []
    for seg_class in SegmentClass:
        if seg_class in by_class and len(selected) < n_target:
            pick = rng.choice(by_class[seg_class])
            selected.append(pick)
    remaining = [seg for seg in candidates if not any(seg is s for s in selected)]
    rng.shuffle(remaining)
    while len(selected) < n_target and remaining:
        selected.append(remaining.pop())
    selected.sort(key=lambda seg: seg.interval.start_ms)

    used: set[IC] = set()
    plans: list[InjectionPlan] = []
    for seg in selected:
        category = _draw_category(rng, legal_categories(seg.segment_class), used)
        used.add(category)
        duration = seg.interval.duration
        params = _draw_params(rng, category, duration)
        plans.append(
            InjectionPlan(
                interval=seg.interval,
                class_label=seg.segment_class,
                injection_type=category,
                params=params,
                understanding=_understanding_for(category, seg.segment_class),
                sub_category=_SUB_CATEGORY[category],
                reasoning=(
                    f"Window of {duration:.1f}s in a {seg.segment_class.value} region "
                    f"supports a {category.value} manipulation."
                ),
            )
        )

    classes_hit = len({p.class_label for p in plans})
    summary = (
        f"{len(plans)} injection plans over {classes_hit} segment class(es); "
        f"budget was {budget.min_injections}-{budget.max_injections}."
    )
    if len(plans) < budget.min_injections:
        summary += " Fewer feasible windows than the minimum budget."
    return PlanSet(media_id=timeline.media_id, plans=tuple(plans), summary=summary)


# ----------------------------------------------------------------- prompt I/O

PROMPT_TEMPLATE = """\
You select audio-manipulation targets for one media item.

Media duration: {duration} seconds.
Class-labeled segments:
{segments_text}

Produce between {min_injections} and {max_injections} injection plans.

Rules:
1. Each plan targets one window of at least 5 seconds and at most 30 seconds
   that lies entirely inside a single listed segment. If a segment is longer
   than 30 seconds, subdivide it into non-overlapping sub-windows first.
2. Chosen windows must not overlap each other.
3. Cover at least one segment from each class that appears above whenever the
   plan count allows it.
4. injection_type must match the segment class:
   class_1_active_speaker: VOICE_IDENTITY, VOLUME_FLUCTUATION, LIP_SYNC,
   TEMPORAL_SHIFT. class_2_voiceover: BACKGROUND_CONFLICT,
   SEMANTIC_DIVERGENCE. class_3_scenic: EMOTION_MISMATCH, BACKGROUND_SOUND.
   Prefer TEMPORAL_SHIFT and LIP_SYNC over EMOTION_MISMATCH and
   BACKGROUND_SOUND when a choice exists.
5. injection_params must follow the format for its type:
   TEMPORAL_SHIFT: {{"shift_seconds": <number, magnitude 0.5-3.0>}}
   LIP_SYNC: {{"text": <words to speak>, "voice_type": <preset>}}
   SEMANTIC_DIVERGENCE: {{"contradictory_text": <words>, "voice_type": <preset>}}
   VOICE_IDENTITY: {{"target_voice": <preset>}}
   VOLUME_FLUCTUATION: {{"direction": "away" or "toward"}}
   BACKGROUND_CONFLICT: {{"bg_sound_type": <library category>}}
   BACKGROUND_SOUND: {{"bg_sound_type": <library category>}}
   EMOTION_MISMATCH: {{"emotion": "happy", "sad", "peaceful", "exciting" or "tense"}}
   Voice presets: Female, Female_Young, Female_Old, Male, Male_Deep, Child,
   Elder. Library categories: city_traffic, construction, siren, subway,
   train, car_horn, rain, thunder, wind, birds, ocean_waves, dogs, cats,
   heavy_machinery, factory, music_happy, music_sad, music_peaceful,
   music_excited, music_tense.
6. Spoken text length must fit the window: 5-10 s needs 15-25 words, 10-15 s
   needs 25-35 words, 15-30 s needs 35-50 words, and windows of 20 s or more
   may extend to 70 words.

Answer with exactly one JSON object:
{{
  "injection_plans": [
    {{
      "start": <seconds>,
      "end": <seconds>,
      "class_label": "<segment class>",
      "injection_type": "<category>",
      "injection_params": {{...}},
      "inconsistency_understanding": {{
        "visual_description": "<what the picture shows>",
        "audio_description": "<what the altered audio conveys>",
        "inconsistency_point": "<why they disagree>"
      }},
      "dataset_sub_category": "<speech | music | sound_effects>",
      "reasoning": "<why this window and type>"
    }}
  ],
  "summary": "<one-paragraph overview of the chosen strategy>"
}}
"""


def format_segments(timeline: Timeline) -> str:
    lines = []
    for i, seg in enumerate(timeline.segments, start=1):
        lines.append(
            f"{i}. [{seg.segment_class.value}] "
            f"{seg.interval.start:.1f}s - {seg.interval.end:.1f}s "
            f"({seg.interval.duration:.1f}s)"
        )
    return "\n".join(lines)


def build_prompt(timeline: Timeline, budget: Budget) -> str:
    return PROMPT_TEMPLATE.format(
        duration=f"{timeline.duration_ms / 1000.0:.1f}",
        segments_text=format_segments(timeline),
        min_injections=budget.min_injections,
        max_injections=budget.max_injections,
    )
