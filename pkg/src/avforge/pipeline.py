"""End-to-end dataset construction and evaluation runs.

run_construct drives one output tree per config: normalized copies of the
sources, timelines, strategy plans, the review log, injected full mixes,
paired segment clips, and two manifests (full videos at the configured
inconsistent:consistent ratio, segment clips at exactly 1:1).

Every per-media artifact is content-hashed into a run ledger, so re-running
construct on the same tree skips fresh stages and reproduces byte-identical
outputs for a fixed seed.  Items advance to injection only after their
strategies clear the review gate.
"""

from __future__ import annotations

import hashlib
import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping

import httpx

from .audio import read_wav, write_wav
from .backends import (
    BabbleTTS,
    BandpassSeparation,
    SoundLibrary,
    SubprocessSeparation,
    SubprocessTTS,
    TTSBackend,
    SeparationBackend,
)
from .injectors import InjectorBackends, dispatch
from .manifest import (
    DatasetManifest,
    EventAnnotation,
    ManifestEntry,
    validate_manifest,
)
from .metrics import (
    MetricConfig,
    MetricReport,
    SegmentTruth,
    VideoTruth,
    evaluate_fullvideo_responses,
    evaluate_segment_responses,
)
from .planner import (
    Budget,
    InjectionPlan,
    PlanParseError,
    PlanSet,
    build_prompt,
    default_budget,
    parse_backend_output,
    plan_fallback,
    serialize_plan_set,
    validate_plan_set,
)
from .responses import GroundedEvent
from .review import ReviewItem, ReviewQueue, UnknownItemError
from .segmenter import (
    FaceMarks,
    Marks,
    SmoothingConfig,
    SubprocessDetector,
    assign_classes,
    fuse_and_smooth,
    segment_media,
    sidecar_face_marks,
)
from .taxonomy import TimeInterval, Timeline


class PipelineError(RuntimeError):
    pass


STAGES = ("segmented", "planned", "reviewed", "injected", "annotated")


# ------------------------------------------------------------------ config


@dataclass(frozen=True, slots=True)
class PipelineConfig:
    """One construction run: where media comes from, where outputs go, knobs.

    Backend commands are argv prefixes for external tools; when a command is
    absent the built-in stand-in (energy VAD, sidecar face marks, band-pass
    separation, babble TTS, procedural planner) is used instead.
    """

    sources: tuple[str, ...]
    output_root: str
    sound_library: str = ""
    vad_command: tuple[str, ...] = ()
    asd_command: tuple[str, ...] = ()
    separation_command: tuple[str, ...] = ()
    tts_command: tuple[str, ...] = ()
    llm_endpoint: str = ""
    seed: int = 0
    workers: int = 1
    consistent_share: float = 0.25
    vad_frame: float = 0.03
    vad_threshold_db: float = 12.0
    vad_hangover: int = 5
    smoothing_min_fragment: float = 0.5
    smoothing_rounding_ms: int = 1
    budget_min: int = 0  # 0 means derive from duration
    budget_max: int = 0
    batch_size: int = 50
    flag_threshold: int = 3
    auto_approve: bool = False

    def __post_init__(self) -> None:
        if not self.sources:
            raise PipelineError("config needs at least one source media file")
        if not self.output_root:
            raise PipelineError("config needs an output_root")
        if self.workers < 1:
            raise PipelineError(f"workers must be >= 1, got {self.workers}")
        if not 0.0 < self.consistent_share < 1.0:
            raise PipelineError(
                f"consistent_share must lie in (0, 1), got {self.consistent_share}"
            )
        if self.batch_size < 2 or not 0 < self.flag_threshold < self.batch_size:
            raise PipelineError(
                "need batch_size >= 2 and 0 < flag_threshold < batch_size, got "
                f"({self.batch_size}, {self.flag_threshold})"
            )
        if (self.budget_min == 0) != (self.budget_max == 0):
            raise PipelineError("budget_min and budget_max must be set together")
        if self.budget_min and self.budget_max < self.budget_min:
            raise PipelineError("budget_max must be >= budget_min")

    @property
    def smoothing(self) -> SmoothingConfig:
        return SmoothingConfig(self.smoothing_min_fragment, self.smoothing_rounding_ms)

    def budget_for(self, duration: float) -> Budget:
        if self.budget_min:
            return Budget(self.budget_min, self.budget_max)
        return default_budget(duration)

    def to_json(self) -> dict:
        return {
            "sources": list(self.sources),
            "output_root": self.output_root,
            "sound_library": self.sound_library,
            "backends": {
                "vad": list(self.vad_command),
                "asd": list(self.asd_command),
                "separation": list(self.separation_command),
                "tts": list(self.tts_command),
                "llm_endpoint": self.llm_endpoint,
            },
            "seed": self.seed,
            "workers": self.workers,
            "consistent_share": self.consistent_share,
            "vad": {
                "frame": self.vad_frame,
                "threshold_db": self.vad_threshold_db,
                "hangover": self.vad_hangover,
            },
            "smoothing": {
                "min_fragment": self.smoothing_min_fragment,
                "rounding_ms": self.smoothing_rounding_ms,
            },
            "budget": {"min": self.budget_min, "max": self.budget_max},
            "review": {
                "batch_size": self.batch_size,
                "flag_threshold": self.flag_threshold,
                "auto_approve": self.auto_approve,
            },
        }

    @classmethod
    def from_json(cls, data: dict, base_dir: str | Path = ".") -> "PipelineConfig":
        base = Path(base_dir)

        def respath(value: str) -> str:
            p = Path(value)
            return str(p if p.is_absolute() else base / p)

        sources = [respath(s) for s in data.get("sources", [])]
        source_dir = data.get("source_dir", "")
        if source_dir:
            sources.extend(str(p) for p in sorted(Path(respath(source_dir)).glob("*.wav")))
        backends = data.get("backends", {})
        vad = data.get("vad", {})
        smoothing = data.get("smoothing", {})
        budget = data.get("budget", {})
        review = data.get("review", {})
        return cls(
            sources=tuple(sources),
            output_root=respath(data["output_root"]) if "output_root" in data else "",
            sound_library=respath(data["sound_library"]) if data.get("sound_library") else "",
            vad_command=tuple(backends.get("vad") or ()),
            asd_command=tuple(backends.get("asd") or ()),
            separation_command=tuple(backends.get("separation") or ()),
            tts_command=tuple(backends.get("tts") or ()),
            llm_endpoint=backends.get("llm_endpoint") or "",
            seed=int(data.get("seed", 0)),
            workers=int(data.get("workers", 1)),
            consistent_share=float(data.get("consistent_share", 0.25)),
            vad_frame=float(vad.get("frame", 0.03)),
            vad_threshold_db=float(vad.get("threshold_db", 12.0)),
            vad_hangover=int(vad.get("hangover", 5)),
            smoothing_min_fragment=float(smoothing.get("min_fragment", 0.5)),
            smoothing_rounding_ms=int(smoothing.get("rounding_ms", 1)),
            budget_min=int(budget.get("min") or 0),
            budget_max=int(budget.get("max") or 0),
            batch_size=int(review.get("batch_size", 50)),
            flag_threshold=int(review.get("flag_threshold", 3)),
            auto_approve=bool(review.get("auto_approve", False)),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise PipelineError(f"config {path} is not valid JSON: {exc}") from exc
        if "output_root" not in data:
            raise PipelineError(f"config {path} is missing output_root")
        return cls.from_json(data, base_dir=path.parent)


# ------------------------------------------------------------------ ledger


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def derive_seed(base: int, *parts: str) -> int:
    """Stable per-artifact seed, independent of processing order."""
    text = f"{base}:" + ":".join(parts)
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:6], "big")


class RunLedger:
    """Per-media stage book-keeping persisted as one JSON document.

    Stage statuses are free-form short strings ("done", "failed", "skipped",
    "pending", "approved", "rejected").  The one hard rule: nothing is marked
    injected=done unless its review stage reads approved.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self.media: dict[str, dict] = {}
        self.meta: dict = {}

    @classmethod
    def load(cls, path: str | Path) -> "RunLedger":
        ledger = cls(path)
        p = Path(path)
        if p.exists():
            data = json.loads(p.read_text(encoding="utf-8"))
            ledger.media = data.get("media", {})
            ledger.meta = data.get("meta", {})
        return ledger

    def save(self) -> None:
        if self.path is None:
            return
        payload = {"meta": self.meta, "media": self.media}
        self.path.write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")

    def state(self, media_id: str) -> dict:
        return self.media.setdefault(
            media_id, {"stages": {}, "hashes": {}, "errors": [], "notes": []}
        )

    def stage(self, media_id: str, stage: str) -> str:
        return self.state(media_id)["stages"].get(stage, "")

    def set_stage(self, media_id: str, stage: str, status: str) -> None:
        if stage not in STAGES:
            raise PipelineError(f"unknown stage {stage!r}")
        state = self.state(media_id)
        if stage == "injected" and status == "done":
            if state["stages"].get("reviewed") != "approved":
                raise PipelineError(
                    f"{media_id}: refusing injected=done without reviewed=approved"
                )
        state["stages"][stage] = status

    def set_hash(self, media_id: str, name: str, digest: str) -> None:
        self.state(media_id)["hashes"][name] = digest

    def get_hash(self, media_id: str, name: str) -> str:
        return self.state(media_id)["hashes"].get(name, "")

    def add_error(self, media_id: str, message: str) -> None:
        errors = self.state(media_id)["errors"]
        if message not in errors:
            errors.append(message)

    def add_note(self, media_id: str, message: str) -> None:
        notes = self.state(media_id)["notes"]
        if message not in notes:
            notes.append(message)

    def media_ids(self) -> list[str]:
        return sorted(self.media)

    def fresh(self, media_id: str, name: str, path: Path) -> bool:
        digest = self.get_hash(media_id, name)
        return bool(digest) and path.exists() and file_sha256(path) == digest


# ------------------------------------------------------------------ layout


@dataclass(frozen=True, slots=True)
class RunPaths:
    root: Path

    @property
    def originals(self) -> Path:
        return self.root / "audio" / "original"

    @property
    def full(self) -> Path:
        return self.root / "audio" / "full"

    @property
    def segments(self) -> Path:
        return self.root / "audio" / "segments"

    @property
    def timelines(self) -> Path:
        return self.root / "timelines"

    @property
    def plans(self) -> Path:
        return self.root / "plans"

    @property
    def review_log(self) -> Path:
        return self.root / "review.jsonl"

    @property
    def ledger(self) -> Path:
        return self.root / "ledger.json"

    @property
    def manifest_full(self) -> Path:
        return self.root / "manifest_full.json"

    @property
    def manifest_segments(self) -> Path:
        return self.root / "manifest_segments.json"

    def ensure(self) -> None:
        for p in (self.originals, self.full, self.segments, self.timelines, self.plans):
            p.mkdir(parents=True, exist_ok=True)


# ------------------------------------------------------------------ planner backend


@dataclass(frozen=True, slots=True)
class HttpPlannerBackend:
    """Planner served over HTTP: POST {prompt} -> plan-set text.

    Accepts either a JSON body with a "text" field or a raw text body.
    """

    endpoint: str
    timeout: float = 60.0

    def plan(self, timeline: Timeline, budget: Budget) -> str:
        prompt = build_prompt(timeline, budget)
        response = httpx.post(self.endpoint, json={"prompt": prompt}, timeout=self.timeout)
        response.raise_for_status()
        try:
            body = response.json()
        except ValueError:
            return response.text
        if isinstance(body, dict) and isinstance(body.get("text"), str):
            return body["text"]
        return response.text


# ------------------------------------------------------------------ construct


def consistent_count(n_sources: int, share: float) -> int:
    """How many sources stay untouched; nearest achievable to the share."""
    if n_sources < 2:
        return 0
    k = int(n_sources * share + 0.5)
    return min(max(k, 1), n_sources - 1)


def choose_consistent(media_ids: list[str], share: float, seed: int) -> set[str]:
    k = consistent_count(len(media_ids), share)
    rng = random.Random(derive_seed(seed, "consistent-share"))
    return set(rng.sample(sorted(media_ids), k))


def _annotation_for(plan: InjectionPlan) -> EventAnnotation:
    return EventAnnotation(
        interval=plan.interval,
        category=plan.injection_type,
        segment_class=plan.class_label,
        reasoning=plan.reasoning,
        sub_category=plan.sub_category,
    )


def _plan_item_id(media_id: str, index: int) -> str:
    return f"{media_id}:plan{index:02d}"


class _Runner:
    """Internal state for one construct invocation."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.paths = RunPaths(Path(config.output_root))
        self.paths.ensure()
        self.ledger = RunLedger.load(self.paths.ledger)
        previous_seed = self.ledger.meta.get("seed")
        if previous_seed is not None and previous_seed != config.seed and self.ledger.media:
            raise PipelineError(
                f"output tree {self.paths.root} was built with seed {previous_seed}; "
                f"resume with that seed or start a clean tree"
            )
        self.ledger.meta["seed"] = config.seed
        self.queue = ReviewQueue(
            self.paths.review_log,
            batch_size=config.batch_size,
            flag_threshold=config.flag_threshold,
        )
        self.sources = self._index_sources()
        self.ordered = sorted(self.sources)
        self.consistent_ids = choose_consistent(
            self.ordered, config.consistent_share, config.seed
        )
        self.injector_backends = self._build_injector_backends()

    def _index_sources(self) -> dict[str, Path]:
        out: dict[str, Path] = {}
        for raw in self.config.sources:
            path = Path(raw)
            if not path.exists():
                raise PipelineError(f"source media {path} does not exist")
            if path.stem in out:
                raise PipelineError(f"duplicate media id {path.stem!r} in sources")
            out[path.stem] = path
        return out

    def _build_injector_backends(self) -> InjectorBackends:
        separation: SeparationBackend
        tts: TTSBackend
        if self.config.separation_command:
            separation = SubprocessSeparation(self.config.separation_command)
        else:
            separation = BandpassSeparation()
        if self.config.tts_command:
            tts = SubprocessTTS(self.config.tts_command)
        else:
            tts = BabbleTTS()
        if self.config.sound_library:
            library = SoundLibrary.from_directory(self.config.sound_library)
        else:
            library = SoundLibrary.builtin()
        return InjectorBackends(separation=separation, tts=tts, library=library)

    # ---------------- per-media stages (pool-safe: distinct paths, no queue)

    def _face_marks(self, source: Path) -> FaceMarks:
        if self.config.asd_command:
            detector = SubprocessDetector(self.config.asd_command, kind="asd")
            marks = detector.detect(source)
            return FaceMarks(marks.intervals)
        return sidecar_face_marks(source)

    def _speech_marks(self, source: Path) -> Marks | None:
        if self.config.vad_command:
            detector = SubprocessDetector(self.config.vad_command, kind="vad")
            return detector.detect(source)
        return None

    def prepare_media(self, media_id: str) -> None:
        """Copy, segment and (for injection candidates) plan one source."""
        cfg = self.config
        source = self.sources[media_id]
        original_path = self.paths.originals / f"{media_id}.wav"
        timeline_path = self.paths.timelines / f"{media_id}.json"

        need_audio = not (
            self.ledger.fresh(media_id, "original", original_path)
            and self.ledger.fresh(media_id, "timeline", timeline_path)
        )
        if need_audio:
            audio = read_wav(source)
            write_wav(original_path, audio)
            self.ledger.set_hash(media_id, "original", file_sha256(original_path))
            faces = self._face_marks(source)
            speech = self._speech_marks(source)
            if speech is not None:
                raw = assign_classes(speech, faces, audio.duration)
                timeline = fuse_and_smooth(raw, cfg.smoothing)
                timeline = Timeline(media_id, timeline.duration_ms, timeline.segments)
            else:
                timeline = segment_media(
                    audio,
                    faces,
                    media_id=media_id,
                    vad_frame=cfg.vad_frame,
                    vad_threshold_db=cfg.vad_threshold_db,
                    vad_hangover=cfg.vad_hangover,
                    smoothing=cfg.smoothing,
                )
            timeline_path.write_text(
                json.dumps(timeline.to_json(), indent=2), encoding="utf-8"
            )
            self.ledger.set_hash(media_id, "timeline", file_sha256(timeline_path))
            self.ledger.state(media_id)["duration_ms"] = audio.duration_ms
        else:
            timeline = Timeline.from_json(
                json.loads(timeline_path.read_text(encoding="utf-8"))
            )
        self.ledger.set_stage(media_id, "segmented", "done")

        if media_id in self.consistent_ids:
            self.ledger.set_stage(media_id, "planned", "skipped")
            return

        plan_path = self.paths.plans / f"{media_id}.json"
        if not self.ledger.fresh(media_id, "plan", plan_path):
            plan_set = self._plan_timeline(media_id, timeline)
            plan_path.write_text(serialize_plan_set(plan_set), encoding="utf-8")
            self.ledger.set_hash(media_id, "plan", file_sha256(plan_path))
        self.ledger.set_stage(media_id, "planned", "done")

    def _plan_timeline(self, media_id: str, timeline: Timeline) -> PlanSet:
        budget = self.config.budget_for(timeline.duration)
        seed = derive_seed(self.config.seed, media_id, "plan")
        if self.config.llm_endpoint:
            backend = HttpPlannerBackend(self.config.llm_endpoint)
            try:
                plan_set = parse_backend_output(backend.plan(timeline, budget))
                violations = validate_plan_set(plan_set, timeline)
                if violations:
                    raise PlanParseError(
                        "; ".join(v.message for v in violations[:3])
                    )
                return replace(plan_set, media_id=media_id)
            except (PlanParseError, httpx.HTTPError) as exc:
                self.ledger.add_note(
                    media_id, f"planner backend unusable ({exc}); procedural fallback"
                )
        return plan_fallback(timeline, budget, seed)

    def load_plans(self, media_id: str) -> PlanSet:
        plan_path = self.paths.plans / f"{media_id}.json"
        return parse_backend_output(plan_path.read_text(encoding="utf-8"))

    # ---------------- review gate (main thread: log order must be stable)

    def enqueue_strategies(self, media_id: str, plan_set: PlanSet) -> None:
        for index, plan in enumerate(plan_set.plans):
            item_id = _plan_item_id(media_id, index)
            try:
                self.queue.get(item_id)
                continue
            except UnknownItemError:
                pass
            payload = {
                "media_id": media_id,
                "media": f"audio/original/{media_id}.wav",
                "window": {"start": plan.interval.start, "end": plan.interval.end},
                "plan": plan.to_json(),
            }
            self.queue.enqueue(
                ReviewItem(
                    item_id=item_id,
                    kind="strategy",
                    payload=payload,
                    category=plan.injection_type.name,
                )
            )

    def review_status(self, media_id: str, plan_set: PlanSet) -> str:
        if not plan_set.plans:
            return "rejected"
        statuses = [
            self.queue.get(_plan_item_id(media_id, i)).status
            for i in range(len(plan_set.plans))
        ]
        if any(s == "pending" for s in statuses):
            return "pending"
        if any(s == "approved" for s in statuses):
            return "approved"
        return "rejected"

    def approved_plans(self, media_id: str, plan_set: PlanSet) -> list[InjectionPlan]:
        released = {item.item_id for item in self.queue.dispatchable("strategy")}
        return [
            plan
            for index, plan in enumerate(plan_set.plans)
            if _plan_item_id(media_id, index) in released
        ]

    # ---------------- injection + clip pairing (pool-safe)

    def inject_media(self, media_id: str, plans: list[InjectionPlan]) -> None:
        full_path = self.paths.full / f"{media_id}.wav"
        ordered = sorted(plans, key=lambda p: p.interval.start_ms)
        clip_jobs = [
            (f"{media_id}__seg{k:02d}", plan.interval) for k, plan in enumerate(ordered)
        ]
        stale_clip = any(
            not (
                self.ledger.fresh(media_id, f"clip:{cid}:inc", self.paths.segments / f"{cid}_inc.wav")
                and self.ledger.fresh(media_id, f"clip:{cid}:orig", self.paths.segments / f"{cid}_orig.wav")
            )
            for cid, _ in clip_jobs
        )
        if self.ledger.fresh(media_id, "full", full_path) and not stale_clip:
            self.ledger.set_stage(media_id, "injected", "done")
            return

        original = read_wav(self.paths.originals / f"{media_id}.wav")
        work = original
        clipped = 0
        for index, plan in enumerate(ordered):
            seed = derive_seed(self.config.seed, media_id, "inject", str(index))
            result = dispatch(work, plan, self.injector_backends, seed=seed)
            work = result.audio
            clipped += result.clipped_samples
        write_wav(full_path, work)
        self.ledger.set_hash(media_id, "full", file_sha256(full_path))
        if clipped:
            self.ledger.add_note(media_id, f"injection clipped {clipped} samples")

        for clip_id, window in clip_jobs:
            inc_path = self.paths.segments / f"{clip_id}_inc.wav"
            orig_path = self.paths.segments / f"{clip_id}_orig.wav"
            write_wav(inc_path, work.slice_ms(window.start_ms, window.end_ms))
            write_wav(orig_path, original.slice_ms(window.start_ms, window.end_ms))
            self.ledger.set_hash(media_id, f"clip:{clip_id}:inc", file_sha256(inc_path))
            self.ledger.set_hash(media_id, f"clip:{clip_id}:orig", file_sha256(orig_path))
        self.ledger.set_stage(media_id, "injected", "done")

    def passthrough_media(self, media_id: str) -> None:
        full_path = self.paths.full / f"{media_id}.wav"
        if not self.ledger.fresh(media_id, "full", full_path):
            audio = read_wav(self.paths.originals / f"{media_id}.wav")
            write_wav(full_path, audio)
            self.ledger.set_hash(media_id, "full", file_sha256(full_path))

    # ---------------- manifests

    def full_entry(self, media_id: str, plans: list[InjectionPlan]) -> ManifestEntry:
        duration_ms = int(self.ledger.state(media_id)["duration_ms"])
        events = tuple(
            _annotation_for(p) for p in sorted(plans, key=lambda p: p.interval.start_ms)
        )
        return ManifestEntry(
            media_id=media_id,
            duration_ms=duration_ms,
            is_inconsistent=bool(events),
            events=events,
        )

    def segment_entries(
        self, media_id: str, plans: list[InjectionPlan]
    ) -> list[ManifestEntry]:
        entries = []
        ordered = sorted(plans, key=lambda p: p.interval.start_ms)
        for k, plan in enumerate(ordered):
            clip_id = f"{media_id}__seg{k:02d}"
            dur = plan.interval.duration_ms
            event = EventAnnotation(
                interval=TimeInterval(0, dur),
                category=plan.injection_type,
                segment_class=plan.class_label,
                reasoning=plan.reasoning,
                sub_category=plan.sub_category,
            )
            entries.append(
                ManifestEntry(f"{clip_id}_inc", dur, True, events=(event,))
            )
            entries.append(ManifestEntry(f"{clip_id}_orig", dur, False))
        return entries


def run_construct(config: PipelineConfig) -> RunLedger:
    """Run (or resume) one construction pass; see the module docstring."""
    runner = _Runner(config)
    ledger = runner.ledger
    queue = runner.queue
    failed: set[str] = set()

    def guarded(stage: str, media_id: str, fn, *args) -> bool:
        try:
            fn(media_id, *args)
            return True
        except Exception as exc:  # per-item isolation: one bad file never kills the run
            ledger.add_error(media_id, f"{stage}: {exc}")
            ledger.state(media_id)["stages"][stage] = "failed"
            failed.add(media_id)
            return False

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        list(
            pool.map(
                lambda mid: guarded("segmented", mid, runner.prepare_media),
                runner.ordered,
            )
        )

    plan_sets: dict[str, PlanSet] = {}
    for media_id in runner.ordered:
        if media_id in failed or media_id in runner.consistent_ids:
            continue
        if ledger.stage(media_id, "planned") != "done":
            continue
        try:
            plan_sets[media_id] = runner.load_plans(media_id)
        except (OSError, PlanParseError) as exc:
            ledger.add_error(media_id, f"planned: stored plan unreadable: {exc}")
            failed.add(media_id)

    for media_id in runner.ordered:
        if media_id in plan_sets:
            runner.enqueue_strategies(media_id, plan_sets[media_id])
    if config.auto_approve:
        queue.auto_approve_pending()

    injectable: dict[str, list[InjectionPlan]] = {}
    for media_id, plan_set in plan_sets.items():
        if not plan_set.plans:
            ledger.set_stage(media_id, "reviewed", "skipped")
            ledger.add_note(
                media_id, "no feasible injection windows; excluded from the release"
            )
            continue
        status = runner.review_status(media_id, plan_set)
        ledger.set_stage(media_id, "reviewed", status)
        if status == "approved":
            plans = runner.approved_plans(media_id, plan_set)
            if plans:
                injectable[media_id] = plans
            else:
                ledger.add_note(
                    media_id, "approved strategies held back by a failing review batch"
                )
        elif status == "rejected":
            ledger.add_note(
                media_id, "all strategies rejected; excluded from the release"
            )

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        list(
            pool.map(
                lambda mid: guarded("injected", mid, runner.inject_media, injectable[mid]),
                sorted(injectable),
            )
        )
        list(
            pool.map(
                lambda mid: guarded("injected", mid, runner.passthrough_media),
                [
                    mid
                    for mid in runner.ordered
                    if mid in runner.consistent_ids and mid not in failed
                ],
            )
        )

    full_entries: list[ManifestEntry] = []
    segment_entries: list[ManifestEntry] = []
    for media_id in runner.ordered:
        if media_id in failed:
            continue
        if media_id in runner.consistent_ids:
            ledger.set_stage(media_id, "reviewed", "skipped")
            ledger.state(media_id)["stages"]["injected"] = "skipped"
            full_entries.append(runner.full_entry(media_id, []))
            ledger.set_stage(media_id, "annotated", "done")
            continue
        if media_id not in injectable or ledger.stage(media_id, "injected") != "done":
            continue
        plans = injectable[media_id]
        full_entries.append(runner.full_entry(media_id, plans))
        segment_entries.extend(runner.segment_entries(media_id, plans))
        ledger.set_stage(media_id, "annotated", "done")

        item_id = f"{media_id}:video"
        try:
            queue.get(item_id)
        except UnknownItemError:
            events = [_annotation_for(p).to_json() for p in plans]
            queue.enqueue(
                ReviewItem(
                    item_id=item_id,
                    kind="video",
                    payload={
                        "media_id": media_id,
                        "media": f"audio/full/{media_id}.wav",
                        "events": events,
                    },
                    category=plans[0].injection_type.name,
                )
            )
    if config.auto_approve:
        queue.auto_approve_pending()

    full_manifest = DatasetManifest(tuple(full_entries))
    seg_manifest = DatasetManifest(tuple(segment_entries))
    for name, manifest in (("full", full_manifest), ("segments", seg_manifest)):
        violations = validate_manifest(manifest)
        if violations:
            raise PipelineError(
                f"constructed {name} manifest is invalid: {violations[0].message}"
            )
    full_manifest.save(runner.paths.manifest_full)
    seg_manifest.save(runner.paths.manifest_segments)
    ledger.save()
    return ledger


# ------------------------------------------------------------------ evaluate


def truths_from_manifest(
    manifest: DatasetManifest, task: str
) -> list[SegmentTruth] | list[VideoTruth]:
    if task == "segment":
        seg_truths: list[SegmentTruth] = []
        for entry in manifest.entries:
            if entry.is_inconsistent:
                if len(entry.events) != 1:
                    raise PipelineError(
                        f"{entry.media_id}: segment-task entries need exactly one "
                        f"event, found {len(entry.events)}"
                    )
                event = entry.events[0]
                seg_truths.append(
                    SegmentTruth(entry.media_id, 1, event.category, event.reasoning)
                )
            else:
                seg_truths.append(SegmentTruth(entry.media_id, 0, None, ""))
        return seg_truths
    if task == "full":
        vid_truths: list[VideoTruth] = []
        for entry in manifest.entries:
            events = tuple(
                GroundedEvent(ev.interval, ev.reasoning, ev.category)
                for ev in entry.events
            )
            vid_truths.append(
                VideoTruth(entry.media_id, int(entry.is_inconsistent), events)
            )
        return vid_truths
    raise PipelineError(f"unknown task {task!r}; expected 'segment' or 'full'")


def run_evaluate(
    manifest: DatasetManifest,
    responses: Mapping[str, str],
    task: str,
    config: MetricConfig = MetricConfig(),
) -> MetricReport:
    """Score raw model responses against a manifest; absent ids count as abstentions."""
    truths = truths_from_manifest(manifest, task)
    if task == "segment":
        return evaluate_segment_responses(truths, responses, config)
    return evaluate_fullvideo_responses(truths, responses, config)


def report_rows(report: MetricReport) -> list[tuple[str, object]]:
    """Flatten a report into (name, value) rows for delimited output."""
    payload = report.to_json()
    rows: list[tuple[str, object]] = []
    for key, value in payload.items():
        if key == "counts":
            rows.extend((f"counts.{k}", v) for k, v in value.items())
        elif key == "recall_at":
            rows.extend((f"recall_at.{k}", v) for k, v in (value or {}).items())
        elif key == "flags":
            rows.append(("flags", ";".join(value)))
        else:
            rows.append((key, value))
    return rows


def write_report_files(
    report: MetricReport, out_dir: str | Path, figures: bool = True
) -> list[Path]:
    """Write report.json + report.csv and, optionally, rendered figures."""
    import csv

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / "report.json"
    json_path.write_text(json.dumps(report.to_json(), indent=2), encoding="utf-8")
    csv_path = out / "report.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        writer.writerows(report_rows(report))
    written = [json_path, csv_path]
    if figures:
        from .figures import render_report_figures

        written.extend(render_report_figures(report, out))
    return written
