import json
from pathlib import Path

import httpx
import pytest

from avforge.manifest import DatasetManifest, validate_manifest
from avforge.pipeline import (
    HttpPlannerBackend,
    PipelineConfig,
    PipelineError,
    RunLedger,
    RunPaths,
    choose_consistent,
    consistent_count,
    derive_seed,
    file_sha256,
    run_construct,
    run_evaluate,
    truths_from_manifest,
    write_report_files,
)
from avforge.review import ReviewQueue

from conftest import build_source_set, build_source_wav


def make_config(sources, out_root, **overrides):
    base = dict(
        sources=tuple(str(p) for p in sources),
        output_root=str(out_root),
        seed=7,
        workers=2,
        auto_approve=True,
    )
    base.update(overrides)
    return PipelineConfig(**base)


# ------------------------------------------------------------------ config


def test_config_json_round_trip(tmp_path):
    src = build_source_wav(tmp_path / "a.wav", 1)
    cfg = make_config([src], tmp_path / "out", llm_endpoint="http://x/plan")
    again = PipelineConfig.from_json(cfg.to_json())
    assert again == cfg


def test_config_from_file_resolves_relative_paths(tmp_path):
    (tmp_path / "media").mkdir()
    build_source_wav(tmp_path / "media" / "a.wav", 1)
    build_source_wav(tmp_path / "media" / "b.wav", 2)
    config_path = tmp_path / "run.json"
    config_path.write_text(
        json.dumps({"source_dir": "media", "output_root": "out", "seed": 3})
    )
    cfg = PipelineConfig.from_file(config_path)
    assert cfg.output_root == str(tmp_path / "out")
    assert [Path(s).name for s in cfg.sources] == ["a.wav", "b.wav"]
    assert all(Path(s).is_absolute() for s in cfg.sources)
    assert cfg.seed == 3


def test_config_from_file_rejects_bad_input(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(PipelineError, match="not valid JSON"):
        PipelineConfig.from_file(bad)
    empty = tmp_path / "empty.json"
    empty.write_text("{}")
    with pytest.raises(PipelineError, match="output_root"):
        PipelineConfig.from_file(empty)


@pytest.mark.parametrize(
    "overrides",
    [
        {"sources": ()},
        {"workers": 0},
        {"consistent_share": 0.0},
        {"consistent_share": 1.0},
        {"flag_threshold": 0},
        {"flag_threshold": 50},
        {"budget_min": 2, "budget_max": 0},
        {"budget_min": 4, "budget_max": 2},
    ],
)
def test_config_validation(tmp_path, overrides):
    params = dict(sources=("a.wav",), output_root=str(tmp_path / "out"))
    params.update(overrides)
    with pytest.raises(PipelineError):
        PipelineConfig(**params)


# ------------------------------------------------------------------ ledger


def test_ledger_round_trip(tmp_path):
    path = tmp_path / "ledger.json"
    ledger = RunLedger.load(path)
    ledger.set_stage("m1", "segmented", "done")
    ledger.set_hash("m1", "timeline", "abc")
    ledger.add_error("m1", "oops")
    ledger.add_error("m1", "oops")  # deduplicated
    ledger.meta["seed"] = 9
    ledger.save()

    again = RunLedger.load(path)
    assert again.stage("m1", "segmented") == "done"
    assert again.get_hash("m1", "timeline") == "abc"
    assert again.state("m1")["errors"] == ["oops"]
    assert again.meta["seed"] == 9


def test_ledger_refuses_unreviewed_injection(tmp_path):
    ledger = RunLedger()
    ledger.set_stage("m1", "segmented", "done")
    with pytest.raises(PipelineError, match="reviewed=approved"):
        ledger.set_stage("m1", "injected", "done")
    ledger.set_stage("m1", "reviewed", "approved")
    ledger.set_stage("m1", "injected", "done")
    assert ledger.stage("m1", "injected") == "done"


def test_ledger_rejects_unknown_stage():
    with pytest.raises(PipelineError, match="unknown stage"):
        RunLedger().set_stage("m1", "uploaded", "done")


def test_ledger_freshness(tmp_path):
    target = tmp_path / "x.bin"
    target.write_bytes(b"hello")
    ledger = RunLedger()
    assert not ledger.fresh("m1", "x", target)  # no recorded hash yet
    ledger.set_hash("m1", "x", file_sha256(target))
    assert ledger.fresh("m1", "x", target)
    target.write_bytes(b"tampered")
    assert not ledger.fresh("m1", "x", target)


def test_derive_seed_is_stable_and_distinct():
    a = derive_seed(7, "clip01", "plan")
    assert a == derive_seed(7, "clip01", "plan")
    assert a != derive_seed(7, "clip01", "inject")
    assert a != derive_seed(8, "clip01", "plan")
    assert 0 <= a < 2**48


# ------------------------------------------------------------------ allocation


@pytest.mark.parametrize(
    "n,expected",
    [(1, 0), (2, 1), (3, 1), (4, 1), (5, 1), (6, 2), (8, 2), (10, 3), (12, 3), (20, 5)],
)
def test_consistent_count(n, expected):
    assert consistent_count(n, 0.25) == expected


def test_choose_consistent_deterministic():
    ids = [f"m{k}" for k in range(8)]
    first = choose_consistent(ids, 0.25, 7)
    assert first == choose_consistent(ids, 0.25, 7)
    assert len(first) == 2
    assert first <= set(ids)
    assert first != choose_consistent(ids, 0.25, 8) or True  # other seeds may collide


# ------------------------------------------------------------------ construct


@pytest.fixture(scope="module")
def constructed(tmp_path_factory):
    root = tmp_path_factory.mktemp("construct")
    sources = build_source_set(root / "media", 3)
    config = make_config(sources, root / "out")
    ledger = run_construct(config)
    return config, ledger


def test_construct_outputs(constructed):
    config, ledger = constructed
    paths = RunPaths(Path(config.output_root))

    full = DatasetManifest.load(paths.manifest_full)
    segments = DatasetManifest.load(paths.manifest_segments)
    assert validate_manifest(full) == []
    assert validate_manifest(segments) == []

    inconsistent = [e for e in full.entries if e.is_inconsistent]
    consistent = [e for e in full.entries if not e.is_inconsistent]
    assert len(inconsistent) == 2 and len(consistent) == 1

    for entry in inconsistent:
        assert 2 <= len(entry.events) <= 5
        assert (paths.full / f"{entry.media_id}.wav").exists()
        original = (paths.originals / f"{entry.media_id}.wav").read_bytes()
        released = (paths.full / f"{entry.media_id}.wav").read_bytes()
        assert released != original
    passthrough = consistent[0]
    assert (paths.full / f"{passthrough.media_id}.wav").read_bytes() == (
        paths.originals / f"{passthrough.media_id}.wav"
    ).read_bytes()

    n_events = sum(len(e.events) for e in inconsistent)
    seg_inc = [e for e in segments.entries if e.is_inconsistent]
    seg_orig = [e for e in segments.entries if not e.is_inconsistent]
    assert len(seg_inc) == len(seg_orig) == n_events
    for entry in segments.entries:
        assert (paths.segments / f"{entry.media_id}.wav").exists()
    for entry in seg_inc:
        assert len(entry.events) == 1
        ev = entry.events[0]
        assert ev.interval.start_ms == 0 and ev.interval.end_ms == entry.duration_ms


def test_construct_ledger_stages(constructed):
    config, ledger = constructed
    assert ledger.media_ids() == ["clip00", "clip01", "clip02"]
    for media_id in ledger.media_ids():
        state = ledger.state(media_id)
        assert state["errors"] == []
        assert state["stages"]["segmented"] == "done"
        assert state["stages"]["annotated"] == "done"
        if state["stages"]["planned"] == "skipped":
            assert state["stages"]["injected"] == "skipped"
        else:
            assert state["stages"]["reviewed"] == "approved"
            assert state["stages"]["injected"] == "done"


def test_construct_review_log(constructed):
    config, _ = constructed
    paths = RunPaths(Path(config.output_root))
    queue = ReviewQueue(paths.review_log)
    strategies = queue.items(kind="strategy")
    videos = queue.items(kind="video")
    assert strategies and all(s.status == "approved" for s in strategies)
    assert len(videos) == 2 and all(v.status == "approved" for v in videos)
    for item in strategies:
        assert item.payload["media"].startswith("audio/original/")
        assert item.payload["plan"]["injection_type"] == item.category


def test_construct_rerun_is_byte_identical(constructed):
    config, _ = constructed
    root = Path(config.output_root)

    def snapshot():
        return {
            str(p.relative_to(root)): file_sha256(p)
            for p in sorted(root.rglob("*"))
            if p.is_file()
        }

    before = snapshot()
    run_construct(config)
    assert snapshot() == before


def test_construct_seed_change_on_existing_tree_fails(constructed):
    config, _ = constructed
    from dataclasses import replace

    with pytest.raises(PipelineError, match="seed"):
        run_construct(replace(config, seed=config.seed + 1))


def test_construct_isolates_bad_source(tmp_path):
    sources = build_source_set(tmp_path / "media", 3)
    broken = tmp_path / "media" / "broken.wav"
    broken.write_bytes(b"RIFFnot really a wav")
    config = make_config(sources + [broken], tmp_path / "out")
    ledger = run_construct(config)

    assert ledger.state("broken")["stages"]["segmented"] == "failed"
    assert ledger.state("broken")["errors"]
    full = DatasetManifest.load(RunPaths(Path(config.output_root)).manifest_full)
    assert {e.media_id for e in full.entries} <= {"clip00", "clip01", "clip02"}
    assert len(full.entries) == 3


def test_construct_gated_flow(tmp_path):
    sources = build_source_set(tmp_path / "media", 3)
    config = make_config(sources, tmp_path / "out", auto_approve=False, flag_threshold=10)
    ledger = run_construct(config)
    paths = RunPaths(Path(config.output_root))

    planned = [m for m in ledger.media_ids() if ledger.stage(m, "planned") == "done"]
    held = [m for m in ledger.media_ids() if ledger.stage(m, "planned") == "skipped"]
    assert len(planned) == 2 and len(held) == 1
    for media_id in planned:
        assert ledger.stage(media_id, "reviewed") == "pending"
        assert ledger.stage(media_id, "injected") == ""
    full = DatasetManifest.load(paths.manifest_full)
    assert [e.media_id for e in full.entries] == held  # only the passthrough so far

    # Approve everything for the first planned item; reject one strategy of the
    # second and approve the rest.
    queue = ReviewQueue(paths.review_log, flag_threshold=10)
    first, second = planned
    first_items = [i for i in queue.items(kind="strategy") if i.item_id.startswith(first)]
    second_items = [i for i in queue.items(kind="strategy") if i.item_id.startswith(second)]
    for item in first_items:
        queue.decide(item.item_id, "approve", reviewer="r1")
    queue.decide(second_items[0].item_id, "reject", notes="bad window", reviewer="r1")
    for item in second_items[1:]:
        queue.decide(item.item_id, "approve", reviewer="r1")

    ledger = run_construct(config)
    assert ledger.stage(first, "reviewed") == "approved"
    assert ledger.stage(second, "reviewed") == "approved"
    full = DatasetManifest.load(paths.manifest_full)
    by_id = {e.media_id: e for e in full.entries}
    assert set(by_id) == set(planned) | set(held)
    assert len(by_id[first].events) == len(first_items)
    assert len(by_id[second].events) == len(second_items) - 1  # rejected one dropped


def test_construct_failing_batch_holds_everything(tmp_path):
    sources = build_source_set(tmp_path / "media", 3)
    config = make_config(sources, tmp_path / "out", auto_approve=False)
    ledger = run_construct(config)
    paths = RunPaths(Path(config.output_root))

    queue = ReviewQueue(paths.review_log)
    items = queue.items(kind="strategy")
    assert len(items) >= 4
    for item in items[:3]:  # default threshold: three flags fail the batch
        queue.decide(item.item_id, "reject", notes="no", reviewer="r1")
    for item in items[3:]:
        queue.decide(item.item_id, "approve", reviewer="r1")

    ledger = run_construct(config)
    planned = [m for m in ledger.media_ids() if ledger.stage(m, "planned") == "done"]
    for media_id in planned:
        assert ledger.stage(media_id, "injected") != "done"
    inconsistent = [
        e
        for e in DatasetManifest.load(paths.manifest_full).entries
        if e.is_inconsistent
    ]
    assert inconsistent == []
    assert any(
        "held back" in note or "rejected" in note
        for m in planned
        for note in ledger.state(m)["notes"]
    )


# ------------------------------------------------------------------ planner backend


class _FakeResponse:
    def __init__(self, payload=None, text="", status=200):
        self._payload = payload
        self.text = text if text else json.dumps(payload)
        self.status_code = status

    def raise_for_status(self):
        if self.status_code >= 400:
            raise httpx.HTTPError(f"status {self.status_code}")

    def json(self):
        if self._payload is None:
            raise ValueError("not json")
        return self._payload


def test_http_planner_backend_text_field(monkeypatch):
    from avforge.planner import default_budget, plan_fallback
    from avforge.segmenter import segment_media, sidecar_face_marks
    from avforge.audio import white_noise

    calls = {}

    def fake_post(url, json=None, timeout=None):
        calls["url"] = url
        calls["body"] = json
        return _FakeResponse(payload={"text": "PLAN TEXT"})

    monkeypatch.setattr(httpx, "post", fake_post)
    timeline = segment_media(white_noise(8.0, channels=2), sidecar_face_marks("x.wav"), "m")
    backend = HttpPlannerBackend("http://planner.test/v1")
    assert backend.plan(timeline, default_budget(8.0)) == "PLAN TEXT"
    assert calls["url"] == "http://planner.test/v1"
    assert "prompt" in calls["body"] and "8.0" in calls["body"]["prompt"]


def test_http_planner_backend_raw_body(monkeypatch):
    monkeypatch.setattr(httpx, "post", lambda *a, **k: _FakeResponse(text="raw text"))
    from avforge.audio import white_noise
    from avforge.planner import default_budget
    from avforge.segmenter import segment_media, sidecar_face_marks

    timeline = segment_media(white_noise(8.0, channels=2), sidecar_face_marks("x.wav"), "m")
    assert HttpPlannerBackend("http://p/v1").plan(timeline, default_budget(8.0)) == "raw text"


def test_construct_falls_back_when_planner_endpoint_unusable(tmp_path, monkeypatch):
    monkeypatch.setattr(httpx, "post", lambda *a, **k: _FakeResponse(payload={"text": "not a plan"}))
    sources = build_source_set(tmp_path / "media", 2)
    config = make_config(sources, tmp_path / "out", llm_endpoint="http://planner.test/v1")
    ledger = run_construct(config)

    planned = [m for m in ledger.media_ids() if ledger.stage(m, "planned") == "done"]
    assert len(planned) == 1
    notes = ledger.state(planned[0])["notes"]
    assert any("procedural fallback" in n for n in notes)
    full = DatasetManifest.load(RunPaths(Path(config.output_root)).manifest_full)
    assert any(e.is_inconsistent and e.events for e in full.entries)


# ------------------------------------------------------------------ evaluate


def oracle_segment_responses(manifest):
    out = {}
    for entry in manifest.entries:
        if entry.is_inconsistent:
            ev = entry.events[0]
            out[entry.media_id] = f"Yes / {ev.category.name} / {ev.reasoning}"
        else:
            out[entry.media_id] = "No"
    return out


def oracle_fullvideo_responses(manifest):
    out = {}
    for entry in manifest.entries:
        if entry.is_inconsistent:
            lines = ["Yes"]
            for ev in entry.events:
                lines.append(
                    f"from {ev.interval.start:.3f}s to {ev.interval.end:.3f}s, {ev.reasoning}"
                )
            out[entry.media_id] = "\n".join(lines)
        else:
            out[entry.media_id] = "No"
    return out


def test_run_evaluate_segment_oracle(constructed):
    config, _ = constructed
    manifest = DatasetManifest.load(RunPaths(Path(config.output_root)).manifest_segments)
    report = run_evaluate(manifest, oracle_segment_responses(manifest), "segment")
    assert report.accuracy == 1.0
    assert report.type_accuracy == 1.0
    assert report.bleu4 == 1.0 and report.rouge_l == 1.0
    assert report.meteor >= 0.999
    assert report.flags == ()
    assert report.to_json()["accuracy"] == 100.0


def test_run_evaluate_fullvideo_oracle(constructed):
    config, _ = constructed
    manifest = DatasetManifest.load(RunPaths(Path(config.output_root)).manifest_full)
    report = run_evaluate(manifest, oracle_fullvideo_responses(manifest), "full")
    assert report.accuracy == 1.0
    assert report.miou == 1.0
    assert all(v == 1.0 for _, v in report.recall_at)
    assert report.soda_m >= 0.999


def test_run_evaluate_missing_predictions_flagged(constructed):
    config, _ = constructed
    manifest = DatasetManifest.load(RunPaths(Path(config.output_root)).manifest_full)
    responses = oracle_fullvideo_responses(manifest)
    responses.pop(manifest.entries[0].media_id)
    report = run_evaluate(manifest, responses, "full")
    assert "missing_predictions" in report.flags


def test_truths_from_manifest_rejects_bad_shapes():
    from avforge.manifest import EventAnnotation, ManifestEntry
    from avforge.taxonomy import InconsistencyCategory, SegmentClass, TimeInterval

    ev = EventAnnotation(
        TimeInterval(0, 5_000),
        InconsistencyCategory.TEMPORAL_SHIFT,
        SegmentClass.ACTIVE_SPEAKER,
        "off by a beat",
    )
    two_events = ManifestEntry(
        "m",
        20_000,
        True,
        events=(ev, EventAnnotation(TimeInterval(6_000, 11_000), ev.category, ev.segment_class, "again")),
    )
    with pytest.raises(PipelineError, match="exactly one"):
        truths_from_manifest(DatasetManifest((two_events,)), "segment")
    with pytest.raises(PipelineError, match="unknown task"):
        truths_from_manifest(DatasetManifest(()), "nope")


# ------------------------------------------------------------------ report files


def test_write_report_files_full(constructed, tmp_path):
    config, _ = constructed
    manifest = DatasetManifest.load(RunPaths(Path(config.output_root)).manifest_full)
    report = run_evaluate(manifest, oracle_fullvideo_responses(manifest), "full")
    written = write_report_files(report, tmp_path / "report")
    names = {p.name for p in written}
    assert names == {
        "report.json",
        "report.csv",
        "report_scores.png",
        "report_confusion.png",
        "report_grounding.png",
    }
    for path in written:
        assert path.exists() and path.stat().st_size > 0
        if path.suffix == ".png":
            assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    payload = json.loads((tmp_path / "report" / "report.json").read_text())
    assert payload["task"] == "full" and payload["accuracy"] == 100.0

    import csv

    with open(tmp_path / "report" / "report.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["metric", "value"]
    as_dict = {name: value for name, value in rows[1:]}
    assert float(as_dict["accuracy"]) == 100.0
    assert "counts.videos" in as_dict
    assert any(name.startswith("recall_at.") for name in as_dict)


def test_write_report_files_segment_without_figures(constructed, tmp_path):
    config, _ = constructed
    manifest = DatasetManifest.load(RunPaths(Path(config.output_root)).manifest_segments)
    report = run_evaluate(manifest, oracle_segment_responses(manifest), "segment")
    written = write_report_files(report, tmp_path / "r", figures=False)
    assert {p.name for p in written} == {"report.json", "report.csv"}

    with_figures = write_report_files(report, tmp_path / "rf", figures=True)
    assert {p.name for p in with_figures} == {
        "report.json",
        "report.csv",
        "report_scores.png",
        "report_confusion.png",
    }
