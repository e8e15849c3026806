import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from avforge.cli import main
from avforge.manifest import DatasetManifest
from avforge.planner import parse_backend_output

from conftest import build_source_set, build_source_wav


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    build_source_wav(root / "clip.wav", 1, duration=24.0)
    return root


def test_help_lists_subcommands(runner):
    result = runner.invoke(main, ["--help"])
    assert result.exit_code == 0
    for name in ("segment", "plan", "review-serve", "inject", "construct", "split", "evaluate"):
        assert name in result.output


def test_segment_then_plan_then_inject(runner, workdir):
    timeline_path = workdir / "timeline.json"
    result = runner.invoke(
        main,
        ["segment", "--input", str(workdir / "clip.wav"), "--output", str(timeline_path)],
    )
    assert result.exit_code == 0, result.output
    assert "segments over 24.0s" in result.output
    timeline = json.loads(timeline_path.read_text())
    assert timeline["media_id"] == "clip"
    assert len(timeline["segments"]) == 3

    plan_path = workdir / "plan.json"
    result = runner.invoke(
        main,
        ["plan", "--timeline", str(timeline_path), "--output", str(plan_path), "--seed", "5"],
    )
    assert result.exit_code == 0, result.output
    plan_set = parse_backend_output(plan_path.read_text())
    assert plan_set.plans
    assert "planned injections" in result.output

    out_wav = workdir / "injected.wav"
    result = runner.invoke(
        main,
        [
            "inject",
            "--input",
            str(workdir / "clip.wav"),
            "--plan",
            str(plan_path),
            "--output",
            str(out_wav),
            "--seed",
            "5",
        ],
    )
    assert result.exit_code == 0, result.output
    assert out_wav.exists()
    assert out_wav.read_bytes() != (workdir / "clip.wav").read_bytes()
    assert "applied" in result.output


def test_plan_explicit_budget_must_be_paired(runner, workdir):
    result = runner.invoke(
        main,
        [
            "plan",
            "--timeline",
            str(workdir / "timeline.json"),
            "--output",
            str(workdir / "p2.json"),
            "--min-injections",
            "2",
        ],
    )
    assert result.exit_code != 0
    assert "go together" in result.output


def test_construct_and_evaluate(runner, tmp_path):
    sources = build_source_set(tmp_path / "media", 3)
    config_path = tmp_path / "run.json"
    config_path.write_text(
        json.dumps(
            {
                "sources": [str(p) for p in sources],
                "output_root": str(tmp_path / "out"),
                "seed": 11,
                "workers": 2,
            }
        )
    )
    result = runner.invoke(main, ["construct", "--config", str(config_path), "--auto-approve"])
    assert result.exit_code == 0, result.output
    assert "manifest_full.json" in result.output
    assert "reviewed=approved" in result.output

    manifest_path = tmp_path / "out" / "manifest_full.json"
    manifest = DatasetManifest.load(manifest_path)
    predictions = tmp_path / "preds.jsonl"
    with open(predictions, "w") as fh:
        for entry in manifest.entries:
            if entry.is_inconsistent:
                lines = ["Yes"] + [
                    f"from {ev.interval.start:.3f}s to {ev.interval.end:.3f}s, {ev.reasoning}"
                    for ev in entry.events
                ]
                text = "\n".join(lines)
            else:
                text = "No"
            fh.write(json.dumps({"id": entry.media_id, "raw_text": text}) + "\n")

    report_dir = tmp_path / "report"
    result = runner.invoke(
        main,
        [
            "evaluate",
            "--manifest",
            str(manifest_path),
            "--predictions",
            str(predictions),
            "--task",
            "full",
            "--output-dir",
            str(report_dir),
        ],
    )
    assert result.exit_code == 0, result.output
    assert "accuracy=100.0" in result.output
    assert (report_dir / "report.json").exists()
    assert (report_dir / "report.csv").exists()
    assert (report_dir / "report_scores.png").exists()

    result = runner.invoke(
        main,
        [
            "evaluate",
            "--manifest",
            str(manifest_path),
            "--predictions",
            str(predictions),
            "--task",
            "full",
            "--output-dir",
            str(tmp_path / "report2"),
            "--no-figures",
        ],
    )
    assert result.exit_code == 0, result.output
    assert not (tmp_path / "report2" / "report_scores.png").exists()


def test_construct_seed_override_new_tree(runner, tmp_path):
    sources = build_source_set(tmp_path / "media", 2)
    config_path = tmp_path / "run.json"
    config_path.write_text(
        json.dumps(
            {
                "sources": [str(p) for p in sources],
                "output_root": str(tmp_path / "out"),
                "seed": 1,
            }
        )
    )
    result = runner.invoke(
        main, ["construct", "--config", str(config_path), "--auto-approve", "--seed", "2"]
    )
    assert result.exit_code == 0, result.output
    ledger = json.loads((tmp_path / "out" / "ledger.json").read_text())
    assert ledger["meta"]["seed"] == 2


def test_split_command(runner, tmp_path):
    from avforge.manifest import EventAnnotation, ManifestEntry
    from avforge.taxonomy import InconsistencyCategory, SegmentClass, TimeInterval

    entries = []
    for k in range(40):
        if k % 4 == 0:
            entries.append(ManifestEntry(f"m{k:02d}", 45_000, False))
        else:
            ev = EventAnnotation(
                TimeInterval(1_000, 9_000),
                InconsistencyCategory.BACKGROUND_SOUND,
                SegmentClass.SCENIC,
                "a siren rises with nothing on screen to make it",
            )
            entries.append(ManifestEntry(f"m{k:02d}", 45_000, True, events=(ev,)))
    manifest_path = tmp_path / "m.json"
    DatasetManifest(tuple(entries)).save(manifest_path)

    result = runner.invoke(
        main,
        [
            "split",
            "--manifest",
            str(manifest_path),
            "--ratio",
            "0.25",
            "--seed",
            "3",
            "--output-dir",
            str(tmp_path / "splits"),
        ],
    )
    assert result.exit_code == 0, result.output
    train = DatasetManifest.load(tmp_path / "splits" / "manifest_train.json")
    test = DatasetManifest.load(tmp_path / "splits" / "manifest_test.json")
    assert len(test.entries) == 10 and len(train.entries) == 30
    assert "30 train / 10 test" in result.output


def test_review_serve_wires_up_uvicorn(runner, tmp_path, monkeypatch):
    captured = {}

    def fake_run(app, host, port, log_level):
        captured["host"] = host
        captured["port"] = port
        captured["routes"] = {r.path for r in app.router.routes}

    import uvicorn

    monkeypatch.setattr(uvicorn, "run", fake_run)
    result = runner.invoke(
        main,
        ["review-serve", "--log", str(tmp_path / "review.jsonl"), "--port", "8123"],
    )
    assert result.exit_code == 0, result.output
    assert captured["port"] == 8123
    assert "/queue" in captured["routes"]
    assert "review queue of 0 items" in result.output


def test_evaluate_rejects_invalid_manifest(runner, tmp_path):
    bad = {
        "entries": [
            {
                "media_id": "m0",
                "duration": 10.0,
                "is_inconsistent": True,
                "split": "",
                "events": [],
            }
        ]
    }
    manifest_path = tmp_path / "bad.json"
    manifest_path.write_text(json.dumps(bad))
    predictions = tmp_path / "p.jsonl"
    predictions.write_text(json.dumps({"id": "m0", "raw_text": "No"}) + "\n")
    result = runner.invoke(
        main,
        [
            "evaluate",
            "--manifest",
            str(manifest_path),
            "--predictions",
            str(predictions),
            "--task",
            "full",
            "--output-dir",
            str(tmp_path / "r"),
        ],
    )
    assert result.exit_code != 0
    assert "manifest invalid" in result.output
