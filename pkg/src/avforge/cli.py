"""The `forge` command line: segmentation, planning, review, construction, scoring."""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click

from .audio import read_wav, write_wav
from .injectors import InjectorBackends, dispatch
from .backends import BabbleTTS, BandpassSeparation, SoundLibrary
from .manifest import DatasetManifest, split_manifest, validate_manifest
from .pipeline import (
    HttpPlannerBackend,
    PipelineConfig,
    run_construct,
    run_evaluate,
    write_report_files,
)
from .planner import (
    PlanParseError,
    default_budget,
    Budget,
    parse_backend_output,
    plan_fallback,
    serialize_plan_set,
    validate_plan_set,
)
from .responses import load_predictions_jsonl
from .review import ReviewQueue
from .segmenter import SmoothingConfig, segment_media, sidecar_face_marks
from .taxonomy import Timeline


@click.group()
@click.version_option(package_name="avforge", prog_name="forge")
def main() -> None:
    """Build and score audio-visual inconsistency benchmarks."""


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--output", "output_path", required=True, type=click.Path(dir_okay=False, writable=True))
@click.option("--media-id", default="", help="Identifier stored in the timeline; defaults to the input stem.")
@click.option("--vad-threshold", default=12.0, show_default=True, help="dB above the noise floor that counts as speech.")
@click.option("--vad-frame", default=0.03, show_default=True)
@click.option("--vad-hangover", default=5, show_default=True)
@click.option("--min-fragment", default=0.5, show_default=True, help="Shorter runs are merged into a neighbour (seconds).")
def segment(input_path, output_path, media_id, vad_threshold, vad_frame, vad_hangover, min_fragment):
    """Classify one WAV into timed activity segments."""
    source = Path(input_path)
    audio = read_wav(source)
    timeline = segment_media(
        audio,
        sidecar_face_marks(source),
        media_id=media_id or source.stem,
        vad_frame=vad_frame,
        vad_threshold_db=vad_threshold,
        vad_hangover=vad_hangover,
        smoothing=SmoothingConfig(min_fragment=min_fragment),
    )
    Path(output_path).write_text(json.dumps(timeline.to_json(), indent=2), encoding="utf-8")
    click.echo(
        f"{len(timeline.segments)} segments over {timeline.duration:.1f}s -> {output_path}"
    )


@main.command()
@click.option("--timeline", "timeline_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--output", "output_path", required=True, type=click.Path(dir_okay=False, writable=True))
@click.option("--seed", default=0, show_default=True)
@click.option("--endpoint", default="", help="Planner service URL; empty uses the procedural planner.")
@click.option("--min-injections", default=0, show_default="duration-derived")
@click.option("--max-injections", default=0, show_default="duration-derived")
def plan(timeline_path, output_path, seed, endpoint, min_injections, max_injections):
    """Draft an injection strategy set for a timeline."""
    timeline = Timeline.from_json(json.loads(Path(timeline_path).read_text(encoding="utf-8")))
    if (min_injections == 0) != (max_injections == 0):
        raise click.UsageError("--min-injections and --max-injections go together")
    budget = Budget(min_injections, max_injections) if min_injections else default_budget(timeline.duration)
    if endpoint:
        backend = HttpPlannerBackend(endpoint)
        try:
            plan_set = parse_backend_output(backend.plan(timeline, budget))
        except PlanParseError as exc:
            raise click.ClickException(f"planner response rejected: {exc}")
    else:
        plan_set = plan_fallback(timeline, budget, seed)
    violations = validate_plan_set(plan_set, timeline)
    for violation in violations:
        click.echo(f"violation: {violation.rule}: {violation.message}", err=True)
    Path(output_path).write_text(serialize_plan_set(plan_set), encoding="utf-8")
    click.echo(f"{len(plan_set.plans)} planned injections -> {output_path}")
    if violations:
        sys.exit(1)


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--plan", "plan_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--output", "output_path", required=True, type=click.Path(dir_okay=False, writable=True))
@click.option("--seed", default=0, show_default=True)
@click.option("--sound-library", default="", help="Directory of <category>/*.wav assets; empty uses built-ins.")
def inject(input_path, plan_path, output_path, seed, sound_library):
    """Apply every injection in a plan file to one WAV."""
    audio = read_wav(input_path)
    plan_set = parse_backend_output(Path(plan_path).read_text(encoding="utf-8"))
    library = SoundLibrary.from_directory(sound_library) if sound_library else SoundLibrary.builtin()
    backends = InjectorBackends(separation=BandpassSeparation(), tts=BabbleTTS(), library=library)
    work = audio
    clipped = 0
    for index, item in enumerate(sorted(plan_set.plans, key=lambda p: p.interval.start_ms)):
        result = dispatch(work, item, backends, seed=seed + index)
        work = result.audio
        clipped += result.clipped_samples
        click.echo(
            f"applied {item.injection_type.name} at "
            f"[{item.interval.start:.2f}, {item.interval.end:.2f}]s"
        )
    write_wav(output_path, work)
    suffix = f" ({clipped} samples clipped)" if clipped else ""
    click.echo(f"{len(plan_set.plans)} injections -> {output_path}{suffix}")


@main.command("review-serve")
@click.option("--log", "log_path", required=True, type=click.Path(dir_okay=False, writable=True))
@click.option("--media-root", default="", type=click.Path(file_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8600, show_default=True)
@click.option("--batch-size", default=50, show_default=True)
@click.option("--flag-threshold", default=3, show_default=True)
def review_serve(log_path, media_root, host, port, batch_size, flag_threshold):
    """Serve the review queue (and its media) over HTTP."""
    import uvicorn

    from .server import create_app

    queue = ReviewQueue(log_path, batch_size=batch_size, flag_threshold=flag_threshold)
    app = create_app(queue, media_root=media_root or None)
    click.echo(f"review queue of {len(queue)} items at http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Overrides the config seed.")
@click.option("--auto-approve", is_flag=True, help="Approve every pending review item in this run.")
@click.option("--workers", type=int, default=None, help="Overrides the config worker count.")
def construct(config_path, seed, auto_approve, workers):
    """Run (or resume) a full construction pass from a config file."""
    config = PipelineConfig.from_file(config_path)
    if seed is not None:
        config = replace(config, seed=seed)
    if auto_approve:
        config = replace(config, auto_approve=True)
    if workers is not None:
        config = replace(config, workers=workers)
    ledger = run_construct(config)
    errors = 0
    for media_id in ledger.media_ids():
        state = ledger.state(media_id)
        stages = " ".join(f"{s}={state['stages'].get(s, '-')}" for s in ("segmented", "planned", "reviewed", "injected", "annotated"))
        click.echo(f"{media_id}: {stages}")
        for message in state["errors"]:
            errors += 1
            click.echo(f"  error: {message}", err=True)
    root = Path(config.output_root)
    click.echo(f"manifests: {root / 'manifest_full.json'} {root / 'manifest_segments.json'}")
    if errors:
        click.echo(f"{errors} media-level errors (see ledger)", err=True)


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--ratio", default=0.139375, show_default=True, help="Test fraction.")
@click.option("--seed", default=0, show_default=True)
@click.option("--output-dir", required=True, type=click.Path(file_okay=False))
def split(manifest_path, ratio, seed, output_dir):
    """Stratified train/test split of a manifest."""
    manifest = DatasetManifest.load(manifest_path)
    train, test = split_manifest(manifest, ratio, seed)
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    train.save(out / "manifest_train.json")
    test.save(out / "manifest_test.json")
    click.echo(f"{len(train.entries)} train / {len(test.entries)} test -> {out}")


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--predictions", "predictions_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--task", type=click.Choice(["segment", "full"]), required=True)
@click.option("--output-dir", required=True, type=click.Path(file_okay=False))
@click.option("--figures/--no-figures", default=True, show_default=True)
def evaluate(manifest_path, predictions_path, task, output_dir, figures):
    """Score raw responses against a manifest; writes report files."""
    manifest = DatasetManifest.load(manifest_path)
    problems = validate_manifest(manifest)
    if problems:
        raise click.ClickException(f"manifest invalid: {problems[0].message}")
    responses = load_predictions_jsonl(predictions_path)
    report = run_evaluate(manifest, responses, task)
    written = write_report_files(report, output_dir, figures=figures)
    payload = report.to_json()
    headline = f"task={task} accuracy={payload['accuracy']:.1f}"
    if payload.get("type_accuracy") is not None:
        headline += f" type_accuracy={payload['type_accuracy']:.1f}"
    if payload.get("miou") is not None:
        headline += f" miou={payload['miou']:.1f}"
    if payload.get("soda_m") is not None:
        headline += f" soda_m={payload['soda_m']:.1f}"
    click.echo(headline)
    for path in written:
        click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
