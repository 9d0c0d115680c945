"""Command-line interface.

    focusview ingest <path>
    focusview analyze <video_id> [--config file] [--force]
    focusview render <video_id> --preset file.json | --segments file.json
    focusview grid <video_id>
    focusview captions <video_id> --format vtt|enriched|json
    focusview serve [--host] [--port]

The store location comes from the config file or the FOCUSVIEW_STORE
environment variable.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import EngineConfig
from .core import CustomizationPreset, FocusViewError
from .pipeline import Engine, JobState, SegmentManifest


def _engine(config_path: str | None) -> Engine:
    config = EngineConfig.from_file(config_path) if config_path else EngineConfig()
    return Engine(config)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Engine config JSON.")
@click.pass_context
def main(ctx: click.Context, config_path: str | None) -> None:
    """Video element segmentation and customization engine."""
    ctx.obj = config_path


@main.command()
@click.argument("path", type=click.Path(exists=True))
@click.pass_obj
def ingest(config_path: str | None, path: str) -> None:
    """Ingest a frame-sequence directory or video file."""
    engine = _engine(config_path)
    try:
        video_id = engine.ingest(path)
    except FocusViewError as exc:
        raise click.ClickException(str(exc))
    click.echo(video_id)


@main.command()
@click.argument("video_id")
@click.option("--force", is_flag=True, help="Recompute even if cached.")
@click.pass_obj
def analyze(config_path: str | None, video_id: str, force: bool) -> None:
    """Analyze an ingested video and print the manifest."""
    engine = _engine(config_path)
    try:
        manifest = engine.analyze(video_id, force=force)
    except FocusViewError as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps(manifest.to_json(), indent=2))


@main.command()
@click.argument("video_id")
@click.option("--preset", "preset_path", type=click.Path(exists=True),
              help="Preset JSON file.")
@click.option("--segments", "segments_path", type=click.Path(exists=True),
              help="Segment manifest JSON file.")
@click.pass_obj
def render(config_path: str | None, video_id: str, preset_path: str | None,
           segments_path: str | None) -> None:
    """Render one customization (a preset or a per-segment manifest)."""
    if bool(preset_path) == bool(segments_path):
        raise click.UsageError("pass exactly one of --preset / --segments")
    engine = _engine(config_path)
    if preset_path:
        request = CustomizationPreset.from_json(
            json.loads(Path(preset_path).read_text()))
    else:
        request = SegmentManifest.from_json(
            json.loads(Path(segments_path).read_text()))
    job = engine.render(video_id, request, wait=True)
    click.echo(json.dumps(job.to_json(), indent=2))
    if job.state is JobState.FAILED:
        sys.exit(1)


@main.command()
@click.argument("video_id")
@click.pass_obj
def grid(config_path: str | None, video_id: str) -> None:
    """Precompute the 4x5 layout-by-background variant grid."""
    engine = _engine(config_path)
    jobs = engine.render_variant_grid(video_id, wait=True)
    done = sum(1 for j in jobs if j.state is JobState.DONE)
    for job in jobs:
        click.echo(json.dumps(job.to_json()))
    click.echo(f"{done}/{len(jobs)} variants ready", err=True)


@main.command()
@click.argument("video_id")
@click.option("--format", "fmt", default="vtt",
              type=click.Choice(["vtt", "enriched", "json"]))
@click.pass_obj
def captions(config_path: str | None, video_id: str, fmt: str) -> None:
    """Emit the video's captions."""
    engine = _engine(config_path)
    try:
        click.echo(engine.captions(video_id, fmt), nl=False)
    except FocusViewError as exc:
        raise click.ClickException(str(exc))


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8787, type=int)
@click.pass_obj
def serve(config_path: str | None, host: str, port: int) -> None:
    """Run the HTTP API."""
    import uvicorn

    from .server import create_app

    uvicorn.run(create_app(_engine(config_path)), host=host, port=port)


if __name__ == "__main__":
    main()
