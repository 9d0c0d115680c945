"""Orchestration: ingest -> analysis -> classification -> rendering, plus
the precomputed variant grid, long-video segment manifests, and render jobs.

Analyses and renders are cached content-addressed: identical inputs and
config hash to identical keys, so nothing is computed twice. Analysis for a
video is single-flight; render jobs run on a bounded worker pool.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import threading
import uuid
from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

from .audio import fallback_enhance, read_wav, replace_track, write_wav
from .captions import (
    CaptionCue,
    WordTiming,
    emit_enriched_vtt,
    emit_vtt,
    parse_vtt,
    render_caption,
    schedules_to_json,
    word_timings,
)
from .classify import ClassifiedScene, classify_scene
from .compose import NoFocusTargetError, compose_frame, plan_layout
from .config import EngineConfig
from .core import (
    AudioMode,
    BackgroundMode,
    CustomizationPreset,
    FocusViewError,
    LayoutMode,
    ValidationError,
    canonical_dumps,
)
from .detect import (
    Detection,
    DetectionKind,
    build_tracks,
    detect_rectangles,
    refine_speaker_mask,
    select_speaker,
)
from .providers import Providers, build_providers
from .store import Store


# ---------------------------------------------------------------------------
# Analysis manifest
# ---------------------------------------------------------------------------

@dataclass
class AnalysisManifest:
    video_id: str
    config_hash: str
    fps: float
    frame_count: int
    width: int
    height: int
    analyzed_indices: list[int]
    hold: int
    scene: ClassifiedScene
    cues: list[CaptionCue] = field(default_factory=list)
    schedules: list[list[WordTiming]] = field(default_factory=list)
    provider_identities: dict[str, str] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    @property
    def duration(self) -> float:
        return self.frame_count / self.fps

    def to_json(self) -> dict[str, Any]:
        return {
            "video_id": self.video_id,
            "config_hash": self.config_hash,
            "fps": self.fps,
            "frame_count": self.frame_count,
            "width": self.width,
            "height": self.height,
            "analyzed_indices": self.analyzed_indices,
            "hold": self.hold,
            "scene": self.scene.to_json(),
            "cues": [c.to_json() for c in self.cues],
            "schedules": [[w.to_json() for w in s] for s in self.schedules],
            "provider_identities": self.provider_identities,
            "warnings": self.warnings,
        }

    def canonical(self) -> str:
        return canonical_dumps(self.to_json())

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "AnalysisManifest":
        return cls(
            video_id=data["video_id"],
            config_hash=data["config_hash"],
            fps=float(data["fps"]),
            frame_count=int(data["frame_count"]),
            width=int(data["width"]),
            height=int(data["height"]),
            analyzed_indices=[int(i) for i in data["analyzed_indices"]],
            hold=int(data["hold"]),
            scene=ClassifiedScene.from_json(data["scene"]),
            cues=[CaptionCue.from_json(c) for c in data["cues"]],
            schedules=[[WordTiming.from_json(w) for w in s] for s in data["schedules"]],
            provider_identities=dict(data["provider_identities"]),
            warnings=list(data["warnings"]),
        )


# ---------------------------------------------------------------------------
# Segment manifest
# ---------------------------------------------------------------------------

@dataclass
class SegmentManifest:
    """A partition of [0, duration) into half-open segments, each carrying a
    preset. A boundary frame belongs to the later segment."""

    duration: float
    boundaries: list[float] = field(default_factory=lambda: [0.0])
    presets: list[CustomizationPreset] = field(default_factory=lambda: [CustomizationPreset()])
    notes: list[str | None] = field(default_factory=lambda: [None])

    def __post_init__(self):
        if self.duration <= 0:
            raise ValidationError("duration must be positive")
        if not self.boundaries or self.boundaries[0] != 0.0:
            raise ValidationError("boundaries must start at 0")
        for a, b in zip(self.boundaries, self.boundaries[1:]):
            if not a < b:
                raise ValidationError("boundaries must be strictly increasing")
        if self.boundaries[-1] >= self.duration:
            raise ValidationError("boundaries must lie inside [0, duration)")
        if len(self.presets) != len(self.boundaries):
            raise ValidationError("one preset per segment required")
        if len(self.notes) != len(self.boundaries):
            raise ValidationError("one note slot per segment required")

    def segment_count(self) -> int:
        return len(self.boundaries)

    def segment_index(self, t: float) -> int:
        """The segment containing time t; boundary times map to the later
        segment."""
        return max(0, bisect_right(self.boundaries, t) - 1)

    def preset_at(self, t: float) -> CustomizationPreset:
        return self.presets[self.segment_index(t)]

    def add_boundary(self, t: float) -> "SegmentManifest":
        if not 0.0 < t < self.duration:
            raise ValidationError(f"boundary {t} outside (0, {self.duration})")
        if t in self.boundaries:
            raise ValidationError(f"duplicate boundary {t}")
        i = self.segment_index(t)
        boundaries = self.boundaries[:i + 1] + [t] + self.boundaries[i + 1:]
        presets = self.presets[:i + 1] + [self.presets[i]] + self.presets[i + 1:]
        notes = self.notes[:i + 1] + [self.notes[i]] + self.notes[i + 1:]
        return SegmentManifest(self.duration, boundaries, presets, notes)

    def remove_boundary(self, t: float) -> "SegmentManifest":
        if t not in self.boundaries[1:]:
            raise ValidationError(f"no removable boundary at {t}")
        return self.merge_adjacent(self.boundaries.index(t) - 1)

    def merge_adjacent(self, i: int) -> "SegmentManifest":
        """Join segments i and i+1, keeping segment i's preset."""
        if not 0 <= i < self.segment_count() - 1:
            raise ValidationError(f"no adjacent pair at index {i}")
        boundaries = self.boundaries[:i + 1] + self.boundaries[i + 2:]
        presets = self.presets[:i + 1] + self.presets[i + 2:]
        notes = self.notes[:i + 1] + self.notes[i + 2:]
        return SegmentManifest(self.duration, boundaries, presets, notes)

    def set_preset(self, i: int, preset: CustomizationPreset) -> "SegmentManifest":
        if not 0 <= i < self.segment_count():
            raise ValidationError(f"no segment {i}")
        presets = list(self.presets)
        presets[i] = preset
        return SegmentManifest(self.duration, list(self.boundaries), presets,
                               list(self.notes))

    def set_note(self, i: int, note: str | None) -> "SegmentManifest":
        if not 0 <= i < self.segment_count():
            raise ValidationError(f"no segment {i}")
        notes = list(self.notes)
        notes[i] = note
        return SegmentManifest(self.duration, list(self.boundaries),
                               list(self.presets), notes)

    def to_json(self) -> dict[str, Any]:
        return {
            "duration": self.duration,
            "boundaries": list(self.boundaries),
            "presets": [p.to_json() for p in self.presets],
            "notes": list(self.notes),
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "SegmentManifest":
        return cls(
            duration=float(data["duration"]),
            boundaries=[float(b) for b in data["boundaries"]],
            presets=[CustomizationPreset.from_json(p) for p in data["presets"]],
            notes=list(data.get("notes") or [None] * len(data["boundaries"])),
        )


# ---------------------------------------------------------------------------
# Render jobs
# ---------------------------------------------------------------------------

class JobState(Enum):
    QUEUED = "queued"
    RUNNING = "running"
    DONE = "done"
    FAILED = "failed"


_STATE_ORDER = [JobState.QUEUED, JobState.RUNNING, JobState.DONE, JobState.FAILED]


@dataclass
class RenderJob:
    job_id: str
    video_id: str
    key: str
    state: JobState = JobState.QUEUED
    progress: float = 0.0
    error: str | None = None
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def advance(self, state: JobState, error: str | None = None) -> None:
        with self._lock:
            if _STATE_ORDER.index(state) < _STATE_ORDER.index(self.state):
                raise FocusViewError(
                    f"job state may only move forward ({self.state} -> {state})")
            self.state = state
            if error is not None:
                self.error = error
            if state is JobState.DONE:
                self.progress = 1.0

    def set_progress(self, done: int, total: int) -> None:
        with self._lock:
            self.progress = done / total if total else 1.0

    def to_json(self) -> dict[str, Any]:
        return {
            "job_id": self.job_id,
            "video_id": self.video_id,
            "key": self.key,
            "state": self.state.value,
            "progress": self.progress,
            "error": self.error,
        }


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------

class Engine:
    """The service core behind both the CLI and the HTTP API."""

    def __init__(self, config: EngineConfig | None = None, store: Store | None = None):
        self.config = config or EngineConfig()
        self.store = store or Store(self.config.resolved_store_path())
        self.stats = {"compose_frame_calls": 0, "provider_calls": 0,
                      "analyses_computed": 0, "renders_computed": 0}
        self._stats_lock = threading.Lock()
        self._jobs: dict[str, RenderJob] = {}
        self._jobs_by_key: dict[str, RenderJob] = {}
        self._jobs_lock = threading.Lock()
        self._analysis_locks: dict[str, threading.Lock] = {}
        self._analysis_locks_guard = threading.Lock()
        self._pool = ThreadPoolExecutor(max_workers=max(1, self.config.max_workers),
                                        thread_name_prefix="focusview-render")

    def _bump(self, key: str, amount: int = 1) -> None:
        with self._stats_lock:
            self.stats[key] += amount

    # -- ingest ----------------------------------------------------------------

    def ingest(self, source: str | Path) -> str:
        return self.store.ingest(source, self.config.transcoder)

    # -- analysis ----------------------------------------------------------------

    def _analysis_lock(self, video_id: str) -> threading.Lock:
        with self._analysis_locks_guard:
            return self._analysis_locks.setdefault(video_id, threading.Lock())

    def analyze(self, video_id: str, force: bool = False) -> AnalysisManifest:
        """Detect, track, classify, and schedule captions; cached by
        (video_id, config hash)."""
        config_hash = self.config.analysis_hash()
        with self._analysis_lock(video_id):
            if not force:
                cached = self.store.load_analysis(video_id, config_hash)
                if cached is not None:
                    return AnalysisManifest.from_json(json.loads(cached))
            manifest = self._run_analysis(video_id, config_hash)
            self.store.save_analysis(video_id, config_hash, manifest.canonical())
            return manifest

    def _run_analysis(self, video_id: str, config_hash: str) -> AnalysisManifest:
        meta = self.store.meta(video_id)
        fps = meta["fps"]
        frame_count = meta["frame_count"]
        width, height = meta["width"], meta["height"]
        stride = max(1, round(fps / self.config.analysis_fps))
        indices = list(range(0, frame_count, stride))

        warnings: list[str] = []
        providers = build_providers(self.config, self.store.source_dir(video_id),
                                    warnings)
        calls_before = providers.total_calls()

        detections: dict[int, list[Detection]] = {}
        speaker_rect_by_frame: dict[int, Any] = {}
        for idx in indices:
            frame = self.store.frame(video_id, idx)
            dets: list[Detection] = []
            for rect in detect_rectangles(frame, self.config.canny,
                                          self.config.hough, self.config.thresholds):
                dets.append(Detection(frame_index=idx, kind=DetectionKind.RECT_OVERLAY,
                                      rect=rect))
            humans: list[Detection] = []
            if providers.object_detector is not None:
                for det in providers.object_detector.detect(frame):
                    if det.kind is DetectionKind.HUMAN:
                        humans.append(det)
                    dets.append(det)
            if providers.ocr is not None:
                dets.extend(providers.ocr.detect_text(frame))

            if humans:
                raster = (providers.saliency.saliency(frame)
                          if providers.saliency is not None else None)
                speaker = select_speaker(humans, raster, (width, height))
                if speaker is not None:
                    segment_fn = (providers.fine_segmenter.segment
                                  if providers.fine_segmenter is not None else None)
                    mask = refine_speaker_mask(frame, speaker, segment_fn, warnings)
                    dets[dets.index(speaker)] = Detection(
                        frame_index=idx, kind=speaker.kind, rect=speaker.rect,
                        score=speaker.score, mask=mask)
                    speaker_rect_by_frame[idx] = speaker.rect
            detections[idx] = dets

        tracks = build_tracks(detections, self.config.thresholds,
                              frame_size=(width, height),
                              max_gap=self.config.track_gap_frames)

        speaker_track = None
        best_hits = 0
        for track in tracks:
            if track.kind is not DetectionKind.HUMAN:
                continue
            hits = sum(1 for fi, rect in track.per_frame.items()
                       if speaker_rect_by_frame.get(fi) == rect)
            if hits > best_hits:
                best_hits = hits
                speaker_track = track
        scene = classify_scene(tracks, speaker_track, self.config.thresholds)

        cues: list[CaptionCue] = []
        schedules: list[list[WordTiming]] = []
        if providers.asr is not None:
            try:
                cues = parse_vtt(providers.asr.transcribe(self.store.audio(video_id)))
                schedules = [word_timings(c) for c in cues]
            except FocusViewError as exc:
                warnings.append(f"asr provider output rejected: {exc}")

        self._bump("provider_calls", providers.total_calls() - calls_before)
        self._bump("analyses_computed")
        return AnalysisManifest(
            video_id=video_id,
            config_hash=config_hash,
            fps=fps,
            frame_count=frame_count,
            width=width,
            height=height,
            analyzed_indices=indices,
            hold=stride,
            scene=scene,
            cues=cues,
            schedules=schedules,
            provider_identities=providers.identities(),
            warnings=warnings,
        )

    # -- segments -----------------------------------------------------------------

    def get_segments(self, video_id: str) -> SegmentManifest:
        stored = self.store.load_segments(video_id)
        if stored is not None:
            return SegmentManifest.from_json(stored)
        return SegmentManifest(duration=self.store.meta(video_id)["duration"])

    def put_segments(self, video_id: str, manifest: SegmentManifest) -> None:
        self.store.save_segments(video_id, manifest.to_json())

    # -- rendering ---------------------------------------------------------------

    def render_key(self, video_id: str,
                   request: CustomizationPreset | SegmentManifest) -> str:
        payload = {
            "video_id": video_id,
            "request": request.to_json(),
            "kind": "segments" if isinstance(request, SegmentManifest) else "preset",
            "config": self.config.render_hash_fields(),
        }
        return hashlib.sha256(canonical_dumps(payload).encode()).hexdigest()[:16]

    def render(self, video_id: str,
               request: CustomizationPreset | SegmentManifest,
               wait: bool = True) -> RenderJob:
        """Render a preset or per-segment customization. Identical requests
        share one job and one cached artifact."""
        key = self.render_key(video_id, request)
        with self._jobs_lock:
            existing = self._jobs_by_key.get(key)
            if existing is not None and existing.state is not JobState.FAILED:
                return existing
            if self.store.load_render_manifest(video_id, key) is not None:
                job = RenderJob(job_id=uuid.uuid4().hex, video_id=video_id, key=key,
                                state=JobState.DONE, progress=1.0)
                self._jobs[job.job_id] = job
                self._jobs_by_key[key] = job
                return job
            job = RenderJob(job_id=uuid.uuid4().hex, video_id=video_id, key=key)
            self._jobs[job.job_id] = job
            self._jobs_by_key[key] = job
        future = self._pool.submit(self._execute_render, job, request)
        if wait:
            future.result()
        return job

    def job(self, job_id: str) -> RenderJob | None:
        with self._jobs_lock:
            return self._jobs.get(job_id)

    def _preset_for_frame(self, request, t: float) -> CustomizationPreset:
        if isinstance(request, SegmentManifest):
            return request.preset_at(t)
        return request

    def _caption_hook(self, manifest: AnalysisManifest,
                      preset: CustomizationPreset, t: float):
        if preset.caption is None or not manifest.cues:
            return None
        style = preset.caption
        cue_idx = None
        for i, cue in enumerate(manifest.cues):
            if cue.start <= t < cue.end:
                cue_idx = i
                break
        if cue_idx is None:
            return None

        def hook(frame):
            return render_caption(frame, manifest.cues[cue_idx],
                                  manifest.schedules[cue_idx], style, t)

        return hook

    def _execute_render(self, job: RenderJob, request) -> None:
        try:
            job.advance(JobState.RUNNING)
            manifest = self.analyze(job.video_id)
            total = manifest.frame_count
            for idx in range(total):
                t = idx / manifest.fps
                preset = self._preset_for_frame(request, t)
                if preset.is_identity():
                    self.store.copy_source_frame(job.video_id, job.key, idx)
                else:
                    frame = self.store.frame(job.video_id, idx)
                    plan = plan_layout(
                        manifest.scene, preset.layout,
                        (manifest.width, manifest.height), idx,
                        hold=manifest.hold,
                        speaker_height_frac=self.config.speaker_height_frac,
                        content_fit_frac=self.config.content_fit_frac)
                    out = compose_frame(frame, plan, preset.background,
                                        blur_sigma=self.config.blur_sigma,
                                        caption_hook=self._caption_hook(
                                            manifest, preset, t))
                    self._bump("compose_frame_calls")
                    self.store.save_render_frame(job.video_id, job.key, idx, out)
                job.set_progress(idx + 1, total)

            render_manifest = self._render_audio(job, request, manifest)
            self.store.save_render_manifest(job.video_id, job.key, render_manifest)
            self._bump("renders_computed")
            job.advance(JobState.DONE)
        except NoFocusTargetError as exc:
            job.advance(JobState.FAILED, error=f"NoFocusTarget: {exc}")
        except Exception as exc:  # failure must land in the job record
            job.advance(JobState.FAILED, error=str(exc))

    def _render_audio(self, job: RenderJob, request,
                      manifest: AnalysisManifest) -> dict[str, Any]:
        render_manifest: dict[str, Any] = {
            "video_id": job.video_id,
            "key": job.key,
            "kind": "segments" if isinstance(request, SegmentManifest) else "preset",
            "request": request.to_json(),
            "fps": manifest.fps,
            "frame_count": manifest.frame_count,
            "duration": manifest.duration,
            "frames": "frames",
            "audio": {"mode": AudioMode.ORIGINAL.value, "path": "../../source/audio.wav"},
        }
        if isinstance(request, SegmentManifest):
            modes = {p.audio for p in request.presets}
            needs_enhance = AudioMode.DENOISE_ENHANCE in modes
        else:
            needs_enhance = request.audio is AudioMode.DENOISE_ENHANCE
        if not needs_enhance:
            return render_manifest

        source = self.store.audio(job.video_id)
        enhanced = self._enhanced_audio(job.video_id, source)
        if isinstance(request, SegmentManifest):
            import numpy as np

            frames_src = source.samples.reshape(-1, source.channels)
            frames_enh = enhanced.samples.reshape(-1, enhanced.channels)
            n = min(frames_src.shape[0], frames_enh.shape[0])
            out = frames_src.copy()
            for i, start in enumerate(request.boundaries):
                end = (request.boundaries[i + 1]
                       if i + 1 < len(request.boundaries) else manifest.duration)
                lo = min(n, round(start * source.sample_rate))
                hi = min(n, round(end * source.sample_rate))
                if request.presets[i].audio is AudioMode.DENOISE_ENHANCE:
                    out[lo:hi] = frames_enh[lo:hi]
            from .core import PcmAudio

            mixed = PcmAudio(source.sample_rate, source.channels, out.ravel())
            name = self.store.save_render_audio(job.video_id, job.key, write_wav(mixed))
        else:
            name = self.store.save_render_audio(job.video_id, job.key,
                                                write_wav(enhanced))
            mixed = enhanced
        render_manifest["audio"]["mode"] = AudioMode.DENOISE_ENHANCE.value
        return replace_track(render_manifest, mixed, name)

    def _enhanced_audio(self, video_id: str, source):
        warnings: list[str] = []
        providers = build_providers(self.config, self.store.source_dir(video_id),
                                    warnings)
        if providers.speech_enhancer is not None:
            try:
                return providers.speech_enhancer.enhance(source)
            except Exception:
                pass  # declared fallback below
        return fallback_enhance(source)

    # -- variant grid -----------------------------------------------------------

    def render_variant_grid(self, video_id: str, wait: bool = True) -> list[RenderJob]:
        """One render job per (layout, background) pair: exactly 20 visual
        variants. Captions and audio are applied at serve time."""
        jobs = []
        for layout, background in itertools.product(LayoutMode, BackgroundMode):
            preset = CustomizationPreset(layout=layout, background=background)
            jobs.append(self.render(video_id, preset, wait=wait))
        return jobs

    # -- captions ----------------------------------------------------------------

    def captions(self, video_id: str, fmt: str = "vtt") -> str:
        manifest = self.analyze(video_id)
        if fmt == "vtt":
            return emit_vtt(manifest.cues)
        if fmt == "enriched":
            return emit_enriched_vtt(manifest.cues, manifest.schedules)
        if fmt == "json":
            return canonical_dumps(schedules_to_json(manifest.cues, manifest.schedules))
        raise ValidationError(f"unknown caption format {fmt!r} (vtt|enriched|json)")

    def shutdown(self) -> None:
        self._pool.shutdown(wait=True)
