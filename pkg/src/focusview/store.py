"""Content-addressed artifact store.

Layout under the store root:

    videos/<video_id>/meta.json
    videos/<video_id>/source/000000.png ...   frames
    videos/<video_id>/source/audio.wav        PCM16 track
    videos/<video_id>/source/<sidecars>       provider fixtures
    videos/<video_id>/analyses/<config>.json  cached analyses
    videos/<video_id>/renders/<key>/...       rendered variants

video_id is the hash of every ingested byte, so re-ingesting identical
content is a no-op and cache keys survive restarts.
"""

from __future__ import annotations

import hashlib
import json
import os
import shlex
import subprocess
import tempfile
from pathlib import Path
from typing import Any

import numpy as np
from PIL import Image

from .audio import read_wav
from .core import FocusViewError, FrameBuffer, PcmAudio, canonical_dumps


class IngestError(FocusViewError):
    """Source material could not be ingested."""


SIDECAR_SUFFIXES = (".json", ".vtt")
VIDEO_SUFFIXES = (".mp4", ".mkv", ".webm", ".mov", ".avi", ".m4v")


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


class Store:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    # -- paths --------------------------------------------------------------

    def video_dir(self, video_id: str) -> Path:
        return self.root / "videos" / video_id

    def source_dir(self, video_id: str) -> Path:
        return self.video_dir(video_id) / "source"

    def render_dir(self, video_id: str, key: str) -> Path:
        return self.video_dir(video_id) / "renders" / key

    def has_video(self, video_id: str) -> bool:
        return (self.video_dir(video_id) / "meta.json").exists()

    def video_ids(self) -> list[str]:
        videos = self.root / "videos"
        if not videos.exists():
            return []
        return sorted(p.name for p in videos.iterdir() if (p / "meta.json").exists())

    # -- ingest ---------------------------------------------------------------

    def ingest(self, source: str | Path, transcoder: dict[str, str] | None = None) -> str:
        """Ingest a frame-sequence directory or (via the configured external
        transcoder) a video file. Returns the content-hash video id."""
        source = Path(source)
        if source.is_dir():
            return self._ingest_dir(source)
        if source.suffix.lower() in VIDEO_SUFFIXES:
            return self._ingest_via_transcoder(source, transcoder)
        raise IngestError(f"unsupported source {source} (need a directory or "
                          f"one of {', '.join(VIDEO_SUFFIXES)})")

    def _ingest_dir(self, source: Path) -> str:
        frames = sorted(p for p in source.iterdir() if p.suffix.lower() == ".png")
        wavs = sorted(p for p in source.iterdir() if p.suffix.lower() == ".wav")
        if not frames:
            raise IngestError(f"no .png frames in {source}")
        if len([w for w in wavs if not w.name.endswith(".speech.wav")]) != 1:
            raise IngestError(f"expected exactly one audio .wav in {source}")

        files = sorted(p for p in source.iterdir() if p.is_file())
        digest = hashlib.sha256()
        for f in files:
            digest.update(f.name.encode("utf-8"))
            digest.update(b"\0")
            digest.update(f.read_bytes())
        video_id = digest.hexdigest()

        if self.has_video(video_id):
            return video_id  # same bytes: no-op

        meta_path = source / "meta.json"
        fps = 30.0
        if meta_path.exists():
            fps = float(json.loads(meta_path.read_text()).get("fps", 30.0))

        src_dir = self.source_dir(video_id)
        src_dir.mkdir(parents=True, exist_ok=True)
        width = height = None
        for i, frame_file in enumerate(frames):
            data = frame_file.read_bytes()
            if width is None:
                with Image.open(frame_file) as img:
                    width, height = img.size
            _atomic_write(src_dir / f"{i:06d}.png", data)
        audio_src = [w for w in wavs if not w.name.endswith(".speech.wav")][0]
        _atomic_write(src_dir / "audio.wav", audio_src.read_bytes())
        for f in files:
            if f.suffix.lower() in SIDECAR_SUFFIXES and f.name != "meta.json":
                _atomic_write(src_dir / f.name, f.read_bytes())
            if f.name.endswith(".speech.wav"):
                _atomic_write(src_dir / "audio.speech.wav", f.read_bytes())

        meta = {
            "video_id": video_id,
            "fps": fps,
            "frame_count": len(frames),
            "width": width,
            "height": height,
            "duration": len(frames) / fps,
        }
        _atomic_write(self.video_dir(video_id) / "meta.json",
                      canonical_dumps(meta).encode("utf-8"))
        return video_id

    def _ingest_via_transcoder(self, source: Path,
                               transcoder: dict[str, str] | None) -> str:
        if not source.exists():
            raise IngestError(f"no such file: {source}")
        if not transcoder or "extract" not in transcoder:
            raise IngestError(
                "video-file ingest needs a transcoder config with an "
                "'extract' command template ({input}, {outdir})")
        with tempfile.TemporaryDirectory(prefix="focusview-ingest-") as tmp:
            cmd = [part.format(input=str(source), outdir=tmp)
                   for part in shlex.split(transcoder["extract"])]
            proc = subprocess.run(cmd, capture_output=True, text=True)
            if proc.returncode != 0:
                raise IngestError(
                    f"transcoder failed ({proc.returncode}): {proc.stderr.strip()[-500:]}")
            # sidecars next to the video ride along
            for f in source.parent.iterdir():
                if f.is_file() and f.stem.startswith(source.stem) and \
                        f.suffix.lower() in SIDECAR_SUFFIXES:
                    (Path(tmp) / f.name.removeprefix(source.stem + ".")).write_bytes(f.read_bytes())
            try:
                return self._ingest_dir(Path(tmp))
            except IngestError as exc:
                raise IngestError(f"transcoder produced no usable output: {exc}") from None

    # -- source access --------------------------------------------------------

    def meta(self, video_id: str) -> dict[str, Any]:
        path = self.video_dir(video_id) / "meta.json"
        if not path.exists():
            raise FocusViewError(f"unknown video {video_id}")
        return json.loads(path.read_text())

    def frame_path(self, video_id: str, index: int) -> Path:
        return self.source_dir(video_id) / f"{index:06d}.png"

    def frame(self, video_id: str, index: int) -> FrameBuffer:
        path = self.frame_path(video_id, index)
        if not path.exists():
            raise FocusViewError(f"video {video_id} has no frame {index}")
        with Image.open(path) as img:
            arr = np.asarray(img.convert("RGB"))
        meta = self.meta(video_id)
        return FrameBuffer.from_array(arr, frame_index=index,
                                      timestamp=index / meta["fps"])

    def audio_bytes(self, video_id: str) -> bytes:
        return (self.source_dir(video_id) / "audio.wav").read_bytes()

    def audio(self, video_id: str) -> PcmAudio:
        return read_wav(self.audio_bytes(video_id))

    # -- analyses -------------------------------------------------------------

    def analysis_path(self, video_id: str, config_hash: str) -> Path:
        return self.video_dir(video_id) / "analyses" / f"{config_hash}.json"

    def save_analysis(self, video_id: str, config_hash: str, payload: str) -> None:
        path = self.analysis_path(video_id, config_hash)
        path.parent.mkdir(parents=True, exist_ok=True)
        _atomic_write(path, payload.encode("utf-8"))

    def load_analysis(self, video_id: str, config_hash: str) -> str | None:
        path = self.analysis_path(video_id, config_hash)
        return path.read_text(encoding="utf-8") if path.exists() else None

    # -- segments -------------------------------------------------------------

    def save_segments(self, video_id: str, payload: dict[str, Any]) -> None:
        _atomic_write(self.video_dir(video_id) / "segments.json",
                      canonical_dumps(payload).encode("utf-8"))

    def load_segments(self, video_id: str) -> dict[str, Any] | None:
        path = self.video_dir(video_id) / "segments.json"
        return json.loads(path.read_text()) if path.exists() else None

    # -- renders ----------------------------------------------------------------

    def save_render_frame(self, video_id: str, key: str, index: int,
                          frame: FrameBuffer) -> None:
        out_dir = self.render_dir(video_id, key) / "frames"
        out_dir.mkdir(parents=True, exist_ok=True)
        Image.fromarray(np.asarray(frame.pixels)).save(out_dir / f"{index:06d}.png")

    def copy_source_frame(self, video_id: str, key: str, index: int) -> None:
        """Bit-identical passthrough for identity presets."""
        out_dir = self.render_dir(video_id, key) / "frames"
        out_dir.mkdir(parents=True, exist_ok=True)
        data = self.frame_path(video_id, index).read_bytes()
        _atomic_write(out_dir / f"{index:06d}.png", data)

    def render_frame(self, video_id: str, key: str, index: int) -> FrameBuffer:
        path = self.render_dir(video_id, key) / "frames" / f"{index:06d}.png"
        with Image.open(path) as img:
            arr = np.asarray(img.convert("RGB"))
        return FrameBuffer.from_array(arr, frame_index=index)

    def save_render_audio(self, video_id: str, key: str, data: bytes,
                          name: str = "audio.wav") -> str:
        out = self.render_dir(video_id, key) / name
        out.parent.mkdir(parents=True, exist_ok=True)
        _atomic_write(out, data)
        return name

    def save_render_manifest(self, video_id: str, key: str,
                             manifest: dict[str, Any]) -> None:
        _atomic_write(self.render_dir(video_id, key) / "render.json",
                      canonical_dumps(manifest).encode("utf-8"))

    def load_render_manifest(self, video_id: str, key: str) -> dict[str, Any] | None:
        path = self.render_dir(video_id, key) / "render.json"
        return json.loads(path.read_text()) if path.exists() else None
