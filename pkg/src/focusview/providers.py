"""Provider interfaces for the model-backed steps, with offline fixture
implementations and an external-command adapter.

Fixture providers read JSON sidecars keyed by frame_index next to the
ingested source. The detection sidecar schema (shared by the external
command protocol, which receives frame PNGs and prints the same schema):

    {"frames": [{"index": 0, "detections": [
        {"kind": "human", "rect": [x, y, w, h], "score": 0.9}]}]}
"""

from __future__ import annotations

import json
import subprocess
import tempfile
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .audio import read_wav
from .config import EngineConfig, ProviderSpec
from .core import FocusViewError, FrameBuffer, Mask, PcmAudio, Rect, ValidationError
from .detect import Detection, DetectionKind


class ProviderError(FocusViewError):
    """A provider failed; the engine applies the declared fallback."""


class ObjectDetectorProvider(ABC):
    identity = "object-detector"

    @abstractmethod
    def detect(self, frame: FrameBuffer) -> list[Detection]:
        """Human and television detections for one frame."""


class SaliencyProvider(ABC):
    identity = "saliency"

    @abstractmethod
    def saliency(self, frame: FrameBuffer) -> np.ndarray:
        """Grayscale visual-attention raster matching the frame dims."""


class FineSegmenterProvider(ABC):
    identity = "fine-segmenter"

    @abstractmethod
    def segment(self, frame: FrameBuffer, rect: Rect) -> Mask:
        """Fine mask for the element inside rect (full-frame mask)."""


class OcrProvider(ABC):
    identity = "ocr"

    @abstractmethod
    def detect_text(self, frame: FrameBuffer) -> list[Detection]:
        """Text overlay detections for one frame."""


class AsrProvider(ABC):
    identity = "asr"

    @abstractmethod
    def transcribe(self, audio: PcmAudio) -> str:
        """A WEBVTT transcript (must parse with parse_vtt)."""


class SpeechEnhanceProvider(ABC):
    identity = "speech-enhancer"

    @abstractmethod
    def enhance(self, audio: PcmAudio) -> PcmAudio:
        """Speech-isolated/enhanced audio, same rate and duration."""


# ---------------------------------------------------------------------------
# Fixture providers
# ---------------------------------------------------------------------------

def _load_detection_sidecar(path: Path) -> dict[int, list[dict]]:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    out: dict[int, list[dict]] = {}
    for entry in data.get("frames", []):
        out[int(entry["index"])] = list(entry.get("detections", []))
    return out


def _parse_detection(raw: dict, frame_index: int) -> Detection:
    return Detection(
        frame_index=frame_index,
        kind=DetectionKind(raw["kind"]),
        rect=Rect.from_json(raw["rect"]),
        score=float(raw.get("score", 1.0)),
    )


class FixtureDetectionSource:
    """Shared reader for detection-schema sidecars, filtered by kind."""

    def __init__(self, path: Path, kinds: Sequence[DetectionKind]):
        self.path = path
        self.kinds = tuple(kinds)
        self.by_frame = _load_detection_sidecar(path)
        self.calls = 0

    def lookup(self, frame_index: int) -> list[Detection]:
        self.calls += 1
        dets = []
        for raw in self.by_frame.get(frame_index, []):
            det = _parse_detection(raw, frame_index)
            if det.kind in self.kinds:
                dets.append(det)
        return dets


class FixtureObjectDetector(ObjectDetectorProvider):
    def __init__(self, path: Path):
        self.source = FixtureDetectionSource(
            path, (DetectionKind.HUMAN, DetectionKind.TELEVISION))
        self.identity = f"fixture:{path.name}"

    def detect(self, frame: FrameBuffer) -> list[Detection]:
        return self.source.lookup(frame.frame_index)


class FixtureOcr(OcrProvider):
    def __init__(self, path: Path):
        self.source = FixtureDetectionSource(path, (DetectionKind.TEXT_OVERLAY,))
        self.identity = f"fixture:{path.name}"

    def detect_text(self, frame: FrameBuffer) -> list[Detection]:
        return self.source.lookup(frame.frame_index)


class FixtureSaliency(SaliencyProvider):
    """Sidecar schema: {"frames": [{"index": 0, "peaks":
    [{"rect": [x,y,w,h], "value": 0.8}]}]} rendered onto a zero raster."""

    def __init__(self, path: Path):
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        self.by_frame = {int(e["index"]): e.get("peaks", [])
                         for e in data.get("frames", [])}
        self.identity = f"fixture:{path.name}"
        self.calls = 0

    def saliency(self, frame: FrameBuffer) -> np.ndarray:
        self.calls += 1
        raster = np.zeros((frame.height, frame.width), dtype=np.float32)
        for peak in self.by_frame.get(frame.frame_index, []):
            rect = Rect.from_json(peak["rect"]).clipped(frame.width, frame.height)
            if rect is not None:
                raster[rect.y:rect.y2, rect.x:rect.x2] = float(peak.get("value", 1.0))
        return raster


class FixtureSegmenter(FineSegmenterProvider):
    """Sidecar schema: {"frames": [{"index": 0, "shapes":
    [{"ellipse": [cx, cy, rx, ry]} or {"rect": [x, y, w, h]}]}]}."""

    def __init__(self, path: Path):
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        self.by_frame = {int(e["index"]): e.get("shapes", [])
                         for e in data.get("frames", [])}
        self.identity = f"fixture:{path.name}"
        self.calls = 0

    def segment(self, frame: FrameBuffer, rect: Rect) -> Mask:
        self.calls += 1
        bits = np.zeros((frame.height, frame.width), dtype=bool)
        for shape in self.by_frame.get(frame.frame_index, []):
            if "ellipse" in shape:
                cx, cy, rx, ry = shape["ellipse"]
                yy, xx = np.mgrid[0:frame.height, 0:frame.width]
                bits |= ((xx - cx) / max(rx, 1e-9)) ** 2 + ((yy - cy) / max(ry, 1e-9)) ** 2 <= 1.0
            elif "rect" in shape:
                r = Rect.from_json(shape["rect"]).clipped(frame.width, frame.height)
                if r is not None:
                    bits[r.y:r.y2, r.x:r.x2] = True
        return Mask(frame.width, frame.height, bits)


class FixtureAsr(AsrProvider):
    def __init__(self, path: Path):
        self.path = path
        self.identity = f"fixture:{path.name}"
        self.calls = 0

    def transcribe(self, audio: PcmAudio) -> str:
        self.calls += 1
        return self.path.read_text(encoding="utf-8")


class FixtureSpeechEnhancer(SpeechEnhanceProvider):
    """Uses a pre-separated sibling stem verbatim."""

    def __init__(self, path: Path):
        self.path = path
        self.identity = f"fixture:{path.name}"
        self.calls = 0

    def enhance(self, audio: PcmAudio) -> PcmAudio:
        self.calls += 1
        return read_wav(self.path.read_bytes())


# ---------------------------------------------------------------------------
# External command provider (detection schema)
# ---------------------------------------------------------------------------

class ExternalCommandDetector(ObjectDetectorProvider):
    """Spawns a command per batch of frames. The command receives a
    directory of <frame_index>.png files as its last argument and must print
    detection-schema JSON on stdout."""

    def __init__(self, command: list[str]):
        self.command = list(command)
        self.identity = f"command:{self.command[0]}"
        self.calls = 0
        self._cache: dict[int, list[Detection]] = {}

    def detect_batch(self, frames: Sequence[FrameBuffer]) -> None:
        from PIL import Image

        self.calls += 1
        with tempfile.TemporaryDirectory(prefix="focusview-detect-") as tmp:
            for frame in frames:
                Image.fromarray(np.asarray(frame.pixels)).save(
                    Path(tmp) / f"{frame.frame_index}.png")
            proc = subprocess.run(self.command + [tmp], capture_output=True,
                                  text=True)
            if proc.returncode != 0:
                raise ProviderError(
                    f"detector command failed ({proc.returncode}): {proc.stderr.strip()}")
            try:
                data = json.loads(proc.stdout)
            except json.JSONDecodeError as exc:
                raise ProviderError(f"detector command emitted bad JSON: {exc}") from None
        for entry in data.get("frames", []):
            fi = int(entry["index"])
            self._cache[fi] = [_parse_detection(raw, fi)
                               for raw in entry.get("detections", [])]

    def detect(self, frame: FrameBuffer) -> list[Detection]:
        if frame.frame_index not in self._cache:
            self.detect_batch([frame])
        return self._cache.get(frame.frame_index, [])


# ---------------------------------------------------------------------------
# Provider assembly
# ---------------------------------------------------------------------------

# Conventional sidecar names looked up in "auto" mode.
AUTO_SIDECARS = {
    "object_detector": "detections.json",
    "saliency": "saliency.json",
    "fine_segmenter": "segmenter.json",
    "ocr": "ocr.json",
    "asr": "captions.vtt",
    "speech_enhancer": "audio.speech.wav",
}


@dataclass
class Providers:
    object_detector: ObjectDetectorProvider | None = None
    saliency: SaliencyProvider | None = None
    fine_segmenter: FineSegmenterProvider | None = None
    ocr: OcrProvider | None = None
    asr: AsrProvider | None = None
    speech_enhancer: SpeechEnhanceProvider | None = None

    def identities(self) -> dict[str, str]:
        out = {}
        for name in ("object_detector", "saliency", "fine_segmenter", "ocr",
                     "asr", "speech_enhancer"):
            provider = getattr(self, name)
            out[name] = provider.identity if provider else "none"
        return out

    def total_calls(self) -> int:
        total = 0
        for name in ("object_detector", "ocr"):
            provider = getattr(self, name)
            if provider is not None and hasattr(provider, "source"):
                total += provider.source.calls
        for name in ("saliency", "fine_segmenter", "asr", "speech_enhancer"):
            provider = getattr(self, name)
            if provider is not None and hasattr(provider, "calls"):
                total += provider.calls
        return total


_FIXTURE_FACTORIES = {
    "object_detector": FixtureObjectDetector,
    "saliency": FixtureSaliency,
    "fine_segmenter": FixtureSegmenter,
    "ocr": FixtureOcr,
    "asr": FixtureAsr,
    "speech_enhancer": FixtureSpeechEnhancer,
}


def _resolve_one(name: str, spec: ProviderSpec, source_dir: Path):
    if spec.type == "none":
        return None
    if spec.type == "external-command":
        if name == "object_detector":
            return ExternalCommandDetector(spec.command)
        raise ValidationError(
            f"external-command is only supported for object_detector "
            f"(detection schema); got it for {name}")
    path = Path(spec.path) if spec.path else source_dir / AUTO_SIDECARS[name]
    if not path.is_absolute() and not path.exists():
        path = source_dir / path
    if path.exists():
        return _FIXTURE_FACTORIES[name](path)
    if spec.type == "fixture":
        raise ProviderError(f"{name} fixture not found: {path}")
    return None  # auto without a sidecar: engine fallback applies


def build_providers(config: EngineConfig, source_dir: Path,
                    warnings: list[str] | None = None) -> Providers:
    """Instantiate the configured providers for one video's source dir.

    In "auto" mode missing sidecars silently disable the provider (the
    engine's declared fallbacks apply); a missing required fixture is
    recorded as a warning and also falls back.
    """
    providers = Providers()
    for name in _FIXTURE_FACTORIES:
        spec = config.providers.get(name, ProviderSpec())
        try:
            setattr(providers, name, _resolve_one(name, spec, source_dir))
        except ProviderError as exc:
            if warnings is not None:
                warnings.append(str(exc))
    return providers
