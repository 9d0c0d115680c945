"""Engine configuration: every tunable in one JSON-serializable record.

The analysis cache key is the hash of the analysis-relevant subset, so
changing e.g. the store path or worker count never invalidates cached
analyses, while changing a threshold does.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .core import ClassificationThresholds, ValidationError, canonical_dumps
from .raster import CannyParams, HoughParams

STORE_ENV_VAR = "FOCUSVIEW_STORE"

PROVIDER_NAMES = (
    "object_detector",
    "saliency",
    "fine_segmenter",
    "ocr",
    "asr",
    "speech_enhancer",
    "inpaint",
)

PROVIDER_TYPES = ("auto", "fixture", "external-command", "none")


@dataclass(frozen=True)
class ProviderSpec:
    """How one model-backed step is supplied: sidecar fixtures when present
    ("auto"), a required fixture file, an external command, or disabled."""

    type: str = "auto"
    path: str | None = None
    command: list[str] | None = None

    def __post_init__(self):
        if self.type not in PROVIDER_TYPES:
            raise ValidationError(f"unknown provider type {self.type!r}")
        if self.type == "external-command" and not self.command:
            raise ValidationError("external-command provider needs a command")

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"type": self.type}
        if self.path:
            out["path"] = self.path
        if self.command:
            out["command"] = list(self.command)
        return out

    @classmethod
    def from_json(cls, data: dict[str, Any] | str) -> "ProviderSpec":
        if isinstance(data, str):
            return cls(type=data)
        return cls(type=data.get("type", "auto"), path=data.get("path"),
                   command=data.get("command"))


@dataclass
class EngineConfig:
    thresholds: ClassificationThresholds = field(default_factory=ClassificationThresholds)
    canny: CannyParams = field(default_factory=CannyParams)
    hough: HoughParams = field(default_factory=HoughParams)
    analysis_fps: float = 2.0
    blur_sigma: float = 12.0
    speaker_height_frac: float = 0.7
    content_fit_frac: float = 0.9
    track_gap_frames: int = 15
    providers: dict[str, ProviderSpec] = field(
        default_factory=lambda: {name: ProviderSpec() for name in PROVIDER_NAMES})
    transcoder: dict[str, str] | None = None  # {"extract": tmpl, "mux": tmpl}
    store_path: str = "focusview-store"
    max_workers: int = 2

    def __post_init__(self):
        if self.analysis_fps <= 0:
            raise ValidationError("analysis_fps must be positive")
        for name in self.providers:
            if name not in PROVIDER_NAMES:
                raise ValidationError(f"unknown provider {name!r}")
        for name in PROVIDER_NAMES:
            self.providers.setdefault(name, ProviderSpec())

    def to_json(self) -> dict[str, Any]:
        return {
            "thresholds": self.thresholds.to_json(),
            "canny": self.canny.to_json(),
            "hough": self.hough.to_json(),
            "analysis_fps": self.analysis_fps,
            "blur_sigma": self.blur_sigma,
            "speaker_height_frac": self.speaker_height_frac,
            "content_fit_frac": self.content_fit_frac,
            "track_gap_frames": self.track_gap_frames,
            "providers": {k: v.to_json() for k, v in sorted(self.providers.items())},
            "transcoder": self.transcoder,
            "store_path": self.store_path,
            "max_workers": self.max_workers,
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "EngineConfig":
        kwargs: dict[str, Any] = {}
        if "thresholds" in data:
            kwargs["thresholds"] = ClassificationThresholds.from_json(data["thresholds"])
        if "canny" in data:
            kwargs["canny"] = CannyParams.from_json(data["canny"])
        if "hough" in data:
            kwargs["hough"] = HoughParams.from_json(data["hough"])
        for key in ("analysis_fps", "blur_sigma", "speaker_height_frac",
                    "content_fit_frac", "track_gap_frames", "transcoder",
                    "store_path", "max_workers"):
            if key in data:
                kwargs[key] = data[key]
        if "providers" in data:
            kwargs["providers"] = {k: ProviderSpec.from_json(v)
                                   for k, v in data["providers"].items()}
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "EngineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))

    def resolved_store_path(self) -> Path:
        return Path(os.environ.get(STORE_ENV_VAR, self.store_path))

    def analysis_hash(self) -> str:
        """Cache key over everything that changes analysis output."""
        relevant = {
            "thresholds": self.thresholds.to_json(),
            "canny": self.canny.to_json(),
            "hough": self.hough.to_json(),
            "analysis_fps": self.analysis_fps,
            "track_gap_frames": self.track_gap_frames,
            "providers": {k: v.to_json() for k, v in sorted(self.providers.items())},
        }
        return hashlib.sha256(canonical_dumps(relevant).encode()).hexdigest()[:16]

    def render_hash_fields(self) -> dict[str, Any]:
        """The config subset folded into render cache keys."""
        return {
            "analysis": self.analysis_hash(),
            "blur_sigma": self.blur_sigma,
            "speaker_height_frac": self.speaker_height_frac,
            "content_fit_frac": self.content_fit_frac,
        }
