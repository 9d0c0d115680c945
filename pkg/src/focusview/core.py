"""Shared domain types: frames, geometry, masks, presets, thresholds.

All types here are immutable value objects and safe to share across
threads. Every type serializes to JSON with lower_snake_case field names;
colors serialize as uppercase "#RRGGBB" hex.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np


class FocusViewError(Exception):
    """Base class for engine errors."""


class ValidationError(FocusViewError):
    """A value violated a type invariant."""


# ---------------------------------------------------------------------------
# Enumerations
# ---------------------------------------------------------------------------

class ElementClass(Enum):
    SPEAKER = "speaker"
    CONTENT = "content"
    AUXILIARY = "auxiliary"
    BACKGROUND = "background"


class LayoutMode(Enum):
    ORIGINAL = "original"
    SPEAKER_FOCUS = "speaker_focus"
    CONTENT_FOCUS = "content_focus"
    AUXILIARY_REMOVAL = "auxiliary_removal"


class BackgroundMode(Enum):
    ORIGINAL = "original"
    BLUR = "blur"
    SOLID_WHITE = "solid_white"
    SOLID_DARK = "solid_dark"
    SOLID_PEACH = "solid_peach"


class AudioMode(Enum):
    ORIGINAL = "original"
    DENOISE_ENHANCE = "denoise_enhance"


# The three replacement colors offered for background removal.
SOLID_COLORS: dict[BackgroundMode, str] = {
    BackgroundMode.SOLID_WHITE: "#FFFFFF",
    BackgroundMode.SOLID_DARK: "#3D3D3D",
    BackgroundMode.SOLID_PEACH: "#EDD1B0",
}


def parse_color(hex_str: str) -> tuple[int, int, int]:
    """Parse "#RRGGBB" into an (r, g, b) tuple."""
    if len(hex_str) != 7 or not hex_str.startswith("#"):
        raise ValidationError(f"bad color {hex_str!r}, expected #RRGGBB")
    try:
        return tuple(int(hex_str[i : i + 2], 16) for i in (1, 3, 5))  # type: ignore[return-value]
    except ValueError as exc:
        raise ValidationError(f"bad color {hex_str!r}: {exc}") from None


def format_color(rgb: tuple[int, int, int]) -> str:
    return "#{:02X}{:02X}{:02X}".format(*rgb)


def solid_rgb(mode: BackgroundMode) -> tuple[int, int, int]:
    return parse_color(SOLID_COLORS[mode])


# ---------------------------------------------------------------------------
# Raster substrate
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FrameBuffer:
    """A single RGB8 video frame.

    `pixels` is a read-only (height, width, 3) uint8 array. `frame_index`
    is authoritative for ordering; `timestamp` is informational.
    """

    width: int
    height: int
    pixels: np.ndarray
    frame_index: int = 0
    timestamp: float = 0.0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValidationError("frame dimensions must be >= 1")
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.shape != (self.height, self.width, 3):
            raise ValidationError(
                f"pixel array shape {px.shape} != {(self.height, self.width, 3)}"
            )
        if self.timestamp < 0:
            raise ValidationError("timestamp must be >= 0")
        px = np.ascontiguousarray(px)
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_array(cls, arr: np.ndarray, frame_index: int = 0,
                   timestamp: float = 0.0) -> "FrameBuffer":
        arr = np.asarray(arr, dtype=np.uint8)
        h, w = arr.shape[:2]
        return cls(width=w, height=h, pixels=arr, frame_index=frame_index,
                   timestamp=timestamp)

    @classmethod
    def filled(cls, width: int, height: int, rgb: tuple[int, int, int],
               frame_index: int = 0, timestamp: float = 0.0) -> "FrameBuffer":
        arr = np.empty((height, width, 3), dtype=np.uint8)
        arr[:] = rgb
        return cls(width, height, arr, frame_index, timestamp)

    def with_pixels(self, arr: np.ndarray) -> "FrameBuffer":
        """Same frame metadata, new pixel content."""
        return FrameBuffer.from_array(arr, self.frame_index, self.timestamp)

    def same_pixels(self, other: "FrameBuffer") -> bool:
        return (self.width == other.width and self.height == other.height
                and np.array_equal(self.pixels, other.pixels))


@dataclass(frozen=True)
class Rect:
    """Axis-aligned pixel rectangle, top-left anchored."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.x < 0 or self.y < 0:
            raise ValidationError(f"rect origin must be >= 0, got ({self.x},{self.y})")
        if self.w < 1 or self.h < 1:
            raise ValidationError(f"rect size must be >= 1, got {self.w}x{self.h}")

    def area(self) -> int:
        return self.w * self.h

    @property
    def x2(self) -> int:
        return self.x + self.w

    @property
    def y2(self) -> int:
        return self.y + self.h

    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def clipped(self, width: int, height: int) -> "Rect | None":
        """Intersection with the frame, or None if fully outside."""
        x1, y1 = max(self.x, 0), max(self.y, 0)
        x2, y2 = min(self.x2, width), min(self.y2, height)
        if x2 - x1 < 1 or y2 - y1 < 1:
            return None
        return Rect(x1, y1, x2 - x1, y2 - y1)

    def to_json(self) -> list[int]:
        return [self.x, self.y, self.w, self.h]

    @classmethod
    def from_json(cls, data: list[int]) -> "Rect":
        if len(data) != 4:
            raise ValidationError(f"rect needs 4 ints, got {data!r}")
        return cls(*(int(v) for v in data))


def rect_contains(outer: Rect, inner: Rect, tol: int = 2) -> bool:
    """True iff every point of inner lies inside outer, allowing the inner
    rect to exceed the outer bounds by up to tol pixels on each side."""
    return (inner.x >= outer.x - tol
            and inner.y >= outer.y - tol
            and inner.x2 <= outer.x2 + tol
            and inner.y2 <= outer.y2 + tol)


def rect_iou(a: Rect, b: Rect) -> float:
    """Intersection-over-union of two rectangles, in [0, 1]."""
    ix = max(0, min(a.x2, b.x2) - max(a.x, b.x))
    iy = max(0, min(a.y2, b.y2) - max(a.y, b.y))
    inter = ix * iy
    union = a.area() + b.area() - inter
    return inter / union if union > 0 else 0.0


@dataclass(frozen=True, eq=False)
class Mask:
    """Binary pixel region matching the dimensions of the frame it annotates."""

    width: int
    height: int
    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=bool)
        if b.shape != (self.height, self.width):
            raise ValidationError(
                f"mask shape {b.shape} != {(self.height, self.width)}"
            )
        b = np.ascontiguousarray(b)
        b.flags.writeable = False
        object.__setattr__(self, "bits", b)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Mask":
        arr = np.asarray(arr, dtype=bool)
        return cls(width=arr.shape[1], height=arr.shape[0], bits=arr)

    @classmethod
    def empty(cls, width: int, height: int) -> "Mask":
        return cls(width, height, np.zeros((height, width), dtype=bool))

    @classmethod
    def full(cls, width: int, height: int) -> "Mask":
        return cls(width, height, np.ones((height, width), dtype=bool))

    @classmethod
    def from_rect(cls, rect: Rect, width: int, height: int) -> "Mask":
        bits = np.zeros((height, width), dtype=bool)
        clipped = rect.clipped(width, height)
        if clipped is not None:
            bits[clipped.y:clipped.y2, clipped.x:clipped.x2] = True
        return cls(width, height, bits)

    def count(self) -> int:
        return int(self.bits.sum())

    def same_bits(self, other: "Mask") -> bool:
        return (self.width == other.width and self.height == other.height
                and np.array_equal(self.bits, other.bits))

    def to_json(self) -> dict[str, Any]:
        """Row-major run-length encoding of the True runs."""
        flat = self.bits.ravel()
        runs: list[int] = []
        idx = np.flatnonzero(np.diff(np.concatenate(([0], flat.view(np.uint8), [0]))))
        for start, stop in zip(idx[0::2], idx[1::2]):
            runs.extend((int(start), int(stop - start)))
        return {"width": self.width, "height": self.height, "runs": runs}

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "Mask":
        bits = np.zeros(data["height"] * data["width"], dtype=bool)
        runs = data["runs"]
        for i in range(0, len(runs), 2):
            bits[runs[i]:runs[i] + runs[i + 1]] = True
        return cls(data["width"], data["height"],
                   bits.reshape(data["height"], data["width"]))


# ---------------------------------------------------------------------------
# Classification thresholds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassificationThresholds:
    """Every numeric constant behind the content/auxiliary rules.

    Defaults are the published constants: overlays under 5% of the frame
    area are discarded; a long-term overlay must persist for more than 95%
    of the duration and cover more than 50% of the frame in both axes; a
    central overlay sits in the middle third of the frame height and spans
    at least 30% of the frame's width or height.
    """

    min_rect_area_frac: float = 0.05
    long_term_persistence: float = 0.95
    long_term_coverage: float = 0.50
    central_band: tuple[float, float] = (1.0 / 3.0, 2.0 / 3.0)
    central_min_dim_frac: float = 0.30
    track_iou_min: float = 0.50

    def __post_init__(self):
        scalars = {
            "min_rect_area_frac": self.min_rect_area_frac,
            "long_term_persistence": self.long_term_persistence,
            "long_term_coverage": self.long_term_coverage,
            "central_min_dim_frac": self.central_min_dim_frac,
            "track_iou_min": self.track_iou_min,
        }
        for name, value in scalars.items():
            if not 0.0 < value <= 1.0:
                raise ValidationError(f"{name} must be in (0, 1], got {value}")
        low, high = self.central_band
        if not (0.0 < low < high <= 1.0):
            raise ValidationError(f"central_band must satisfy 0 < low < high <= 1, got {self.central_band}")

    def to_json(self) -> dict[str, Any]:
        return {
            "min_rect_area_frac": self.min_rect_area_frac,
            "long_term_persistence": self.long_term_persistence,
            "long_term_coverage": self.long_term_coverage,
            "central_band": list(self.central_band),
            "central_min_dim_frac": self.central_min_dim_frac,
            "track_iou_min": self.track_iou_min,
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "ClassificationThresholds":
        kwargs = dict(data)
        if "central_band" in kwargs:
            kwargs["central_band"] = tuple(kwargs["central_band"])
        return cls(**kwargs)


# ---------------------------------------------------------------------------
# Caption style (value object lives here; the engine lives in captions.py)
# ---------------------------------------------------------------------------

class ColorPair(Enum):
    WHITE_ON_BLACK = "white_on_black"
    BLACK_ON_WHITE = "black_on_white"
    YELLOW_ON_BLUE = "yellow_on_blue"
    BLUE_ON_YELLOW = "blue_on_yellow"


class CaptionFont(Enum):
    STANDARD = "standard"
    BIONIC_STYLE = "bionic_style"


class CaptionSize(Enum):
    """Pixel sizes at the 720p reference height."""

    SMALL = 16
    MEDIUM = 24
    LARGE = 32


class CaptionPosition(Enum):
    TOP = "top"
    BOTTOM = "bottom"


# fg, bg per pair
COLOR_PAIR_RGB: dict[ColorPair, tuple[tuple[int, int, int], tuple[int, int, int]]] = {
    ColorPair.WHITE_ON_BLACK: ((255, 255, 255), (0, 0, 0)),
    ColorPair.BLACK_ON_WHITE: ((0, 0, 0), (255, 255, 255)),
    ColorPair.YELLOW_ON_BLUE: ((255, 255, 0), (0, 0, 170)),
    ColorPair.BLUE_ON_YELLOW: ((0, 0, 170), (255, 255, 0)),
}


@dataclass(frozen=True)
class CaptionStyle:
    """Resolved caption appearance. `position` is either a named anchor or a
    normalized (x, y) center in [0, 1] x [0, 1] (set by dragging)."""

    color_pair: ColorPair = ColorPair.WHITE_ON_BLACK
    font: CaptionFont = CaptionFont.STANDARD
    size: CaptionSize = CaptionSize.MEDIUM
    position: CaptionPosition | tuple[float, float] = CaptionPosition.BOTTOM
    dynamic_tracking: bool = False

    def __post_init__(self):
        if isinstance(self.position, tuple):
            x, y = self.position
            if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
                raise ValidationError(f"normalized position out of [0,1]: {self.position}")

    def to_json(self) -> dict[str, Any]:
        pos: Any
        if isinstance(self.position, CaptionPosition):
            pos = self.position.value
        else:
            pos = list(self.position)
        return {
            "color_pair": self.color_pair.value,
            "font": self.font.value,
            "size": self.size.name.lower(),
            "position": pos,
            "dynamic_tracking": self.dynamic_tracking,
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "CaptionStyle":
        pos_raw = data.get("position", "bottom")
        position: CaptionPosition | tuple[float, float]
        if isinstance(pos_raw, str):
            position = CaptionPosition(pos_raw)
        else:
            position = (float(pos_raw[0]), float(pos_raw[1]))
        size_raw = data.get("size", "medium")
        try:
            size = CaptionSize[size_raw.upper()] if isinstance(size_raw, str) else CaptionSize(int(size_raw))
        except (KeyError, ValueError):
            raise ValidationError(f"unknown caption size {size_raw!r}") from None
        try:
            return cls(
                color_pair=ColorPair(data.get("color_pair", "white_on_black")),
                font=CaptionFont(data.get("font", "standard")),
                size=size,
                position=position,
                dynamic_tracking=bool(data.get("dynamic_tracking", False)),
            )
        except ValueError as exc:
            raise ValidationError(str(exc)) from None


# ---------------------------------------------------------------------------
# Customization preset
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CustomizationPreset:
    """One point in the layout x background x caption x audio space.

    caption=None means captions are off.
    """

    layout: LayoutMode = LayoutMode.ORIGINAL
    background: BackgroundMode = BackgroundMode.ORIGINAL
    caption: CaptionStyle | None = None
    audio: AudioMode = AudioMode.ORIGINAL

    def is_identity(self) -> bool:
        """True when the preset changes nothing visually or audibly."""
        return (self.layout is LayoutMode.ORIGINAL
                and self.background is BackgroundMode.ORIGINAL
                and self.caption is None
                and self.audio is AudioMode.ORIGINAL)

    def to_json(self) -> dict[str, Any]:
        return {
            "layout": self.layout.value,
            "background": self.background.value,
            "caption": self.caption.to_json() if self.caption else None,
            "audio": self.audio.value,
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "CustomizationPreset":
        try:
            layout = LayoutMode(data.get("layout", "original"))
            background = BackgroundMode(data.get("background", "original"))
            audio = AudioMode(data.get("audio", "original"))
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
        caption_raw = data.get("caption")
        caption = CaptionStyle.from_json(caption_raw) if caption_raw else None
        return cls(layout=layout, background=background, caption=caption, audio=audio)


# ---------------------------------------------------------------------------
# PCM audio carrier
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PcmAudio:
    """Interleaved signed 16-bit PCM."""

    sample_rate: int
    channels: int
    samples: np.ndarray

    def __post_init__(self):
        if self.sample_rate < 1:
            raise ValidationError("sample_rate must be >= 1")
        if self.channels not in (1, 2):
            raise ValidationError(f"channels must be 1 or 2, got {self.channels}")
        s = np.asarray(self.samples, dtype=np.int16).ravel()
        if s.size % self.channels != 0:
            raise ValidationError("sample count not divisible by channel count")
        s = np.ascontiguousarray(s)
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)

    @property
    def frame_count(self) -> int:
        return self.samples.size // self.channels

    @property
    def duration(self) -> float:
        return self.frame_count / self.sample_rate


# ---------------------------------------------------------------------------
# Canonical JSON
# ---------------------------------------------------------------------------

def canonical_dumps(obj: Any) -> str:
    """Deterministic JSON used for manifests and cache keys."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
