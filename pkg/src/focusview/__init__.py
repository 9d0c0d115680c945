"""focusview: decompose informational videos into elements (speaker,
content, auxiliary overlays, background, speech) and render user-selected
customizations of layout, background, captions, and audio."""

from .core import (
    AudioMode,
    BackgroundMode,
    CaptionStyle,
    ClassificationThresholds,
    CustomizationPreset,
    ElementClass,
    FocusViewError,
    FrameBuffer,
    LayoutMode,
    Mask,
    PcmAudio,
    Rect,
    rect_contains,
    rect_iou,
)
from .classify import ClassifiedScene, TrackClass, classify_scene, classify_track
from .compose import (
    LayoutPlan,
    NoFocusTargetError,
    background_mask,
    compose_background,
    compose_frame,
    inpaint_fill,
    plan_layout,
)
from .config import EngineConfig
from .detect import Detection, DetectionKind, ElementTrack, build_tracks, detect_rectangles
from .pipeline import AnalysisManifest, Engine, JobState, RenderJob, SegmentManifest
from .store import Store

__version__ = "0.1.0"

__all__ = [
    "AnalysisManifest",
    "AudioMode",
    "BackgroundMode",
    "CaptionStyle",
    "ClassificationThresholds",
    "ClassifiedScene",
    "CustomizationPreset",
    "Detection",
    "DetectionKind",
    "ElementClass",
    "ElementTrack",
    "Engine",
    "EngineConfig",
    "FocusViewError",
    "FrameBuffer",
    "JobState",
    "LayoutMode",
    "LayoutPlan",
    "Mask",
    "NoFocusTargetError",
    "PcmAudio",
    "Rect",
    "RenderJob",
    "SegmentManifest",
    "Store",
    "TrackClass",
    "background_mask",
    "build_tracks",
    "classify_scene",
    "classify_track",
    "compose_background",
    "compose_frame",
    "detect_rectangles",
    "inpaint_fill",
    "plan_layout",
    "rect_contains",
    "rect_iou",
]
