"""Per-frame element detection and temporal track aggregation.

Rectangle detection is fully in-engine (edges -> lines -> four-line
assembly). Humans, televisions, saliency, fine masks, and OCR come from
providers (see providers.py); a center-weighted heuristic stands in when no
saliency provider is configured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Sequence

import numpy as np

from .core import (
    ClassificationThresholds,
    FrameBuffer,
    Mask,
    Rect,
    ValidationError,
    rect_contains,
    rect_iou,
)
from .raster import (
    CannyParams,
    HoughParams,
    LineSegment,
    canny_edges,
    hough_lines_p,
)


class DetectionKind(Enum):
    HUMAN = "human"
    TELEVISION = "television"
    RECT_OVERLAY = "rect_overlay"
    TEXT_OVERLAY = "text_overlay"


class CentroidBand(Enum):
    TOP_THIRD = "top_third"
    MIDDLE_THIRD = "middle_third"
    BOTTOM_THIRD = "bottom_third"


@dataclass(frozen=True, eq=False)
class Detection:
    frame_index: int
    kind: DetectionKind
    rect: Rect
    score: float = 1.0
    mask: Mask | None = None

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValidationError(f"score must be in [0,1], got {self.score}")

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "frame_index": self.frame_index,
            "kind": self.kind.value,
            "rect": self.rect.to_json(),
            "score": self.score,
        }
        if self.mask is not None:
            out["mask"] = self.mask.to_json()
        return out

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "Detection":
        return cls(
            frame_index=int(data["frame_index"]),
            kind=DetectionKind(data["kind"]),
            rect=Rect.from_json(data["rect"]),
            score=float(data.get("score", 1.0)),
            mask=Mask.from_json(data["mask"]) if data.get("mask") else None,
        )


@dataclass
class ElementTrack:
    """A detection aggregated over time, with the statistics the
    content/auxiliary rules consume."""

    track_id: int
    kind: DetectionKind
    per_frame: dict[int, Rect] = field(default_factory=dict)
    masks: dict[int, Mask] = field(default_factory=dict)
    persistence: float = 0.0
    max_coverage_w: float = 0.0
    max_coverage_h: float = 0.0
    centroid_band: CentroidBand = CentroidBand.MIDDLE_THIRD

    def finalize(self, total_frames: int, frame_w: int, frame_h: int,
                 band_bounds: tuple[float, float] = (1 / 3, 2 / 3)) -> None:
        """Compute persistence, coverage maxima, and the median-centroid band."""
        if total_frames <= 0:
            raise ValidationError("total_frames must be positive")
        self.persistence = len(self.per_frame) / total_frames
        rects = list(self.per_frame.values())
        self.max_coverage_w = max(r.w / frame_w for r in rects)
        self.max_coverage_h = max(r.h / frame_h for r in rects)
        median_cy = float(np.median([r.center()[1] for r in rects]))
        low, high = band_bounds
        if median_cy < low * frame_h:
            self.centroid_band = CentroidBand.TOP_THIRD
        elif median_cy < high * frame_h:
            self.centroid_band = CentroidBand.MIDDLE_THIRD
        else:
            self.centroid_band = CentroidBand.BOTTOM_THIRD

    def frame_indices(self) -> list[int]:
        return sorted(self.per_frame)

    def rect_at_or_before(self, frame_index: int) -> Rect | None:
        """Latest known rect at or before frame_index (hold interpolation)."""
        best = None
        for fi in self.per_frame:
            if fi <= frame_index and (best is None or fi > best):
                best = fi
        if best is None:
            first = min(self.per_frame, default=None)
            return self.per_frame[first] if first is not None else None
        return self.per_frame[best]

    def mask_at_or_before(self, frame_index: int) -> Mask | None:
        if not self.masks:
            return None
        candidates = [fi for fi in self.masks if fi <= frame_index]
        key = max(candidates) if candidates else min(self.masks)
        return self.masks[key]

    def to_json(self) -> dict[str, Any]:
        return {
            "track_id": self.track_id,
            "kind": self.kind.value,
            "per_frame": {str(fi): r.to_json() for fi, r in sorted(self.per_frame.items())},
            "masks": {str(fi): m.to_json() for fi, m in sorted(self.masks.items())},
            "persistence": self.persistence,
            "max_coverage_w": self.max_coverage_w,
            "max_coverage_h": self.max_coverage_h,
            "centroid_band": self.centroid_band.value,
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "ElementTrack":
        return cls(
            track_id=int(data["track_id"]),
            kind=DetectionKind(data["kind"]),
            per_frame={int(fi): Rect.from_json(r) for fi, r in data["per_frame"].items()},
            masks={int(fi): Mask.from_json(m) for fi, m in data.get("masks", {}).items()},
            persistence=float(data["persistence"]),
            max_coverage_w=float(data["max_coverage_w"]),
            max_coverage_h=float(data["max_coverage_h"]),
            centroid_band=CentroidBand(data["centroid_band"]),
        )


# ---------------------------------------------------------------------------
# Rectangle detection
# ---------------------------------------------------------------------------

AXIS_ANGLE_TOL_DEG = 5.0
CORNER_TOL_PX = 4.0


def _snap_segments(segments: Sequence[LineSegment]) -> tuple[list[tuple[int, int, int]], list[tuple[int, int, int]]]:
    """Split segments into horizontals (y, x_lo, x_hi) and verticals
    (x, y_lo, y_hi), snapped at their midpoints; everything else is dropped."""
    horizontals: list[tuple[int, int, int]] = []
    verticals: list[tuple[int, int, int]] = []
    for seg in segments:
        angle = seg.angle_deg
        dist_h = min(angle, 180.0 - angle)
        dist_v = abs(angle - 90.0)
        if dist_h <= AXIS_ANGLE_TOL_DEG:
            y = int(round((seg.p0[1] + seg.p1[1]) / 2.0))
            x_lo, x_hi = sorted((seg.p0[0], seg.p1[0]))
            horizontals.append((y, x_lo, x_hi))
        elif dist_v <= AXIS_ANGLE_TOL_DEG:
            x = int(round((seg.p0[0] + seg.p1[0]) / 2.0))
            y_lo, y_hi = sorted((seg.p0[1], seg.p1[1]))
            verticals.append((x, y_lo, y_hi))
    return horizontals, verticals


def _near(a: float, b: float, ax: float, bx: float, tol: float) -> bool:
    return math.hypot(a - b, ax - bx) <= tol


def detect_rectangles(frame: FrameBuffer,
                      canny: CannyParams | None = None,
                      hough: HoughParams | None = None,
                      thr: ClassificationThresholds | None = None,
                      corner_tol: float = CORNER_TOL_PX) -> list[Rect]:
    """Find axis-aligned rectangles formed by detected line quadruples.

    Pipeline: edge detection -> line extraction -> axis filtering/snapping ->
    {top,bottom} x {left,right} assembly with corner tolerance -> area floor
    -> enclosure merging to a fixed point.
    """
    thr = thr or ClassificationThresholds()
    segments = hough_lines_p(canny_edges(frame, canny), hough)
    horizontals, verticals = _snap_segments(segments)

    candidates: list[Rect] = []
    for ti in range(len(horizontals)):
        for bi in range(len(horizontals)):
            yt, txl, txr = horizontals[ti]
            yb, bxl, bxr = horizontals[bi]
            if yb - yt < 1:
                continue
            for left in verticals:
                xl, lyt, lyb = left
                # left side must run from ~top to ~bottom at ~the shared x
                if not (_near(xl, txl, lyt, yt, corner_tol) and _near(xl, bxl, lyb, yb, corner_tol)):
                    continue
                for right in verticals:
                    xr, ryt, ryb = right
                    if xr - xl < 1:
                        continue
                    if not (_near(xr, txr, ryt, yt, corner_tol) and _near(xr, bxr, ryb, yb, corner_tol)):
                        continue
                    x = max(0, xl)
                    y = max(0, yt)
                    w = xr - xl
                    h = yb - yt
                    if w >= 1 and h >= 1:
                        candidates.append(Rect(x, y, w, h))

    frame_area = frame.width * frame.height
    floor = thr.min_rect_area_frac * frame_area
    candidates = [r for r in candidates if r.area() >= floor]
    return merge_enclosed(candidates)


def merge_enclosed(rects: list[Rect], tol: int = 2) -> list[Rect]:
    """Repeatedly drop rects enclosed (within tol) by another, keeping the
    outer, until no enclosed pair remains."""
    out = list(dict.fromkeys(rects))
    changed = True
    while changed:
        changed = False
        for i, outer in enumerate(out):
            for j, inner in enumerate(out):
                if i == j:
                    continue
                if rect_contains(outer, inner, tol=tol):
                    # near-identical pairs contain each other; keep the larger
                    if rect_contains(inner, outer, tol=tol) and inner.area() > outer.area():
                        continue
                    del out[j]
                    changed = True
                    break
            if changed:
                break
    return out


# ---------------------------------------------------------------------------
# Speaker selection
# ---------------------------------------------------------------------------

def mean_saliency(saliency: np.ndarray, rect: Rect) -> float:
    clipped = rect.clipped(saliency.shape[1], saliency.shape[0])
    if clipped is None:
        return 0.0
    region = saliency[clipped.y:clipped.y2, clipped.x:clipped.x2]
    return float(region.mean())


def fallback_saliency_score(rect: Rect, frame_w: int, frame_h: int) -> float:
    """Center-weighted area score used when no saliency provider is set:
    area * exp(-d^2 / (2 * (0.25 * diag)^2)) with d the centroid-to-center
    distance."""
    cx, cy = rect.center()
    d = math.hypot(cx - frame_w / 2.0, cy - frame_h / 2.0)
    sigma = 0.25 * math.hypot(frame_w, frame_h)
    return rect.area() * math.exp(-(d ** 2) / (2.0 * sigma ** 2))


def select_speaker(humans: Sequence[Detection],
                   saliency: np.ndarray | None,
                   frame_size: tuple[int, int] | None = None) -> Detection | None:
    """Pick the most salient human; ties break to larger area, then smaller x.

    With no saliency raster, falls back to the center-weighted area score
    (frame_size required in that case).
    """
    if not humans:
        return None
    if saliency is not None:
        h, w = saliency.shape

        def score(det: Detection) -> float:
            return mean_saliency(saliency, det.rect)
    else:
        if frame_size is None:
            raise ValidationError("frame_size required without a saliency raster")
        w, h = frame_size

        def score(det: Detection) -> float:
            return fallback_saliency_score(det.rect, w, h)

    return max(humans, key=lambda d: (score(d), d.rect.area(), -d.rect.x))


def refine_speaker_mask(frame: FrameBuffer, speaker: Detection,
                        segmenter: "Callable[[FrameBuffer, Rect], Mask] | None" = None,
                        warnings: list[str] | None = None) -> Mask:
    """Fine mask for the speaker, clipped to the speaker rect.

    Falls back to a rect-shaped mask when no segmenter is configured or the
    provider fails (the failure is recorded in `warnings`).
    """
    rect_mask = Mask.from_rect(speaker.rect, frame.width, frame.height)
    if segmenter is None:
        return rect_mask
    try:
        fine = segmenter(frame, speaker.rect)
    except Exception as exc:  # provider contract: fall back, never crash
        if warnings is not None:
            warnings.append(f"fine segmenter failed on frame {frame.frame_index}: {exc}")
        return rect_mask
    if fine.width != frame.width or fine.height != frame.height:
        if warnings is not None:
            warnings.append(
                f"fine segmenter returned {fine.width}x{fine.height} for "
                f"{frame.width}x{frame.height} frame {frame.frame_index}; using rect"
            )
        return rect_mask
    return Mask(frame.width, frame.height, fine.bits & rect_mask.bits)


# ---------------------------------------------------------------------------
# Track building
# ---------------------------------------------------------------------------

def build_tracks(detections_by_frame: dict[int, Sequence[Detection]],
                 thr: ClassificationThresholds | None = None,
                 frame_size: tuple[int, int] | None = None,
                 max_gap: int = 15) -> list[ElementTrack]:
    """Greedy IoU association of per-frame detections into tracks.

    Each detection joins the open same-kind track whose last rect overlaps
    it best (IoU >= thr.track_iou_min); otherwise it starts a new track.
    Tracks survive gaps of up to max_gap missing frames. Statistics are
    finalized over the set of input frames.
    """
    thr = thr or ClassificationThresholds()
    frames = sorted(detections_by_frame)
    if not frames:
        return []
    positions = {fi: pos for pos, fi in enumerate(frames)}

    tracks: list[ElementTrack] = []
    last_rect: dict[int, Rect] = {}
    last_pos: dict[int, int] = {}
    next_id = 0

    for fi in frames:
        pos = positions[fi]
        claimed: set[int] = set()
        for det in detections_by_frame[fi]:
            best_track = None
            best_iou = 0.0
            for t in tracks:
                if t.kind is not det.kind or t.track_id in claimed:
                    continue
                if pos - last_pos[t.track_id] - 1 > max_gap:
                    continue
                iou = rect_iou(last_rect[t.track_id], det.rect)
                if iou > best_iou:
                    best_iou = iou
                    best_track = t
            if best_track is not None and best_iou >= thr.track_iou_min:
                t = best_track
            else:
                t = ElementTrack(track_id=next_id, kind=det.kind)
                next_id += 1
                tracks.append(t)
            t.per_frame[fi] = det.rect
            if det.mask is not None:
                t.masks[fi] = det.mask
            last_rect[t.track_id] = det.rect
            last_pos[t.track_id] = pos
            claimed.add(t.track_id)

    if frame_size is None:
        all_rects = [r for t in tracks for r in t.per_frame.values()]
        frame_size = (max(r.x2 for r in all_rects), max(r.y2 for r in all_rects)) if all_rects else (1, 1)
    fw, fh = frame_size
    for t in tracks:
        t.finalize(len(frames), fw, fh, thr.central_band)
    return tracks
