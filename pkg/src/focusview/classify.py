"""Content vs. auxiliary classification of element tracks.

A track is main content if it is a television, a long-term large overlay,
or a large central overlay; everything else is auxiliary. The persistence
and coverage comparisons of the long-term rule are strict ("more than"),
the central rule's dimension comparison is inclusive ("at least").
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .core import ClassificationThresholds
from .detect import CentroidBand, DetectionKind, ElementTrack


class TrackClass(Enum):
    CONTENT = "content"
    AUXILIARY = "auxiliary"


def classify_track(track: ElementTrack, thr: ClassificationThresholds | None = None) -> TrackClass:
    """Apply the three main-content rules to a finalized track."""
    thr = thr or ClassificationThresholds()
    if track.kind is DetectionKind.TELEVISION:
        return TrackClass.CONTENT
    long_term = (track.persistence > thr.long_term_persistence
                 and track.max_coverage_w > thr.long_term_coverage
                 and track.max_coverage_h > thr.long_term_coverage)
    if long_term:
        return TrackClass.CONTENT
    central = (track.centroid_band is CentroidBand.MIDDLE_THIRD
               and (track.max_coverage_w >= thr.central_min_dim_frac
                    or track.max_coverage_h >= thr.central_min_dim_frac))
    if central:
        return TrackClass.CONTENT
    return TrackClass.AUXILIARY


@dataclass
class ClassifiedScene:
    """A video's elements split by role. Every non-speaker track appears in
    exactly one of content_tracks / auxiliary_tracks."""

    speaker_track: ElementTrack | None = None
    content_tracks: list[ElementTrack] = field(default_factory=list)
    auxiliary_tracks: list[ElementTrack] = field(default_factory=list)
    thresholds: ClassificationThresholds = field(default_factory=ClassificationThresholds)

    def all_tracks(self) -> list[ElementTrack]:
        tracks = list(self.content_tracks) + list(self.auxiliary_tracks)
        if self.speaker_track is not None:
            tracks.append(self.speaker_track)
        return tracks

    def to_json(self) -> dict[str, Any]:
        return {
            "speaker_track": self.speaker_track.to_json() if self.speaker_track else None,
            "content_tracks": [t.to_json() for t in self.content_tracks],
            "auxiliary_tracks": [t.to_json() for t in self.auxiliary_tracks],
            "thresholds": self.thresholds.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "ClassifiedScene":
        return cls(
            speaker_track=ElementTrack.from_json(data["speaker_track"]) if data.get("speaker_track") else None,
            content_tracks=[ElementTrack.from_json(t) for t in data["content_tracks"]],
            auxiliary_tracks=[ElementTrack.from_json(t) for t in data["auxiliary_tracks"]],
            thresholds=ClassificationThresholds.from_json(data["thresholds"]),
        )


def classify_scene(tracks: list[ElementTrack],
                   speaker: ElementTrack | None = None,
                   thr: ClassificationThresholds | None = None) -> ClassifiedScene:
    """Classify every non-speaker track into content or auxiliary."""
    thr = thr or ClassificationThresholds()
    scene = ClassifiedScene(speaker_track=speaker, thresholds=thr)
    for track in tracks:
        if speaker is not None and track.track_id == speaker.track_id:
            continue
        if classify_track(track, thr) is TrackClass.CONTENT:
            scene.content_tracks.append(track)
        else:
            scene.auxiliary_tracks.append(track)
    return scene
