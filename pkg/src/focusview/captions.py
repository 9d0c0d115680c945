"""Caption engine: VTT parsing and emission, per-word highlight schedules,
style resolution, and burn-in rendering.

Word durations are estimated from time-per-character within each cue
(spaces excluded, punctuation counted with its word); the last word absorbs
rounding so the word intervals tile the cue exactly. Word intervals are
half-open, with boundaries belonging to the later word.
"""

from __future__ import annotations

import math
import re
from bisect import bisect_right
from dataclasses import dataclass
from typing import Any

import numpy as np

from .core import (
    COLOR_PAIR_RGB,
    CaptionPosition,
    CaptionStyle,
    FocusViewError,
    FrameBuffer,
    ValidationError,
)
from .fonts import GLYPH_H, GLYPH_W, render_text_bits

REFERENCE_HEIGHT = 720  # px sizes in CaptionStyle are relative to this
TOP_CENTER_FRAC = 0.08
BOTTOM_CENTER_FRAC = 0.92


class VttParseError(FocusViewError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class CaptionCue:
    index: int
    start: float
    end: float
    text: str

    def __post_init__(self):
        if not self.start < self.end:
            raise ValidationError(f"cue {self.index}: start must be < end")

    def to_json(self) -> dict[str, Any]:
        return {"index": self.index, "start": self.start, "end": self.end,
                "text": self.text}

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "CaptionCue":
        return cls(index=int(data["index"]), start=float(data["start"]),
                   end=float(data["end"]), text=str(data["text"]))


@dataclass(frozen=True)
class WordTiming:
    word: str
    start: float
    end: float

    def to_json(self) -> dict[str, Any]:
        return {"w": self.word, "start": self.start, "end": self.end}

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "WordTiming":
        return cls(word=data["w"], start=float(data["start"]), end=float(data["end"]))


# ---------------------------------------------------------------------------
# Timestamps
# ---------------------------------------------------------------------------

_TS_RE = re.compile(r"^(\d{2,}):([0-5]\d):([0-5]\d)\.(\d{3})$")


def parse_timestamp(text: str, line: int) -> float:
    m = _TS_RE.match(text)
    if not m:
        raise VttParseError(f"malformed timestamp {text!r}", line)
    hh, mm, ss, ms = (int(g) for g in m.groups())
    return (hh * 3600_000 + mm * 60_000 + ss * 1000 + ms) / 1000.0


def format_timestamp(seconds: float) -> str:
    total_ms = round(seconds * 1000)
    hh, rem = divmod(total_ms, 3600_000)
    mm, rem = divmod(rem, 60_000)
    ss, ms = divmod(rem, 1000)
    return f"{hh:02d}:{mm:02d}:{ss:02d}.{ms:03d}"


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TAG_RE = re.compile(r"<[^>]*>")
_SKIP_BLOCKS = ("NOTE", "STYLE", "REGION")


def parse_vtt(text: str) -> list[CaptionCue]:
    """Parse WEBVTT text into sorted, non-overlapping cues.

    Multi-line cue text is joined with single spaces; inline <...> tags are
    stripped; NOTE/STYLE/REGION blocks are ignored. Errors carry the
    offending line number.
    """
    lines = text.lstrip("﻿").split("\n")
    if not lines or not lines[0].strip().startswith("WEBVTT"):
        raise VttParseError("missing WEBVTT header", 1)

    # Split into blocks of (start_line_number, lines).
    blocks: list[tuple[int, list[str]]] = []
    current: list[str] = []
    current_start = 0
    for i, raw in enumerate(lines):
        line = raw.rstrip("\r")
        if line.strip() == "":
            if current:
                blocks.append((current_start, current))
                current = []
        else:
            if not current:
                current_start = i + 1
            current.append(line)
    if current:
        blocks.append((current_start, current))

    cues: list[CaptionCue] = []
    for bi, (start_line, block) in enumerate(blocks):
        if bi == 0 and block[0].strip().startswith("WEBVTT"):
            continue  # header block (may carry metadata lines)
        if block[0].split(" ")[0] in _SKIP_BLOCKS:
            continue
        timing_at = next((k for k, ln in enumerate(block) if "-->" in ln), None)
        if timing_at is None or timing_at > 1:
            raise VttParseError("expected a cue timing line", start_line)
        timing_line_no = start_line + timing_at
        timing = block[timing_at]
        parts = timing.split("-->")
        if len(parts) != 2:
            raise VttParseError("malformed cue timing", timing_line_no)
        start = parse_timestamp(parts[0].strip(), timing_line_no)
        end_field = parts[1].strip().split(" ")[0]  # drop cue settings
        end = parse_timestamp(end_field, timing_line_no)
        if end <= start:
            raise VttParseError("cue end must be after start", timing_line_no)
        text_lines = [_TAG_RE.sub("", ln).strip() for ln in block[timing_at + 1:]]
        cue_text = " ".join(ln for ln in text_lines if ln)
        if cues and start < cues[-1].end:
            raise VttParseError("cues must be sorted and non-overlapping", timing_line_no)
        cues.append(CaptionCue(index=len(cues), start=start, end=end, text=cue_text))
    return cues


# ---------------------------------------------------------------------------
# Word timing estimation
# ---------------------------------------------------------------------------

def word_timings(cue: CaptionCue) -> list[WordTiming]:
    """Split the cue into words and give each a duration proportional to its
    character count. The last word's end is forced to the cue end."""
    words = cue.text.split()
    if not words:
        return []
    total_chars = sum(len(w) for w in words)
    if total_chars == 0:
        return []
    tpc = (cue.end - cue.start) / total_chars
    out: list[WordTiming] = []
    chars_before = 0
    for i, word in enumerate(words):
        start = cue.start + tpc * chars_before
        chars_before += len(word)
        end = cue.end if i == len(words) - 1 else cue.start + tpc * chars_before
        out.append(WordTiming(word=word, start=start, end=end))
    return out


def active_word(schedule: list[WordTiming], t: float) -> int | None:
    """Index of the word whose [start, end) interval contains t."""
    if not schedule:
        return None
    starts = [wt.start for wt in schedule]
    i = bisect_right(starts, t) - 1
    if i < 0:
        return None
    return i if t < schedule[i].end else None


# ---------------------------------------------------------------------------
# Style resolution
# ---------------------------------------------------------------------------

def resolve_style(requested: "dict[str, Any] | CaptionStyle | None") -> CaptionStyle:
    """Fill unspecified fields from the default style (white on black,
    standard font, medium size, bottom, tracking off); reject values outside
    the enumerations."""
    if requested is None:
        return CaptionStyle()
    if isinstance(requested, CaptionStyle):
        return requested
    return CaptionStyle.from_json(requested)


# ---------------------------------------------------------------------------
# Burn-in rendering
# ---------------------------------------------------------------------------

def _word_bitmaps(words: list[str], bionic: bool, scale: int):
    """Per-word scaled bitmaps plus the x offset of each word in the text
    row (in scaled pixels)."""
    bitmaps = []
    offsets = []
    space_w = 3 * scale
    x = 0
    for word in words:
        bold_prefix = math.ceil(len(word) / 2) if bionic else 0
        bits = render_text_bits(word, bold_prefix)
        if scale > 1:
            bits = np.kron(bits, np.ones((scale, scale), dtype=bool))
        bitmaps.append(bits)
        offsets.append(x)
        x += bits.shape[1] + space_w
    total_w = x - space_w if words else 0
    return bitmaps, offsets, total_w


def render_caption(frame: FrameBuffer, cue: CaptionCue,
                   schedule: list[WordTiming], style: CaptionStyle,
                   t: float) -> FrameBuffer:
    """Draw the cue in a rounded box; with dynamic tracking the word active
    at t is drawn with the pair's colors inverted. No-op when t falls
    outside the cue."""
    if not (cue.start <= t < cue.end):
        return frame
    if not schedule:
        schedule = word_timings(cue)
    words = [wt.word for wt in schedule]
    if not words:
        return frame

    fg, bg = COLOR_PAIR_RGB[style.color_pair]
    ref_scale = frame.height / REFERENCE_HEIGHT
    glyph_px = style.size.value * ref_scale
    scale = max(1, round(glyph_px / GLYPH_H))
    bionic = style.font.name == "BIONIC_STYLE"
    bitmaps, offsets, text_w = _word_bitmaps(words, bionic, scale)
    text_h = GLYPH_H * scale

    pad = 2 * scale
    box_w = min(text_w + 2 * pad, frame.width)
    box_h = text_h + 2 * pad

    if isinstance(style.position, CaptionPosition):
        cx = frame.width / 2
        cy = (TOP_CENTER_FRAC if style.position is CaptionPosition.TOP
              else BOTTOM_CENTER_FRAC) * frame.height
    else:
        cx = style.position[0] * frame.width
        cy = style.position[1] * frame.height
    box_x = int(round(cx - box_w / 2))
    box_y = int(round(cy - box_h / 2))
    box_x = max(0, min(box_x, frame.width - box_w))
    box_y = max(0, min(box_y, frame.height - box_h))

    canvas = frame.pixels.copy()
    _fill_rounded_rect(canvas, box_x, box_y, box_w, box_h, bg, radius=pad)

    highlight = active_word(schedule, t) if style.dynamic_tracking else None
    text_x = box_x + pad
    text_y = box_y + pad
    for i, (bits, off) in enumerate(zip(bitmaps, offsets)):
        wx = text_x + off
        if wx >= frame.width:
            break
        word_fg, word_bg = (bg, fg) if i == highlight else (fg, bg)
        if i == highlight:
            # inverted background chip behind the active word
            _fill_rect(canvas, wx - scale, text_y - scale,
                       bits.shape[1] + 2 * scale, text_h + 2 * scale, word_bg)
        _blit_bits(canvas, bits, wx, text_y, word_fg)
    return frame.with_pixels(canvas)


def _fill_rect(canvas: np.ndarray, x: int, y: int, w: int, h: int,
               rgb: tuple[int, int, int]) -> None:
    h_img, w_img = canvas.shape[:2]
    x0, y0 = max(0, x), max(0, y)
    x1, y1 = min(w_img, x + w), min(h_img, y + h)
    if x1 > x0 and y1 > y0:
        canvas[y0:y1, x0:x1] = rgb


def _fill_rounded_rect(canvas: np.ndarray, x: int, y: int, w: int, h: int,
                       rgb: tuple[int, int, int], radius: int) -> None:
    radius = min(radius, w // 2, h // 2)
    h_img, w_img = canvas.shape[:2]
    yy, xx = np.mgrid[0:h, 0:w]
    inside = np.ones((h, w), dtype=bool)
    if radius > 0:
        for cy, cx in ((radius, radius), (radius, w - 1 - radius),
                       (h - 1 - radius, radius), (h - 1 - radius, w - 1 - radius)):
            corner = ((yy < radius) if cy == radius else (yy > h - 1 - radius)) & \
                     ((xx < radius) if cx == radius else (xx > w - 1 - radius))
            keep = (yy - cy) ** 2 + (xx - cx) ** 2 <= radius ** 2
            inside &= ~corner | keep
    ys, xs = np.nonzero(inside)
    ys = ys + y
    xs = xs + x
    ok = (ys >= 0) & (ys < h_img) & (xs >= 0) & (xs < w_img)
    canvas[ys[ok], xs[ok]] = rgb


def _blit_bits(canvas: np.ndarray, bits: np.ndarray, x: int, y: int,
               rgb: tuple[int, int, int]) -> None:
    h_img, w_img = canvas.shape[:2]
    bh, bw = bits.shape
    x0, y0 = max(0, x), max(0, y)
    x1, y1 = min(w_img, x + bw), min(h_img, y + bh)
    if x1 <= x0 or y1 <= y0:
        return
    sub = bits[y0 - y:y1 - y, x0 - x:x1 - x]
    region = canvas[y0:y1, x0:x1]
    region[sub] = rgb


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------

def emit_vtt(cues: list[CaptionCue]) -> str:
    """Plain WEBVTT with LF line endings."""
    parts = ["WEBVTT\n"]
    for cue in cues:
        parts.append(f"\n{format_timestamp(cue.start)} --> {format_timestamp(cue.end)}\n")
        if cue.text:
            parts.append(cue.text + "\n")
    return "".join(parts)


def emit_enriched_vtt(cues: list[CaptionCue],
                      schedules: list[list[WordTiming]]) -> str:
    """WEBVTT where every word carries an inline <HH:MM:SS.mmm> start tag
    (karaoke style). Parsing this with parse_vtt (which strips tags)
    recovers the original cues."""
    if len(cues) != len(schedules):
        raise ValidationError("one schedule per cue required")
    parts = ["WEBVTT\n"]
    for cue, schedule in zip(cues, schedules):
        parts.append(f"\n{format_timestamp(cue.start)} --> {format_timestamp(cue.end)}\n")
        if schedule:
            tagged = " ".join(f"<{format_timestamp(wt.start)}>{wt.word}" for wt in schedule)
            parts.append(tagged + "\n")
    return "".join(parts)


def schedules_to_json(cues: list[CaptionCue],
                      schedules: list[list[WordTiming]]) -> list[dict[str, Any]]:
    """The UI-facing schedule export: {cue_index, words:[{w, start, end}]}."""
    return [
        {"cue_index": cue.index, "words": [wt.to_json() for wt in schedule]}
        for cue, schedule in zip(cues, schedules)
    ]
