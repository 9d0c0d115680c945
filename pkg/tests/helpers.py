"""Synthetic fixture videos: frame sequences with provider sidecars that the
store can ingest directly."""

import json
from pathlib import Path

import numpy as np
from PIL import Image

from focusview.audio import write_wav
from focusview.core import PcmAudio, Rect


def tone_audio(sr: int, seconds: float, components=((50.0, 6000.0), (1000.0, 9000.0))):
    t = np.arange(int(sr * seconds)) / sr
    signal = np.zeros_like(t)
    for freq, amp in components:
        signal += amp * np.sin(2 * np.pi * freq * t)
    samples = np.clip(np.rint(signal), -32768, 32767).astype(np.int16)
    return PcmAudio(sample_rate=sr, channels=1, samples=samples)


def draw_ellipse(arr, cx, cy, rx, ry, rgb):
    h, w = arr.shape[:2]
    yy, xx = np.mgrid[0:h, 0:w]
    inside = ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2 <= 1.0
    arr[inside] = rgb


def build_synthetic_video(target: Path, *, width=480, height=270, fps=4,
                          seconds=10.0, with_humans=True, with_ocr=True,
                          with_captions=True, with_segmenter=True):
    """A speaker ellipse, one persistent high-contrast content rect covering
    60% x ~55% of the frame, and a corner watermark. Returns ground truth."""
    target.mkdir(parents=True, exist_ok=True)
    frame_count = int(round(fps * seconds))
    sx = width / 480.0
    sy = height / 270.0

    content = Rect(round(168 * sx), round(60 * sy), round(288 * sx), round(149 * sy))
    speaker = Rect(round(30 * sx), round(93 * sy), round(78 * sx), round(129 * sy))
    watermark = Rect(round(12 * sx), round(9 * sy), round(72 * sx), round(21 * sy))
    ellipse = (round(69 * sx), round(157 * sy), round(36 * sx), round(61 * sy))

    gradient = np.linspace(40, 80, height).astype(np.uint8)
    for i in range(frame_count):
        arr = np.empty((height, width, 3), dtype=np.uint8)
        arr[:] = gradient[:, None, None]
        # watermark: low contrast so it never reads as a rectangle edge
        arr[watermark.y:watermark.y2, watermark.x:watermark.x2] = (110, 110, 110)
        arr[watermark.y + 4:watermark.y2 - 4:4, watermark.x + 3:watermark.x2 - 3] = (70, 70, 70)
        # content block: high contrast with a little inner texture
        arr[content.y:content.y2, content.x:content.x2] = (250, 250, 250)
        inner = np.arange(content.w) % 40
        arr[content.y + content.h // 2, content.x:content.x2] = \
            np.where(inner[:, None] < 20, 230, 250)
        cx, cy, rx, ry = ellipse
        draw_ellipse(arr, cx, cy, rx, ry, (150, 110, 90))
        Image.fromarray(arr).save(target / f"{i:06d}.png")

    (target / "meta.json").write_text(json.dumps({"fps": fps}))
    (target / "audio.wav").write_bytes(write_wav(tone_audio(8000, seconds)))

    if with_humans:
        frames = [{"index": i, "detections": [
            {"kind": "human", "rect": speaker.to_json(), "score": 0.92}]}
            for i in range(frame_count)]
        (target / "detections.json").write_text(json.dumps({"frames": frames}))
    if with_ocr:
        frames = [{"index": i, "detections": [
            {"kind": "text_overlay", "rect": watermark.to_json(), "score": 0.8}]}
            for i in range(frame_count)]
        (target / "ocr.json").write_text(json.dumps({"frames": frames}))
    if with_segmenter:
        frames = [{"index": i, "shapes": [{"ellipse": list(ellipse)}]}
                  for i in range(frame_count)]
        (target / "segmenter.json").write_text(json.dumps({"frames": frames}))
    if with_captions:
        cues = []
        step = 2.0
        texts = ["hello world", "a second caption", "the speaker keeps talking",
                 "almost done now", "final words here"]
        t = 0.25
        for text in texts:
            if t + step - 0.5 > seconds:
                break
            cues.append((t, t + step - 0.5, text))
            t += step
        lines = ["WEBVTT", ""]
        for start, end, text in cues:
            lines.append(_ts(start) + " --> " + _ts(end))
            lines.append(text)
            lines.append("")
        (target / "captions.vtt").write_text("\n".join(lines))

    return {
        "frame_count": frame_count,
        "fps": fps,
        "width": width,
        "height": height,
        "content": content,
        "speaker": speaker,
        "watermark": watermark,
        "ellipse": ellipse,
    }


def _ts(seconds: float) -> str:
    total_ms = round(seconds * 1000)
    hh, rem = divmod(total_ms, 3600_000)
    mm, rem = divmod(rem, 60_000)
    ss, ms = divmod(rem, 1000)
    return f"{hh:02d}:{mm:02d}:{ss:02d}.{ms:03d}"
