"""Audio I/O and the deterministic speech-isolation fallback.

The fallback approximates background-audio removal with a cascaded biquad
high-pass plus a framewise RMS noise gate. A provider can replace it with
model-grade separation; the engine contract (length preserved, Original
mode bit-identical) stays the same either way.
"""

from __future__ import annotations

import io
import math
import wave
from typing import Any

import numpy as np
from scipy.signal import lfilter

from .core import FocusViewError, PcmAudio

FULL_SCALE = 32768.0
DEFAULT_HIGHPASS_HZ = 80.0
DEFAULT_GATE_DB = -45.0
# Cascaded 2nd-order sections: three give ~26 dB at 50 Hz for the default
# 80 Hz corner while leaving 1 kHz untouched (<0.01 dB).
DEFAULT_SECTIONS = 3
GATE_FRAME_MS = 20.0
GATE_RAMP_MS = 5.0


class AudioFormatError(FocusViewError):
    """Unsupported or malformed audio container."""


class DurationMismatchError(FocusViewError):
    """Replacement audio does not match the video duration."""


# ---------------------------------------------------------------------------
# WAV I/O (PCM16 only)
# ---------------------------------------------------------------------------

def read_wav(data: bytes) -> PcmAudio:
    try:
        with wave.open(io.BytesIO(data), "rb") as wav:
            channels = wav.getnchannels()
            sampwidth = wav.getsampwidth()
            rate = wav.getframerate()
            frames = wav.readframes(wav.getnframes())
    except (wave.Error, EOFError) as exc:
        raise AudioFormatError(f"unsupported WAV: {exc}") from None
    if sampwidth != 2:
        raise AudioFormatError(f"only PCM16 supported, got {8 * sampwidth}-bit")
    if channels not in (1, 2):
        raise AudioFormatError(f"only 1-2 channels supported, got {channels}")
    samples = np.frombuffer(frames, dtype="<i2")
    return PcmAudio(sample_rate=rate, channels=channels, samples=samples)


def write_wav(audio: PcmAudio) -> bytes:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wav:
        wav.setnchannels(audio.channels)
        wav.setsampwidth(2)
        wav.setframerate(audio.sample_rate)
        wav.writeframes(audio.samples.astype("<i2").tobytes())
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Speech-isolation fallback
# ---------------------------------------------------------------------------

def _highpass_coeffs(freq_hz: float, sample_rate: int) -> tuple[np.ndarray, np.ndarray]:
    """RBJ cookbook high-pass biquad at Q = 1/sqrt(2)."""
    w0 = 2.0 * math.pi * freq_hz / sample_rate
    alpha = math.sin(w0) / (2.0 * (1.0 / math.sqrt(2.0)))
    cos_w0 = math.cos(w0)
    b = np.array([(1 + cos_w0) / 2, -(1 + cos_w0), (1 + cos_w0) / 2])
    a = np.array([1 + alpha, -2 * cos_w0, 1 - alpha])
    return b / a[0], a / a[0]


def _frame_gains(frames: np.ndarray, frame_len: int, gate_db: float) -> np.ndarray:
    """Per-gate-frame open/closed decision from RMS level."""
    n = frames.shape[0]
    pad = (-n) % frame_len
    padded = np.pad(frames, ((0, pad), (0, 0)))
    grouped = padded.reshape(-1, frame_len, frames.shape[1])
    rms = np.sqrt((grouped.astype(np.float64) ** 2).mean(axis=(1, 2)))
    with np.errstate(divide="ignore"):
        rms_db = 20.0 * np.log10(rms / FULL_SCALE)
    return (rms_db >= gate_db).astype(np.float64)


def fallback_enhance(audio: PcmAudio,
                     highpass_hz: float = DEFAULT_HIGHPASS_HZ,
                     gate_db: float = DEFAULT_GATE_DB,
                     sections: int = DEFAULT_SECTIONS,
                     frame_ms: float = GATE_FRAME_MS,
                     ramp_ms: float = GATE_RAMP_MS) -> PcmAudio:
    """High-pass the low-frequency bed, then gate frames below the RMS
    threshold with linear ramps at the transitions. Length-preserving and
    deterministic."""
    if audio.samples.size == 0:
        return audio
    frames = audio.samples.reshape(-1, audio.channels).astype(np.float64)

    b, a = _highpass_coeffs(highpass_hz, audio.sample_rate)
    for _ in range(sections):
        frames = lfilter(b, a, frames, axis=0)

    frame_len = max(1, round(audio.sample_rate * frame_ms / 1000.0))
    ramp_len = max(1, round(audio.sample_rate * ramp_ms / 1000.0))
    gains = _frame_gains(frames, frame_len, gate_db)

    per_sample = np.repeat(gains, frame_len)[: frames.shape[0]]
    # Linear ramps across gate transitions.
    changes = np.nonzero(np.diff(per_sample))[0]
    for s in changes:
        lo = per_sample[s]
        hi = per_sample[s + 1]
        end = min(s + 1 + ramp_len, per_sample.shape[0])
        span = end - (s + 1)
        if span > 0:
            per_sample[s + 1:end] = lo + (hi - lo) * (np.arange(1, span + 1) / ramp_len)
    frames *= per_sample[:, None]

    out = np.clip(np.rint(frames), -32768, 32767).astype(np.int16)
    return PcmAudio(sample_rate=audio.sample_rate, channels=audio.channels,
                    samples=out.ravel())


# ---------------------------------------------------------------------------
# Track replacement
# ---------------------------------------------------------------------------

DURATION_TOLERANCE_S = 0.050


def replace_track(render_manifest: dict[str, Any], audio: PcmAudio,
                  audio_ref: str) -> dict[str, Any]:
    """Point a render manifest at a replacement audio artifact after checking
    the duration matches the video within 50 ms."""
    video_duration = float(render_manifest["duration"])
    if abs(audio.duration - video_duration) > DURATION_TOLERANCE_S:
        raise DurationMismatchError(
            f"audio {audio.duration:.3f}s vs video {video_duration:.3f}s "
            f"exceeds {DURATION_TOLERANCE_S * 1000:.0f} ms tolerance")
    out = dict(render_manifest)
    out["audio"] = {"mode": out.get("audio", {}).get("mode", "denoise_enhance"),
                    "path": audio_ref}
    return out
