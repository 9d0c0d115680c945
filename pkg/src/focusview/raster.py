"""Classical raster operations: grayscale, Canny edges, probabilistic Hough
lines, Gaussian blur, and mask algebra.

Everything here is pure and deterministic. The Hough transform is
"probabilistic" only in its point sampling order, which is fixed by a seed
carried in HoughParams, so repeated runs are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import FocusViewError, FrameBuffer, Mask, ValidationError


@dataclass(frozen=True)
class CannyParams:
    gaussian_sigma: float = 1.4
    low_threshold: float = 50.0
    high_threshold: float = 150.0

    def __post_init__(self):
        if self.gaussian_sigma < 0:
            raise ValidationError("gaussian_sigma must be >= 0")
        if not 0 < self.low_threshold < self.high_threshold:
            raise ValidationError("need 0 < low_threshold < high_threshold")

    def to_json(self) -> dict:
        return {
            "gaussian_sigma": self.gaussian_sigma,
            "low_threshold": self.low_threshold,
            "high_threshold": self.high_threshold,
        }

    @classmethod
    def from_json(cls, data: dict) -> "CannyParams":
        return cls(**data)


@dataclass(frozen=True)
class HoughParams:
    rho_res: float = 1.0
    theta_res_deg: float = 1.0
    min_votes: int = 50
    min_line_length: float = 40.0
    max_line_gap: int = 10
    seed: int = 0

    def __post_init__(self):
        if min(self.rho_res, self.theta_res_deg, self.min_votes,
               self.min_line_length) <= 0 or self.max_line_gap < 0:
            raise ValidationError("hough parameters must be positive")

    def to_json(self) -> dict:
        return {
            "rho_res": self.rho_res,
            "theta_res_deg": self.theta_res_deg,
            "min_votes": self.min_votes,
            "min_line_length": self.min_line_length,
            "max_line_gap": self.max_line_gap,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, data: dict) -> "HoughParams":
        return cls(**data)


@dataclass(frozen=True, eq=False)
class EdgeMap:
    width: int
    height: int
    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=bool)
        if b.shape != (self.height, self.width):
            raise ValidationError(f"edge map shape {b.shape} != {(self.height, self.width)}")
        b = np.ascontiguousarray(b)
        b.flags.writeable = False
        object.__setattr__(self, "bits", b)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "EdgeMap":
        arr = np.asarray(arr, dtype=bool)
        return cls(width=arr.shape[1], height=arr.shape[0], bits=arr)


@dataclass(frozen=True)
class LineSegment:
    """Straight segment between two pixel endpoints; angle_deg in [0, 180)."""

    p0: tuple[int, int]
    p1: tuple[int, int]
    angle_deg: float

    @classmethod
    def from_endpoints(cls, p0: tuple[int, int], p1: tuple[int, int]) -> "LineSegment":
        dx = p1[0] - p0[0]
        dy = p1[1] - p0[1]
        angle = math.degrees(math.atan2(dy, dx)) % 180.0
        return cls(p0=p0, p1=p1, angle_deg=angle)

    def length(self) -> float:
        return math.hypot(self.p1[0] - self.p0[0], self.p1[1] - self.p0[1])


# ---------------------------------------------------------------------------
# Grayscale and blur
# ---------------------------------------------------------------------------

def to_grayscale(frame: FrameBuffer) -> np.ndarray:
    """Rec.601 luma, rounded and clamped to uint8."""
    px = frame.pixels.astype(np.float64)
    luma = 0.299 * px[..., 0] + 0.587 * px[..., 1] + 0.114 * px[..., 2]
    return np.clip(np.rint(luma), 0, 255).astype(np.uint8)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian with radius ceil(3*sigma)."""
    if sigma == 0:
        return np.array([1.0])
    radius = math.ceil(3.0 * sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(offsets ** 2) / (2.0 * sigma ** 2))
    return kernel / kernel.sum()


def _separable_convolve(plane: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    # Reflective ("symmetric") padding avoids dark halos at the borders.
    out = ndimage.correlate1d(plane, kernel, axis=0, mode="reflect")
    return ndimage.correlate1d(out, kernel, axis=1, mode="reflect")


def gaussian_blur(frame: FrameBuffer, sigma: float) -> FrameBuffer:
    """Separable Gaussian blur with reflective padding. sigma=0 is identity."""
    if sigma < 0:
        raise ValidationError("sigma must be >= 0")
    if sigma == 0:
        return frame
    kernel = gaussian_kernel(sigma)
    out = np.empty_like(frame.pixels, dtype=np.float64)
    px = frame.pixels.astype(np.float64)
    for c in range(3):
        out[..., c] = _separable_convolve(px[..., c], kernel)
    return frame.with_pixels(np.clip(np.rint(out), 0, 255).astype(np.uint8))


def blur_plane(plane: np.ndarray, sigma: float) -> np.ndarray:
    """Blur a single float plane; used by compositing for masked blends."""
    if sigma == 0:
        return plane.astype(np.float64)
    return _separable_convolve(plane.astype(np.float64), gaussian_kernel(sigma))


# ---------------------------------------------------------------------------
# Canny edges
# ---------------------------------------------------------------------------

def canny_edges(frame: FrameBuffer, params: CannyParams | None = None) -> EdgeMap:
    """Gaussian smooth -> Sobel -> non-maximum suppression -> double
    threshold -> hysteresis.

    Gradient magnitude is scaled so a full-contrast step edge peaks near
    255, which is what the default thresholds assume.
    """
    params = params or CannyParams()
    if frame.width < 3 or frame.height < 3:
        raise FocusViewError("canny_edges needs a frame of at least 3x3")

    gray = to_grayscale(frame).astype(np.float32)
    if params.gaussian_sigma > 0:
        kernel = gaussian_kernel(params.gaussian_sigma).astype(np.float32)
        gray = _separable_convolve(gray, kernel)

    # Separable Sobel. Halving and saturating at 255 puts the magnitude on
    # an intensity-like scale where a full-contrast step (after the default
    # smoothing) pegs the top; the default thresholds assume this scale.
    smooth = np.array([1.0, 2.0, 1.0], dtype=np.float32)
    diff = np.array([-1.0, 0.0, 1.0], dtype=np.float32)
    gx = ndimage.correlate1d(gray, smooth, axis=0, mode="reflect")
    gx = ndimage.correlate1d(gx, diff, axis=1, mode="reflect")
    gy = ndimage.correlate1d(gray, smooth, axis=1, mode="reflect")
    gy = ndimage.correlate1d(gy, diff, axis=0, mode="reflect")
    mag = np.minimum(np.hypot(gx, gy) / 2.0, 255.0)

    suppressed = _non_maximum_suppression(mag, gx, gy)

    strong = suppressed >= params.high_threshold
    weak = suppressed >= params.low_threshold

    # Hysteresis: keep weak components 8-connected to a strong pixel.
    labels, count = ndimage.label(weak, structure=np.ones((3, 3), dtype=int))
    if count == 0:
        return EdgeMap.from_array(np.zeros_like(weak))
    strong_labels = np.unique(labels[strong])
    strong_labels = strong_labels[strong_labels > 0]
    keep = np.zeros(count + 1, dtype=bool)
    keep[strong_labels] = True
    return EdgeMap.from_array(keep[labels])


def _non_maximum_suppression(mag: np.ndarray, gx: np.ndarray,
                             gy: np.ndarray) -> np.ndarray:
    """Keep only pixels that are maximal along their gradient direction."""
    h, w = mag.shape
    padded = np.pad(mag, 1, mode="constant")

    def shifted(dy: int, dx: int) -> np.ndarray:
        return padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]

    angle = np.degrees(np.arctan2(gy, gx)) % 180.0
    out = np.zeros_like(mag)

    sectors = [
        # (angle test, neighbor a, neighbor b) along the gradient direction
        ((angle < 22.5) | (angle >= 157.5), (0, 1), (0, -1)),
        ((angle >= 22.5) & (angle < 67.5), (1, 1), (-1, -1)),
        ((angle >= 67.5) & (angle < 112.5), (1, 0), (-1, 0)),
        ((angle >= 112.5) & (angle < 157.5), (1, -1), (-1, 1)),
    ]
    for cond, (ay, ax), (by, bx) in sectors:
        neighbor_max = np.maximum(shifted(ay, ax), shifted(by, bx))
        keep = cond & (mag >= neighbor_max)
        out[keep] = mag[keep]
    out[mag == 0] = 0
    return out


# ---------------------------------------------------------------------------
# Probabilistic Hough
# ---------------------------------------------------------------------------

def hough_lines_p(edges: EdgeMap, params: HoughParams | None = None) -> list[LineSegment]:
    """Progressive probabilistic Hough line transform.

    Points are visited in a seed-shuffled order; each votes across all theta
    bins. When a bin reaches min_votes the supporting line is walked in both
    directions (tolerating gaps up to max_line_gap), its pixels are consumed,
    and segments at least min_line_length long are emitted.
    """
    params = params or HoughParams()
    bits = edges.bits
    points = np.argwhere(bits)  # (y, x)
    if points.size == 0:
        return []

    h, w = bits.shape
    n_theta = int(round(180.0 / params.theta_res_deg))
    thetas = np.deg2rad(np.arange(n_theta) * params.theta_res_deg)
    cos_t = np.cos(thetas)
    sin_t = np.sin(thetas)
    diag = math.hypot(w, h)
    n_rho = int(2 * math.ceil(diag / params.rho_res)) + 1
    rho_offset = n_rho // 2

    acc = np.zeros((n_rho, n_theta), dtype=np.int32)
    available = bits.copy()
    voted = np.zeros_like(bits)
    theta_idx = np.arange(n_theta)

    rng = np.random.default_rng(params.seed)
    order = rng.permutation(len(points))

    segments: list[LineSegment] = []
    for pi in order:
        y, x = points[pi]
        if not available[y, x]:
            continue
        rho_bins = np.rint((x * cos_t + y * sin_t) / params.rho_res).astype(np.int64) + rho_offset
        acc[rho_bins, theta_idx] += 1
        voted[y, x] = True

        local = acc[rho_bins, theta_idx]
        best = int(np.argmax(local))
        if local[best] < params.min_votes:
            continue

        theta = thetas[best]
        walked = _walk_line(available, x, y, theta, params.max_line_gap)
        if len(walked) < 2:
            continue
        p_first, p_last = walked[0], walked[-1]
        length = math.hypot(p_last[0] - p_first[0], p_last[1] - p_first[1])
        if length < params.min_line_length:
            continue

        # Consume the segment's pixels and retract any votes they cast.
        for (sx, sy) in walked:
            if available[sy, sx]:
                available[sy, sx] = False
                if voted[sy, sx]:
                    rb = np.rint((sx * cos_t + sy * sin_t) / params.rho_res).astype(np.int64) + rho_offset
                    acc[rb, theta_idx] -= 1
                    voted[sy, sx] = False
        segments.append(LineSegment.from_endpoints(p_first, p_last))

    return segments


def _walk_line(available: np.ndarray, x0: int, y0: int, theta: float,
               max_gap: int) -> list[tuple[int, int]]:
    """Collect available edge pixels along the line with normal angle theta
    through (x0, y0), walking both directions until the gap budget runs out.

    Checks a 3-pixel corridor perpendicular to the walk so 1-2 px jitter and
    double-thick edges still trace as one segment.
    """
    h, w = available.shape
    # Direction along the line; scale so the dominant axis steps by 1.
    dx, dy = -math.sin(theta), math.cos(theta)
    scale = max(abs(dx), abs(dy))
    if scale == 0:
        return []
    dx /= scale
    dy /= scale
    perp = (-dy, dx)
    horizontal_ish = abs(dx) >= abs(dy)

    found: list[tuple[int, int]] = []

    def probe(fx: float, fy: float) -> list[tuple[int, int]]:
        hits = []
        for off in (0, 1, -1):
            px = int(round(fx + perp[0] * off))
            py = int(round(fy + perp[1] * off))
            if 0 <= px < w and 0 <= py < h and available[py, px]:
                hits.append((px, py))
        return hits

    for direction in (1, -1):
        fx, fy = float(x0), float(y0)
        gap = 0
        first = True
        while True:
            if not first:
                fx += dx * direction
                fy += dy * direction
            first = False
            if not (-1 <= fx <= w and -1 <= fy <= h):
                break
            hits = probe(fx, fy)
            if hits:
                gap = 0
                if direction == 1:
                    found.extend(hits)
                else:
                    for hit in hits:
                        found.insert(0, hit)
            else:
                gap += 1
                if gap > max_gap:
                    break

    if not found:
        return []
    # Order by projection along the walk direction; endpoints are extremes.
    key = (lambda p: p[0]) if horizontal_ish else (lambda p: p[1])
    if horizontal_ish:
        found.sort(key=lambda p: p[0] * (1 if dx >= 0 else -1))
    else:
        found.sort(key=lambda p: p[1] * (1 if dy >= 0 else -1))
    return found


# ---------------------------------------------------------------------------
# Mask algebra
# ---------------------------------------------------------------------------

def _check_dims(a: Mask, b: Mask) -> None:
    if a.width != b.width or a.height != b.height:
        raise ValidationError(
            f"mask dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def mask_union(a: Mask, b: Mask) -> Mask:
    _check_dims(a, b)
    return Mask(a.width, a.height, a.bits | b.bits)


def mask_intersect(a: Mask, b: Mask) -> Mask:
    _check_dims(a, b)
    return Mask(a.width, a.height, a.bits & b.bits)


def mask_complement(a: Mask) -> Mask:
    return Mask(a.width, a.height, ~a.bits)


def mask_dilate(a: Mask, r: int) -> Mask:
    """Dilation with a square structuring element of radius r."""
    if r < 0:
        raise ValidationError("dilation radius must be >= 0")
    if r == 0:
        return a
    structure = np.ones((2 * r + 1, 2 * r + 1), dtype=bool)
    return Mask(a.width, a.height, ndimage.binary_dilation(a.bits, structure=structure))


# ---------------------------------------------------------------------------
# Debug dumps
# ---------------------------------------------------------------------------

def to_pgm(bits: np.ndarray) -> bytes:
    """Binary raster as a P5 PGM, for debug dumps."""
    arr = (np.asarray(bits, dtype=bool) * np.uint8(255))
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode("ascii")
    return header + arr.tobytes()
