"""Frame composition: layout planning, background treatment, diffusion
inpainting, and the per-frame compositing pipeline.

Pipeline order is fixed: inpaint the regions vacated or removed by the
layout, apply the background mode outside the kept elements, blit moved
elements at their target placements, then hand the frame to the caption
hook.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    BackgroundMode,
    ElementClass,
    FocusViewError,
    FrameBuffer,
    LayoutMode,
    Mask,
    Rect,
    solid_rgb,
)
from .classify import ClassifiedScene
from .detect import ElementTrack
from .raster import gaussian_blur

DEFAULT_BLUR_SIGMA = 12.0
SPEAKER_TARGET_HEIGHT_FRAC = 0.7
CONTENT_FIT_FRAC = 0.9


class NoFocusTargetError(FocusViewError):
    """The requested layout has nothing to focus on."""


class InpaintError(FocusViewError):
    """The fill region has no boundary to diffuse from."""


# ---------------------------------------------------------------------------
# Scene geometry at a frame
# ---------------------------------------------------------------------------

def _track_active(track: ElementTrack, frame_index: int, hold: int) -> bool:
    indices = track.frame_indices()
    if not indices:
        return False
    return indices[0] <= frame_index <= indices[-1] + hold


def _track_rect(track: ElementTrack, frame_index: int) -> Rect:
    rect = track.rect_at_or_before(frame_index)
    assert rect is not None
    return rect


def _speaker_mask(scene: ClassifiedScene, frame_index: int,
                  width: int, height: int) -> Mask | None:
    track = scene.speaker_track
    if track is None or not track.per_frame:
        return None
    rect = _track_rect(track, frame_index)
    fine = track.mask_at_or_before(frame_index)
    if fine is not None and fine.width == width and fine.height == height:
        return fine
    return Mask.from_rect(rect, width, height)


def background_mask(frame_size: tuple[int, int], scene: ClassifiedScene,
                    frame_index: int, hold: int = 0) -> Mask:
    """Complement of (speaker mask | content rects | auxiliary rects)."""
    width, height = frame_size
    fg = np.zeros((height, width), dtype=bool)
    if scene.speaker_track is not None and _track_active(scene.speaker_track, frame_index, hold):
        mask = _speaker_mask(scene, frame_index, width, height)
        if mask is not None:
            fg |= mask.bits
    for track in list(scene.content_tracks) + list(scene.auxiliary_tracks):
        if not _track_active(track, frame_index, hold):
            continue
        rect = _track_rect(track, frame_index).clipped(width, height)
        if rect is not None:
            fg[rect.y:rect.y2, rect.x:rect.x2] = True
    return Mask(width, height, ~fg)


# ---------------------------------------------------------------------------
# Background treatment
# ---------------------------------------------------------------------------

def compose_background(frame: FrameBuffer, bg_mask: Mask, mode: BackgroundMode,
                       blur_sigma: float = DEFAULT_BLUR_SIGMA) -> FrameBuffer:
    """Apply the background mode to the masked pixels; the rest of the frame
    stays bit-identical."""
    if bg_mask.width != frame.width or bg_mask.height != frame.height:
        raise FocusViewError("background mask dimensions do not match the frame")
    if mode is BackgroundMode.ORIGINAL:
        return frame
    if mode is BackgroundMode.BLUR:
        blurred = gaussian_blur(frame, blur_sigma).pixels
        out = frame.pixels.copy()
        out[bg_mask.bits] = blurred[bg_mask.bits]
        return frame.with_pixels(out)
    if mode in (BackgroundMode.SOLID_WHITE, BackgroundMode.SOLID_DARK,
                BackgroundMode.SOLID_PEACH):
        out = frame.pixels.copy()
        out[bg_mask.bits] = solid_rgb(mode)
        return frame.with_pixels(out)
    raise FocusViewError(f"unknown background mode {mode!r}")


# ---------------------------------------------------------------------------
# Diffusion inpainting
# ---------------------------------------------------------------------------

def _neighbor_sum(plane: np.ndarray) -> np.ndarray:
    val = np.zeros_like(plane)
    val[1:, :] += plane[:-1, :]
    val[:-1, :] += plane[1:, :]
    val[:, 1:] += plane[:, :-1]
    val[:, :-1] += plane[:, 1:]
    return val


@dataclass
class _FillLevel:
    mask: np.ndarray          # unknown pixels at this grid
    ys: np.ndarray
    xs: np.ndarray
    deg: np.ndarray           # in-bounds 4-neighbor count, per masked pixel


def _build_fill_levels(mask: np.ndarray, coarse_limit: int = 6) -> list[_FillLevel]:
    """Mask pyramid for the diffusion solve; a coarse cell is unknown iff
    all four fine cells are."""
    levels: list[_FillLevel] = []
    current = mask
    while True:
        h, w = current.shape
        ys, xs = np.nonzero(current)
        deg = np.full(len(ys), 4.0)
        deg[ys == 0] -= 1
        deg[ys == h - 1] -= 1
        deg[xs == 0] -= 1
        deg[xs == w - 1] -= 1
        levels.append(_FillLevel(mask=current, ys=ys, xs=xs, deg=deg))
        span = 0 if len(ys) == 0 else max(ys.max() - ys.min() + 1,
                                          xs.max() - xs.min() + 1)
        if span <= coarse_limit or min(h, w) < 8 or len(ys) == 0:
            return levels
        h2, w2 = (h + 1) // 2, (w + 1) // 2
        padded = np.pad(current, ((0, h2 * 2 - h), (0, w2 * 2 - w)))
        current = padded.reshape(h2, 2, w2, 2).all(axis=(1, 3))


def _relax(u: np.ndarray, f: np.ndarray, level: _FillLevel, sweeps: int) -> None:
    """Jacobi sweeps: each unknown pixel becomes the mean of its in-bounds
    4-neighbors (plus the level's source term)."""
    for _ in range(sweeps):
        ns = _neighbor_sum(u)
        u[level.ys, level.xs] = (ns[level.ys, level.xs] + f) / level.deg


def _vcycle(levels: list[_FillLevel], li: int, u: np.ndarray,
            f: np.ndarray) -> None:
    """One multigrid V-cycle on the masked Laplace system. Smoothing is the
    same mean-of-neighbors relaxation at every scale; coarse grids only
    accelerate its convergence."""
    level = levels[li]
    if li == len(levels) - 1 or len(level.ys) == 0:
        _relax(u, f, level, sweeps=80)
        return
    _relax(u, f, level, sweeps=3)

    residual = np.zeros_like(u)
    ns = _neighbor_sum(u)
    residual[level.ys, level.xs] = (
        f + ns[level.ys, level.xs] - level.deg * u[level.ys, level.xs])

    h, w = u.shape
    h2, w2 = (h + 1) // 2, (w + 1) // 2
    padded = np.pad(residual, ((0, h2 * 2 - h), (0, w2 * 2 - w)))
    # restriction: block mean, times 4 for the twice-coarser stencil
    coarse_rhs = 4.0 * padded.reshape(h2, 2, w2, 2).mean(axis=(1, 3))

    coarse = levels[li + 1]
    uc = np.zeros_like(coarse.mask, dtype=np.float64)
    _vcycle(levels, li + 1, uc, coarse_rhs[coarse.ys, coarse.xs])

    correction = bilinear_resize(uc, h2 * 2, w2 * 2)[:h, :w]
    u[level.mask] += correction[level.mask]
    _relax(u, f, level, sweeps=3)


def _diffuse_plane(plane: np.ndarray, mask: np.ndarray, eps: float,
                   levels: list[_FillLevel] | None = None,
                   max_cycles: int = 100) -> np.ndarray:
    """Diffusion fill of one float plane: iterate until the largest
    per-pixel movement of a whole relaxation cycle falls below eps."""
    if levels is None:
        levels = _build_fill_levels(mask)
    top = levels[0]
    if len(top.ys) == 0:
        return plane
    u = plane.copy()
    ring = ~mask & (_neighbor_sum(mask.astype(np.float64)) > 0)
    u[mask] = float(plane[ring].mean()) if ring.any() else float(plane[~mask].mean())
    f = np.zeros(len(top.ys))
    for _ in range(max_cycles):
        before = u[top.ys, top.xs].copy()
        _vcycle(levels, 0, u, f)
        change = np.abs(u[top.ys, top.xs] - before).max()
        if change < eps:
            break
    return u


def inpaint_fill(frame: FrameBuffer, mask: Mask, eps: float = 0.25) -> FrameBuffer:
    """Fill masked pixels by boundary diffusion; only masked pixels change.

    The fill converges to the smooth (harmonic) surface pinned by the mask
    boundary, deliberately low-detail. Iteration stops once a whole
    relaxation cycle moves no channel by eps or more. Raises InpaintError
    when the mask covers the whole frame.
    """
    if mask.width != frame.width or mask.height != frame.height:
        raise FocusViewError("inpaint mask dimensions do not match the frame")
    bits = mask.bits
    if not bits.any():
        return frame
    if bits.all():
        raise InpaintError("mask covers the entire frame; nothing to diffuse from")

    # Work on the mask's bounding box plus a 1-px rim: the diffusion only
    # ever reads unmasked pixels adjacent to the hole.
    ys, xs = np.nonzero(bits)
    y0 = max(0, ys.min() - 1)
    y1 = min(frame.height, ys.max() + 2)
    x0 = max(0, xs.min() - 1)
    x1 = min(frame.width, xs.max() + 2)

    out = frame.pixels.copy()
    sub_mask = bits[y0:y1, x0:x1]
    levels = _build_fill_levels(sub_mask)
    for c in range(3):
        plane = frame.pixels[y0:y1, x0:x1, c].astype(np.float64)
        filled = _diffuse_plane(plane, sub_mask, eps, levels)
        out[y0:y1, x0:x1, c][sub_mask] = np.clip(
            np.rint(filled[sub_mask]), 0, 255).astype(np.uint8)
    return frame.with_pixels(out)


# ---------------------------------------------------------------------------
# Layout planning
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Placement:
    """A kept element: its source geometry and where it lands."""

    role: ElementClass
    source: Rect
    target: Rect
    mask: Mask | None = None  # full-frame source silhouette, if any

    @property
    def moved(self) -> bool:
        return self.source != self.target


@dataclass
class LayoutPlan:
    mode: LayoutMode
    frame_w: int
    frame_h: int
    kept: list[Placement] = field(default_factory=list)
    removed_mask: Mask | None = None

    def __post_init__(self):
        if self.removed_mask is None:
            self.removed_mask = Mask.empty(self.frame_w, self.frame_h)
        for p in self.kept:
            if (p.target.x < 0 or p.target.y < 0
                    or p.target.x2 > self.frame_w or p.target.y2 > self.frame_h):
                raise FocusViewError(f"placement target {p.target} outside frame")


def _fit_scale(src_w: int, src_h: int, box_w: float, box_h: float) -> float:
    return min(box_w / src_w, box_h / src_h)


def _centered_target(src: Rect, scale: float, frame_w: int, frame_h: int) -> Rect:
    tw = max(1, round(src.w * scale))
    th = max(1, round(src.h * scale))
    tw = min(tw, frame_w)
    th = min(th, frame_h)
    tx = (frame_w - tw) // 2
    ty = (frame_h - th) // 2
    return Rect(tx, ty, tw, th)


def plan_layout(scene: ClassifiedScene, mode: LayoutMode,
                frame_size: tuple[int, int], frame_index: int = 0,
                hold: int = 0,
                speaker_height_frac: float = SPEAKER_TARGET_HEIGHT_FRAC,
                content_fit_frac: float = CONTENT_FIT_FRAC) -> LayoutPlan:
    """Decide which elements stay (and where) and which regions are removed
    for one frame."""
    width, height = frame_size
    removed = np.zeros((height, width), dtype=bool)
    kept: list[Placement] = []

    def active(tracks: list[ElementTrack]) -> list[ElementTrack]:
        return [t for t in tracks if _track_active(t, frame_index, hold)]

    speaker_active = (scene.speaker_track is not None
                      and _track_active(scene.speaker_track, frame_index, hold))
    content = active(scene.content_tracks)
    auxiliary = active(scene.auxiliary_tracks)

    def add_rect_to_removed(rect: Rect) -> None:
        clipped = rect.clipped(width, height)
        if clipped is not None:
            removed[clipped.y:clipped.y2, clipped.x:clipped.x2] = True

    def speaker_geometry() -> tuple[Rect, Mask]:
        rect = _track_rect(scene.speaker_track, frame_index)
        mask = _speaker_mask(scene, frame_index, width, height)
        return rect, mask

    if mode is LayoutMode.ORIGINAL:
        if speaker_active:
            rect, mask = speaker_geometry()
            kept.append(Placement(ElementClass.SPEAKER, rect, rect, mask))
        for track, role in ([(t, ElementClass.CONTENT) for t in content]
                            + [(t, ElementClass.AUXILIARY) for t in auxiliary]):
            rect = _track_rect(track, frame_index)
            kept.append(Placement(role, rect, rect))

    elif mode is LayoutMode.AUXILIARY_REMOVAL:
        if speaker_active:
            rect, mask = speaker_geometry()
            kept.append(Placement(ElementClass.SPEAKER, rect, rect, mask))
        for track in content:
            rect = _track_rect(track, frame_index)
            kept.append(Placement(ElementClass.CONTENT, rect, rect))
        for track in auxiliary:
            add_rect_to_removed(_track_rect(track, frame_index))

    elif mode is LayoutMode.SPEAKER_FOCUS:
        if not speaker_active:
            raise NoFocusTargetError("speaker focus requested but no speaker track")
        rect, mask = speaker_geometry()
        scale = min(speaker_height_frac * height / rect.h,
                    width / rect.w, height / rect.h)
        target = _centered_target(rect, scale, width, height)
        kept.append(Placement(ElementClass.SPEAKER, rect, target, mask))
        if target != rect:
            removed |= mask.bits  # vacated source area
        for track in content + auxiliary:
            add_rect_to_removed(_track_rect(track, frame_index))

    elif mode is LayoutMode.CONTENT_FOCUS:
        if not content:
            raise NoFocusTargetError("content focus requested but no content tracks")
        rects = [_track_rect(t, frame_index) for t in content]
        ux = min(r.x for r in rects)
        uy = min(r.y for r in rects)
        ux2 = max(r.x2 for r in rects)
        uy2 = max(r.y2 for r in rects)
        union = Rect(max(0, ux), max(0, uy), ux2 - ux, uy2 - uy)
        scale = min(_fit_scale(union.w, union.h,
                               content_fit_frac * width, content_fit_frac * height),
                    width / union.w, height / union.h)
        union_target = _centered_target(union, scale, width, height)
        for rect in rects:
            tx = union_target.x + round((rect.x - union.x) * scale)
            ty = union_target.y + round((rect.y - union.y) * scale)
            tw = max(1, round(rect.w * scale))
            th = max(1, round(rect.h * scale))
            tw = min(tw, width - tx)
            th = min(th, height - ty)
            target = Rect(tx, ty, tw, th)
            kept.append(Placement(ElementClass.CONTENT, rect, target))
            if target != rect:
                add_rect_to_removed(rect)  # vacated source area
        if speaker_active:
            rect, mask = speaker_geometry()
            removed |= mask.bits
        for track in auxiliary:
            add_rect_to_removed(_track_rect(track, frame_index))

    else:
        raise FocusViewError(f"unknown layout mode {mode!r}")

    return LayoutPlan(mode=mode, frame_w=width, frame_h=height, kept=kept,
                      removed_mask=Mask(width, height, removed))


# ---------------------------------------------------------------------------
# Bilinear scaling and compositing
# ---------------------------------------------------------------------------

def bilinear_resize(src: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resampling of an (h, w[, c]) float array."""
    in_h, in_w = src.shape[:2]
    if (out_h, out_w) == (in_h, in_w):
        return src.copy()
    ys = (np.arange(out_h) + 0.5) * in_h / out_h - 0.5
    xs = (np.arange(out_w) + 0.5) * in_w / out_w - 0.5
    y0 = np.clip(np.floor(ys).astype(int), 0, in_h - 1)
    x0 = np.clip(np.floor(xs).astype(int), 0, in_w - 1)
    y1 = np.clip(y0 + 1, 0, in_h - 1)
    x1 = np.clip(x0 + 1, 0, in_w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0)
    wx = np.clip(xs - x0, 0.0, 1.0)
    if src.ndim == 3:
        wy = wy[:, None, None]
        wx = wx[None, :, None]
    else:
        wy = wy[:, None]
        wx = wx[None, :]
    top = src[y0][:, x0] * (1 - wx) + src[y0][:, x1] * wx
    bottom = src[y1][:, x0] * (1 - wx) + src[y1][:, x1] * wx
    return top * (1 - wy) + bottom * wy


def _kept_target_bits(plan: LayoutPlan) -> np.ndarray:
    """Union of the kept elements' target regions (silhouette-aware)."""
    bits = np.zeros((plan.frame_h, plan.frame_w), dtype=bool)
    for p in plan.kept:
        if p.mask is not None:
            if p.moved:
                sub = p.mask.bits[p.source.y:p.source.y2, p.source.x:p.source.x2]
                scaled = bilinear_resize(sub.astype(np.float64), p.target.h, p.target.w) >= 0.5
                bits[p.target.y:p.target.y2, p.target.x:p.target.x2] |= scaled
            else:
                bits |= p.mask.bits
        else:
            bits[p.target.y:p.target.y2, p.target.x:p.target.x2] = True
    return bits


def compose_frame(frame: FrameBuffer, plan: LayoutPlan, bg_mode: BackgroundMode,
                  blur_sigma: float = DEFAULT_BLUR_SIGMA,
                  caption_hook=None) -> FrameBuffer:
    """Render one customized frame.

    Steps: (1) inpaint removed regions, (2) apply the background mode
    outside the kept elements, (3) blit moved elements at their targets
    with bilinear scaling, (4) run the caption hook.
    """
    if plan.frame_w != frame.width or plan.frame_h != frame.height:
        raise FocusViewError("plan dimensions do not match the frame")

    out = frame
    if plan.removed_mask.bits.any():
        out = inpaint_fill(out, plan.removed_mask)

    if bg_mode is not BackgroundMode.ORIGINAL:
        bg_bits = ~_kept_target_bits(plan)
        out = compose_background(out, Mask(plan.frame_w, plan.frame_h, bg_bits),
                                 bg_mode, blur_sigma)

    moved = [p for p in plan.kept if p.moved]
    if moved:
        canvas = out.pixels.copy()
        for p in moved:
            src_crop = frame.pixels[p.source.y:p.source.y2, p.source.x:p.source.x2]
            scaled = bilinear_resize(src_crop.astype(np.float64), p.target.h, p.target.w)
            scaled = np.clip(np.rint(scaled), 0, 255).astype(np.uint8)
            region = canvas[p.target.y:p.target.y2, p.target.x:p.target.x2]
            if p.mask is not None:
                sub = p.mask.bits[p.source.y:p.source.y2, p.source.x:p.source.x2]
                mask_scaled = bilinear_resize(sub.astype(np.float64), p.target.h, p.target.w) >= 0.5
                region[mask_scaled] = scaled[mask_scaled]
            else:
                region[:] = scaled
        out = frame.with_pixels(canvas)

    if caption_hook is not None:
        out = caption_hook(out)
    return out
