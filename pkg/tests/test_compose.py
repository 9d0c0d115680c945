"""Composition tests: background masking/treatment, inpaint against an
independent sparse Laplace solve, layout arithmetic, and full-frame
compositing invariants."""

import numpy as np
import pytest
from scipy import sparse
from scipy.sparse.linalg import spsolve

from focusview.classify import ClassifiedScene
from focusview.compose import (
    InpaintError,
    LayoutPlan,
    NoFocusTargetError,
    Placement,
    background_mask,
    bilinear_resize,
    compose_background,
    compose_frame,
    inpaint_fill,
    plan_layout,
)
from focusview.core import (
    BackgroundMode,
    ClassificationThresholds,
    ElementClass,
    FrameBuffer,
    LayoutMode,
    Mask,
    Rect,
)
from focusview.detect import DetectionKind, ElementTrack


def make_track(track_id, kind, rect, frames=range(1), mask=None):
    t = ElementTrack(track_id=track_id, kind=kind)
    for fi in frames:
        t.per_frame[fi] = rect
        if mask is not None:
            t.masks[fi] = mask
    return t


def scene_with(speaker_rect=None, content_rects=(), aux_rects=(), size=(640, 480),
               speaker_mask=None):
    scene = ClassifiedScene(thresholds=ClassificationThresholds())
    tid = 0
    if speaker_rect is not None:
        scene.speaker_track = make_track(tid, DetectionKind.HUMAN, speaker_rect,
                                         mask=speaker_mask)
        tid += 1
    for r in content_rects:
        scene.content_tracks.append(make_track(tid, DetectionKind.RECT_OVERLAY, r))
        tid += 1
    for r in aux_rects:
        scene.auxiliary_tracks.append(make_track(tid, DetectionKind.TEXT_OVERLAY, r))
        tid += 1
    return scene


def laplace_solve_oracle(plane, mask):
    """Direct sparse solve of the discrete Laplace equation on the masked
    pixels with Dirichlet boundary from the unmasked neighbors."""
    h, w = plane.shape
    idx = -np.ones((h, w), dtype=int)
    ys, xs = np.nonzero(mask)
    idx[ys, xs] = np.arange(len(ys))
    rows, cols, vals = [], [], []
    rhs = np.zeros(len(ys))
    for k, (y, x) in enumerate(zip(ys, xs)):
        degree = 0
        for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            ny, nx = y + dy, x + dx
            if not (0 <= ny < h and 0 <= nx < w):
                continue
            degree += 1
            if mask[ny, nx]:
                rows.append(k)
                cols.append(idx[ny, nx])
                vals.append(-1.0)
            else:
                rhs[k] += plane[ny, nx]
        rows.append(k)
        cols.append(k)
        vals.append(float(degree))
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(len(ys), len(ys)))
    out = plane.astype(float).copy()
    out[ys, xs] = spsolve(A, rhs)
    return out


class TestBackgroundMask:
    def test_empty_scene_all_true(self):
        mask = background_mask((64, 48), ClassifiedScene(), 0)
        assert mask.count() == 64 * 48

    def test_speaker_left_half(self):
        half = Mask.from_rect(Rect(0, 0, 32, 48), 64, 48)
        scene = scene_with(speaker_rect=Rect(0, 0, 32, 48), speaker_mask=half, size=(64, 48))
        mask = background_mask((64, 48), scene, 0)
        assert np.array_equal(mask.bits, ~half.bits)

    def test_union_complement_oracle(self):
        speaker = Rect(5, 5, 20, 30)
        content = Rect(30, 10, 25, 20)
        scene = scene_with(speaker_rect=speaker, content_rects=[content], size=(64, 48))
        mask = background_mask((64, 48), scene, 0)
        # per-pixel oracle
        expect = np.ones((48, 64), dtype=bool)
        expect[5:35, 5:25] = False
        expect[10:30, 30:55] = False
        assert np.array_equal(mask.bits, expect)


class TestComposeBackground:
    def test_original_identity(self):
        frame = FrameBuffer.filled(32, 24, (120, 130, 140))
        out = compose_background(frame, Mask.full(32, 24), BackgroundMode.ORIGINAL)
        assert out.same_pixels(frame)

    def test_solid_peach_exact(self):
        rng = np.random.default_rng(0)
        arr = rng.integers(0, 256, (24, 32, 3), dtype=np.uint8)
        frame = FrameBuffer.from_array(arr)
        mask = Mask.from_rect(Rect(4, 4, 10, 10), 32, 24)
        out = compose_background(frame, mask, BackgroundMode.SOLID_PEACH)
        assert np.all(out.pixels[mask.bits] == (237, 209, 176))
        assert np.array_equal(out.pixels[~mask.bits], arr[~mask.bits])

    def test_blur_matches_masked_blur_oracle(self):
        rng = np.random.default_rng(1)
        arr = rng.integers(0, 256, (40, 50, 3), dtype=np.uint8)
        frame = FrameBuffer.from_array(arr)
        mask = Mask.from_rect(Rect(10, 10, 20, 15), 50, 40)
        out = compose_background(frame, mask, BackgroundMode.BLUR, blur_sigma=3.0)
        from focusview.raster import gaussian_blur
        blurred = gaussian_blur(frame, 3.0).pixels
        assert np.array_equal(out.pixels[mask.bits], blurred[mask.bits])
        assert np.array_equal(out.pixels[~mask.bits], arr[~mask.bits])


class TestInpaint:
    def test_empty_mask_identity(self):
        frame = FrameBuffer.filled(20, 20, (10, 20, 30))
        out = inpaint_fill(frame, Mask.empty(20, 20))
        assert out.same_pixels(frame)

    def test_constant_surround_fills_exactly(self):
        arr = np.full((30, 30, 3), (90, 140, 200), dtype=np.uint8)
        arr[10:20, 10:20] = (0, 255, 0)
        frame = FrameBuffer.from_array(arr)
        mask = Mask.from_rect(Rect(10, 10, 10, 10), 30, 30)
        out = inpaint_fill(frame, mask)
        assert np.all(out.pixels == (90, 140, 200))

    def test_gradient_matches_laplace_oracle(self):
        w, h = 60, 50
        ramp = np.round(np.linspace(0, 255, w)).astype(np.uint8)
        arr = np.dstack([np.tile(ramp, (h, 1))] * 3)
        frame = FrameBuffer.from_array(arr)
        hole = Rect(15, 12, 24, 20)
        mask = Mask.from_rect(hole, w, h)
        out = inpaint_fill(frame, mask)
        plane = arr[..., 0].astype(float)
        exact = laplace_solve_oracle(plane, mask.bits)
        diff = np.abs(out.pixels[..., 0].astype(float) - exact)[mask.bits]
        assert diff.max() <= 2.0

    def test_only_masked_pixels_change(self):
        rng = np.random.default_rng(4)
        arr = rng.integers(0, 256, (40, 40, 3), dtype=np.uint8)
        frame = FrameBuffer.from_array(arr)
        mask = Mask.from_rect(Rect(8, 8, 12, 9), 40, 40)
        out = inpaint_fill(frame, mask)
        assert np.array_equal(out.pixels[~mask.bits], arr[~mask.bits])

    def test_idempotent_within_one_level(self):
        rng = np.random.default_rng(5)
        arr = rng.integers(0, 256, (40, 40, 3), dtype=np.uint8)
        frame = FrameBuffer.from_array(arr)
        mask = Mask.from_rect(Rect(8, 8, 16, 16), 40, 40)
        once = inpaint_fill(frame, mask)
        twice = inpaint_fill(once, mask)
        delta = np.abs(twice.pixels.astype(int) - once.pixels.astype(int))
        assert delta.max() < 1 + 1  # rounded channels move at most 1 level

    def test_full_mask_rejected(self):
        frame = FrameBuffer.filled(10, 10, (1, 2, 3))
        with pytest.raises(InpaintError):
            inpaint_fill(frame, Mask.full(10, 10))


class TestPlanLayout:
    def test_original_keeps_everything(self):
        scene = scene_with(speaker_rect=Rect(10, 10, 50, 100),
                           content_rects=[Rect(200, 50, 100, 80)],
                           aux_rects=[Rect(5, 400, 60, 20)])
        plan = plan_layout(scene, LayoutMode.ORIGINAL, (640, 480))
        assert plan.removed_mask.count() == 0
        assert len(plan.kept) == 3
        assert all(not p.moved for p in plan.kept)

    def test_auxiliary_removal_mask(self):
        aux1 = Rect(5, 400, 60, 20)
        aux2 = Rect(500, 10, 80, 30)
        scene = scene_with(speaker_rect=Rect(10, 10, 50, 100), aux_rects=[aux1, aux2])
        plan = plan_layout(scene, LayoutMode.AUXILIARY_REMOVAL, (640, 480))
        expect = (Mask.from_rect(aux1, 640, 480).bits
                  | Mask.from_rect(aux2, 640, 480).bits)
        assert np.array_equal(plan.removed_mask.bits, expect)
        assert all(not p.moved for p in plan.kept)

    def test_content_focus_fit_arithmetic(self):
        # 640x360 content in 1920x1080 -> 1728x972 at (96, 54), scale 2.7
        scene = scene_with(content_rects=[Rect(0, 0, 640, 360)], size=(1920, 1080))
        plan = plan_layout(scene, LayoutMode.CONTENT_FOCUS, (1920, 1080))
        targets = [p.target for p in plan.kept if p.role is ElementClass.CONTENT]
        assert targets == [Rect(96, 54, 1728, 972)]

    def test_speaker_focus_height(self):
        mask = Mask.from_rect(Rect(100, 200, 80, 160), 640, 480)
        scene = scene_with(speaker_rect=Rect(100, 200, 80, 160), speaker_mask=mask)
        plan = plan_layout(scene, LayoutMode.SPEAKER_FOCUS, (640, 480))
        speaker = [p for p in plan.kept if p.role is ElementClass.SPEAKER][0]
        assert speaker.target.h == round(0.7 * 480)
        # centered
        assert abs((speaker.target.x + speaker.target.w / 2) - 320) <= 1
        assert abs((speaker.target.y + speaker.target.h / 2) - 240) <= 1

    def test_speaker_focus_without_speaker_raises(self):
        scene = scene_with(content_rects=[Rect(0, 0, 100, 100)])
        with pytest.raises(NoFocusTargetError):
            plan_layout(scene, LayoutMode.SPEAKER_FOCUS, (640, 480))

    def test_content_focus_without_content_raises(self):
        scene = scene_with(speaker_rect=Rect(10, 10, 50, 100))
        with pytest.raises(NoFocusTargetError):
            plan_layout(scene, LayoutMode.CONTENT_FOCUS, (640, 480))

    def test_placements_within_bounds(self):
        scene = scene_with(speaker_rect=Rect(0, 0, 600, 470),
                           content_rects=[Rect(620, 460, 15, 15)])
        for mode in LayoutMode:
            try:
                plan = plan_layout(scene, mode, (640, 480))
            except NoFocusTargetError:
                continue
            for p in plan.kept:
                assert p.target.x >= 0 and p.target.y >= 0
                assert p.target.x2 <= 640 and p.target.y2 <= 480


class TestComposeFrame:
    def test_full_identity(self):
        rng = np.random.default_rng(6)
        arr = rng.integers(0, 256, (48, 64, 3), dtype=np.uint8)
        frame = FrameBuffer.from_array(arr)
        scene = scene_with(speaker_rect=Rect(10, 10, 20, 30),
                           content_rects=[Rect(35, 5, 25, 20)], size=(64, 48))
        plan = plan_layout(scene, LayoutMode.ORIGINAL, (64, 48))
        out = compose_frame(frame, plan, BackgroundMode.ORIGINAL)
        assert out.same_pixels(frame)

    def test_auxiliary_removal_diff_confined(self):
        rng = np.random.default_rng(7)
        arr = rng.integers(0, 256, (48, 64, 3), dtype=np.uint8)
        frame = FrameBuffer.from_array(arr)
        aux = Rect(40, 30, 15, 10)
        scene = scene_with(speaker_rect=Rect(5, 5, 15, 25), aux_rects=[aux], size=(64, 48))
        plan = plan_layout(scene, LayoutMode.AUXILIARY_REMOVAL, (64, 48))
        out = compose_frame(frame, plan, BackgroundMode.ORIGINAL)
        diff = np.any(out.pixels != arr, axis=2)
        aux_bits = Mask.from_rect(aux, 64, 48).bits
        assert not (diff & ~aux_bits).any()

    def test_speaker_focus_solid_dark(self):
        rng = np.random.default_rng(8)
        arr = rng.integers(0, 256, (120, 160, 3), dtype=np.uint8)
        frame = FrameBuffer.from_array(arr)
        speaker = Rect(10, 20, 30, 60)
        scene = scene_with(speaker_rect=speaker, size=(160, 120))
        plan = plan_layout(scene, LayoutMode.SPEAKER_FOCUS, (160, 120))
        out = compose_frame(frame, plan, BackgroundMode.SOLID_DARK)
        target = [p for p in plan.kept if p.role is ElementClass.SPEAKER][0].target
        target_bits = Mask.from_rect(target, 160, 120).bits
        assert np.all(out.pixels[~target_bits] == (61, 61, 61))

    def test_solid_foreground_bit_identical(self):
        rng = np.random.default_rng(9)
        arr = rng.integers(0, 256, (48, 64, 3), dtype=np.uint8)
        frame = FrameBuffer.from_array(arr)
        speaker = Rect(10, 10, 20, 30)
        content = Rect(35, 5, 25, 20)
        scene = scene_with(speaker_rect=speaker, content_rects=[content], size=(64, 48))
        plan = plan_layout(scene, LayoutMode.ORIGINAL, (64, 48))
        out = compose_frame(frame, plan, BackgroundMode.SOLID_WHITE)
        fg = (Mask.from_rect(speaker, 64, 48).bits
              | Mask.from_rect(content, 64, 48).bits)
        assert np.array_equal(out.pixels[fg], arr[fg])
        assert np.all(out.pixels[~fg] == (255, 255, 255))

    def test_caption_hook_runs_last(self):
        frame = FrameBuffer.filled(32, 24, (0, 0, 0))
        plan = plan_layout(ClassifiedScene(), LayoutMode.ORIGINAL, (32, 24))

        def hook(fb):
            arr = fb.pixels.copy()
            arr[0, 0] = (1, 2, 3)
            return fb.with_pixels(arr)

        out = compose_frame(frame, plan, BackgroundMode.ORIGINAL, caption_hook=hook)
        assert tuple(out.pixels[0, 0]) == (1, 2, 3)


class TestBilinearResize:
    def test_identity(self):
        rng = np.random.default_rng(10)
        arr = rng.random((8, 9, 3))
        assert np.allclose(bilinear_resize(arr, 8, 9), arr)

    def test_constant_preserved(self):
        arr = np.full((5, 7, 3), 42.0)
        out = bilinear_resize(arr, 13, 11)
        assert np.allclose(out, 42.0)

    def test_2x_upscale_of_ramp_monotone(self):
        ramp = np.tile(np.arange(8.0), (4, 1))
        out = bilinear_resize(ramp, 8, 16)
        assert np.all(np.diff(out, axis=1) >= 0)
