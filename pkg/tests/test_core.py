"""Core type invariants: rect geometry, thresholds, presets, serialization."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from focusview.core import (
    BackgroundMode,
    CaptionStyle,
    ClassificationThresholds,
    CustomizationPreset,
    FrameBuffer,
    LayoutMode,
    Mask,
    PcmAudio,
    Rect,
    ValidationError,
    format_color,
    parse_color,
    rect_contains,
    rect_iou,
    solid_rgb,
)

rects = st.builds(
    Rect,
    x=st.integers(0, 500),
    y=st.integers(0, 500),
    w=st.integers(1, 500),
    h=st.integers(1, 500),
)


class TestRect:
    def test_area(self):
        assert Rect(0, 0, 10, 20).area() == 200

    def test_invalid_rect_rejected(self):
        with pytest.raises(ValidationError):
            Rect(-1, 0, 10, 10)
        with pytest.raises(ValidationError):
            Rect(0, 0, 0, 10)

    def test_contains_strict(self):
        assert rect_contains(Rect(0, 0, 100, 100), Rect(10, 10, 50, 50))

    def test_contains_identity(self):
        r = Rect(0, 0, 100, 100)
        assert rect_contains(r, r)

    def test_contains_tolerance_exceeded(self):
        # inner reaches (109, 109), which exceeds the outer bound by 9 > tol=2
        assert not rect_contains(Rect(0, 0, 100, 100), Rect(99, 99, 10, 10), tol=2)

    def test_contains_within_tolerance(self):
        assert rect_contains(Rect(10, 10, 100, 100), Rect(8, 8, 104, 104), tol=2)

    @given(rects, rects, rects)
    def test_contains_transitive_at_zero_tol(self, a, b, c):
        if rect_contains(a, b, tol=0) and rect_contains(b, c, tol=0):
            assert rect_contains(a, c, tol=0)

    def test_iou_identity(self):
        r = Rect(3, 4, 17, 9)
        assert rect_iou(r, r) == 1.0

    def test_iou_disjoint(self):
        assert rect_iou(Rect(0, 0, 10, 10), Rect(50, 50, 10, 10)) == 0.0

    def test_iou_half_overlap(self):
        # intersection 5x10=50, union 100+100-50=150
        assert rect_iou(Rect(0, 0, 10, 10), Rect(5, 0, 10, 10)) == pytest.approx(50 / 150)

    @given(rects, rects)
    def test_iou_symmetric_and_bounded(self, a, b):
        v = rect_iou(a, b)
        assert v == rect_iou(b, a)
        assert 0.0 <= v <= 1.0

    @given(rects, rects)
    def test_iou_zero_iff_disjoint(self, a, b):
        ix = max(0, min(a.x2, b.x2) - max(a.x, b.x))
        iy = max(0, min(a.y2, b.y2) - max(a.y, b.y))
        assert (rect_iou(a, b) == 0.0) == (ix * iy == 0)

    def test_json_round_trip(self):
        r = Rect(1, 2, 3, 4)
        assert Rect.from_json(r.to_json()) == r


class TestFrameBuffer:
    def test_shape_checked(self):
        with pytest.raises(ValidationError):
            FrameBuffer(width=4, height=4, pixels=np.zeros((4, 5, 3), dtype=np.uint8))

    def test_immutable_pixels(self):
        frame = FrameBuffer.filled(4, 4, (10, 20, 30))
        with pytest.raises(ValueError):
            frame.pixels[0, 0, 0] = 9

    def test_filled(self):
        frame = FrameBuffer.filled(3, 2, (1, 2, 3))
        assert frame.pixels.shape == (2, 3, 3)
        assert np.all(frame.pixels == [1, 2, 3])


class TestMask:
    def test_from_rect(self):
        m = Mask.from_rect(Rect(1, 1, 2, 2), 4, 4)
        assert m.count() == 4
        assert m.bits[1, 1] and m.bits[2, 2]
        assert not m.bits[0, 0]

    def test_rle_round_trip(self):
        rng = np.random.default_rng(7)
        bits = rng.random((13, 17)) > 0.6
        m = Mask.from_array(bits)
        back = Mask.from_json(m.to_json())
        assert back.same_bits(m)

    def test_rle_round_trip_extremes(self):
        for m in (Mask.empty(5, 3), Mask.full(5, 3)):
            assert Mask.from_json(m.to_json()).same_bits(m)


class TestThresholds:
    def test_defaults_match_published_constants(self):
        thr = ClassificationThresholds()
        assert thr.min_rect_area_frac == 0.05
        assert thr.long_term_persistence == 0.95
        assert thr.long_term_coverage == 0.50
        assert thr.central_min_dim_frac == 0.30
        assert thr.central_band == (1 / 3, 2 / 3)
        assert thr.track_iou_min == 0.50

    def test_out_of_range_rejected(self):
        with pytest.raises(ValidationError):
            ClassificationThresholds(min_rect_area_frac=0.0)
        with pytest.raises(ValidationError):
            ClassificationThresholds(long_term_persistence=1.5)

    def test_json_round_trip(self):
        thr = ClassificationThresholds(min_rect_area_frac=0.1)
        assert ClassificationThresholds.from_json(thr.to_json()) == thr


class TestColors:
    def test_solid_palette(self):
        assert solid_rgb(BackgroundMode.SOLID_WHITE) == (255, 255, 255)
        assert solid_rgb(BackgroundMode.SOLID_DARK) == (61, 61, 61)
        assert solid_rgb(BackgroundMode.SOLID_PEACH) == (237, 209, 176)

    def test_format_is_uppercase_hex(self):
        assert format_color((237, 209, 176)) == "#EDD1B0"
        assert parse_color("#EDD1B0") == (237, 209, 176)

    def test_bad_color_rejected(self):
        with pytest.raises(ValidationError):
            parse_color("EDD1B0")
        with pytest.raises(ValidationError):
            parse_color("#GGGGGG")


class TestPreset:
    def test_enumeration_sizes(self):
        # the 4x5 visual grid
        assert len(LayoutMode) == 4
        assert len(BackgroundMode) == 5

    def test_default_is_identity(self):
        assert CustomizationPreset().is_identity()

    def test_json_round_trip(self):
        preset = CustomizationPreset(
            layout=LayoutMode.SPEAKER_FOCUS,
            background=BackgroundMode.SOLID_PEACH,
            caption=CaptionStyle(dynamic_tracking=True),
        )
        back = CustomizationPreset.from_json(preset.to_json())
        assert back == preset

    def test_unknown_layout_rejected(self):
        with pytest.raises(ValidationError):
            CustomizationPreset.from_json({"layout": "picture_in_picture"})


class TestPcmAudio:
    def test_interleave_divisibility(self):
        with pytest.raises(ValidationError):
            PcmAudio(8000, 2, np.zeros(5, dtype=np.int16))

    def test_duration(self):
        audio = PcmAudio(8000, 2, np.zeros(16000, dtype=np.int16))
        assert audio.frame_count == 8000
        assert audio.duration == 1.0
