"""Embedded 5x7 bitmap font for caption burn-in.

Glyph aesthetics are not contractual (box geometry and highlight placement
are); lowercase renders as small caps. Unknown characters fall back to a
hollow box.
"""

from __future__ import annotations

import numpy as np

GLYPH_W = 5
GLYPH_H = 7

_RAW = {
    " ": ("....." , "....." , "....." , "....." , "....." , "....." , "....."),
    "A": (".XXX." , "X...X" , "X...X" , "XXXXX" , "X...X" , "X...X" , "X...X"),
    "B": ("XXXX." , "X...X" , "X...X" , "XXXX." , "X...X" , "X...X" , "XXXX."),
    "C": (".XXX." , "X...X" , "X...." , "X...." , "X...." , "X...X" , ".XXX."),
    "D": ("XXXX." , "X...X" , "X...X" , "X...X" , "X...X" , "X...X" , "XXXX."),
    "E": ("XXXXX" , "X...." , "X...." , "XXXX." , "X...." , "X...." , "XXXXX"),
    "F": ("XXXXX" , "X...." , "X...." , "XXXX." , "X...." , "X...." , "X...."),
    "G": (".XXX." , "X...X" , "X...." , "X.XXX" , "X...X" , "X...X" , ".XXX."),
    "H": ("X...X" , "X...X" , "X...X" , "XXXXX" , "X...X" , "X...X" , "X...X"),
    "I": ("XXXXX" , "..X.." , "..X.." , "..X.." , "..X.." , "..X.." , "XXXXX"),
    "J": ("..XXX" , "...X." , "...X." , "...X." , "...X." , "X..X." , ".XX.."),
    "K": ("X...X" , "X..X." , "X.X.." , "XX..." , "X.X.." , "X..X." , "X...X"),
    "L": ("X...." , "X...." , "X...." , "X...." , "X...." , "X...." , "XXXXX"),
    "M": ("X...X" , "XX.XX" , "X.X.X" , "X.X.X" , "X...X" , "X...X" , "X...X"),
    "N": ("X...X" , "XX..X" , "X.X.X" , "X..XX" , "X...X" , "X...X" , "X...X"),
    "O": (".XXX." , "X...X" , "X...X" , "X...X" , "X...X" , "X...X" , ".XXX."),
    "P": ("XXXX." , "X...X" , "X...X" , "XXXX." , "X...." , "X...." , "X...."),
    "Q": (".XXX." , "X...X" , "X...X" , "X...X" , "X.X.X" , "X..X." , ".XX.X"),
    "R": ("XXXX." , "X...X" , "X...X" , "XXXX." , "X.X.." , "X..X." , "X...X"),
    "S": (".XXXX" , "X...." , "X...." , ".XXX." , "....X" , "....X" , "XXXX."),
    "T": ("XXXXX" , "..X.." , "..X.." , "..X.." , "..X.." , "..X.." , "..X.."),
    "U": ("X...X" , "X...X" , "X...X" , "X...X" , "X...X" , "X...X" , ".XXX."),
    "V": ("X...X" , "X...X" , "X...X" , "X...X" , "X...X" , ".X.X." , "..X.."),
    "W": ("X...X" , "X...X" , "X...X" , "X.X.X" , "X.X.X" , "XX.XX" , "X...X"),
    "X": ("X...X" , "X...X" , ".X.X." , "..X.." , ".X.X." , "X...X" , "X...X"),
    "Y": ("X...X" , "X...X" , ".X.X." , "..X.." , "..X.." , "..X.." , "..X.."),
    "Z": ("XXXXX" , "....X" , "...X." , "..X.." , ".X..." , "X...." , "XXXXX"),
    "0": (".XXX." , "X...X" , "X..XX" , "X.X.X" , "XX..X" , "X...X" , ".XXX."),
    "1": ("..X.." , ".XX.." , "..X.." , "..X.." , "..X.." , "..X.." , ".XXX."),
    "2": (".XXX." , "X...X" , "....X" , "...X." , "..X.." , ".X..." , "XXXXX"),
    "3": ("XXXXX" , "...X." , "..X.." , "...X." , "....X" , "X...X" , ".XXX."),
    "4": ("...X." , "..XX." , ".X.X." , "X..X." , "XXXXX" , "...X." , "...X."),
    "5": ("XXXXX" , "X...." , "XXXX." , "....X" , "....X" , "X...X" , ".XXX."),
    "6": ("..XX." , ".X..." , "X...." , "XXXX." , "X...X" , "X...X" , ".XXX."),
    "7": ("XXXXX" , "....X" , "...X." , "..X.." , ".X..." , ".X..." , ".X..."),
    "8": (".XXX." , "X...X" , "X...X" , ".XXX." , "X...X" , "X...X" , ".XXX."),
    "9": (".XXX." , "X...X" , "X...X" , ".XXXX" , "....X" , "...X." , ".XX.."),
    ".": ("....." , "....." , "....." , "....." , "....." , ".XX.." , ".XX.."),
    ",": ("....." , "....." , "....." , "....." , ".XX.." , "..X.." , ".X..."),
    "!": ("..X.." , "..X.." , "..X.." , "..X.." , "..X.." , "....." , "..X.."),
    "?": (".XXX." , "X...X" , "....X" , "...X." , "..X.." , "....." , "..X.."),
    "'": ("..X.." , "..X.." , ".X..." , "....." , "....." , "....." , "....."),
    '"': (".X.X." , ".X.X." , "....." , "....." , "....." , "....." , "....."),
    ":": ("....." , ".XX.." , ".XX.." , "....." , ".XX.." , ".XX.." , "....."),
    ";": ("....." , ".XX.." , ".XX.." , "....." , ".XX.." , "..X.." , ".X..."),
    "-": ("....." , "....." , "....." , "XXXXX" , "....." , "....." , "....."),
    "_": ("....." , "....." , "....." , "....." , "....." , "....." , "XXXXX"),
    "(": ("...X." , "..X.." , ".X..." , ".X..." , ".X..." , "..X.." , "...X."),
    ")": (".X..." , "..X.." , "...X." , "...X." , "...X." , "..X.." , ".X..."),
    "/": ("....X" , "....X" , "...X." , "..X.." , ".X..." , "X...." , "X...."),
    "%": ("XX..X" , "XX..X" , "...X." , "..X.." , ".X..." , "X..XX" , "X..XX"),
    "+": ("....." , "..X.." , "..X.." , "XXXXX" , "..X.." , "..X.." , "....."),
    "=": ("....." , "....." , "XXXXX" , "....." , "XXXXX" , "....." , "....."),
    "#": (".X.X." , ".X.X." , "XXXXX" , ".X.X." , "XXXXX" , ".X.X." , ".X.X."),
    "&": (".XX.." , "X..X." , "X.X.." , ".X..." , "X.X.X" , "X..X." , ".XX.X"),
    "*": ("....." , "..X.." , "X.X.X" , ".XXX." , "X.X.X" , "..X.." , "....."),
    "@": (".XXX." , "X...X" , "....X" , ".XX.X" , "X.X.X" , "X.X.X" , ".XXX."),
}

_FALLBACK = ("XXXXX", "X...X", "X...X", "X...X", "X...X", "X...X", "XXXXX")


def _to_bits(rows: tuple[str, ...]) -> np.ndarray:
    return np.array([[c == "X" for c in row] for row in rows], dtype=bool)


_GLYPHS: dict[str, np.ndarray] = {ch: _to_bits(rows) for ch, rows in _RAW.items()}
_FALLBACK_BITS = _to_bits(_FALLBACK)


def glyph(ch: str) -> np.ndarray:
    """7x5 boolean bitmap for one character."""
    return _GLYPHS.get(ch.upper(), _FALLBACK_BITS)


def render_text_bits(text: str, bold_prefix: int = 0) -> np.ndarray:
    """Render a string to a 7x(6*len-1) boolean bitmap with 1-column
    tracking. The first `bold_prefix` characters are emboldened by a
    1-pixel horizontal dilation."""
    if not text:
        return np.zeros((GLYPH_H, 0), dtype=bool)
    cols = len(text) * (GLYPH_W + 1) - 1
    out = np.zeros((GLYPH_H, cols), dtype=bool)
    x = 0
    for i, ch in enumerate(text):
        g = glyph(ch)
        out[:, x:x + GLYPH_W] |= g
        if i < bold_prefix:
            out[:, x + 1:x + GLYPH_W + 1] |= g
        x += GLYPH_W + 1
    return out
