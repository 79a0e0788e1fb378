"""Square binary glyphs and their pattern encoding.

Glyph files are plain text. Each glyph is a line ``@<label>`` followed by
``g`` rows of ``g`` characters drawn from ``0 1 . #`` (``#`` and ``1`` are
on, ``.`` and ``0`` are off). Glyphs are separated by blank lines and every
glyph in a file must have the same side. See ``docs/glyph_format.md``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .hopfield import DimensionError

BUILTIN_RESOURCE = "latin_4x4.txt"
BUILTIN_SHA256 = "1af2526d7a7433d3363a4fcc77e27ce94a96de10d4fc0c198f7a9d61ea8d54b2"

_ON = {"#": 1, "1": 1, ".": 0, "0": 0}


class GlyphParseError(ValueError):
    pass


@dataclass(frozen=True)
class GlyphGrid:
    label: str
    cells: np.ndarray  # (g, g) uint8

    def __post_init__(self):
        cells = np.asarray(self.cells)
        if cells.ndim != 2 or cells.shape[0] != cells.shape[1] or cells.shape[0] < 1:
            raise DimensionError(f"glyph {self.label!r} is not a non-empty square grid")
        if not np.isin(cells, (0, 1)).all():
            raise ValueError(f"glyph {self.label!r} has cells other than 0/1")
        object.__setattr__(self, "cells", cells.astype(np.uint8))

    @property
    def side(self) -> int:
        return self.cells.shape[0]

    def __eq__(self, other):
        if not isinstance(other, GlyphGrid):
            return NotImplemented
        return self.label == other.label and np.array_equal(self.cells, other.cells)

    def __hash__(self):
        return hash((self.label, self.cells.tobytes()))

    def render(self, on: str = "#", off: str = ".") -> str:
        return "\n".join("".join(on if c else off for c in row) for row in self.cells)


def encode_grid(grid: GlyphGrid) -> np.ndarray:
    return grid.cells.reshape(-1).copy()


def decode_pattern(p, side: int, label: str = "?") -> GlyphGrid:
    p = np.asarray(p, dtype=np.uint8)
    if p.ndim != 1 or p.size != side * side:
        raise DimensionError(f"pattern of length {p.size} does not fill a {side}x{side} grid")
    return GlyphGrid(label, p.reshape(side, side))


def parse_glyphs(text: str, source: str = "<string>") -> list[GlyphGrid]:
    glyphs: list[GlyphGrid] = []
    side = None
    label = None
    rows: list[str] = []
    start = 0

    def finish():
        nonlocal side
        if label is None:
            return
        where = f"{source}:{start}: glyph {label!r}"
        if not rows:
            raise GlyphParseError(f"{where} has no rows")
        g = len(rows[0])
        if any(len(r) != g for r in rows) or len(rows) != g:
            raise GlyphParseError(f"{where} is not a square grid ({len(rows)} rows)")
        if side is not None and g != side:
            raise GlyphParseError(f"{where} has side {g}, earlier glyphs have side {side}")
        side = g
        cells = np.array([[_ON[c] for c in r] for r in rows], dtype=np.uint8)
        glyphs.append(GlyphGrid(label, cells))

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            finish()
            label, rows = None, []
            continue
        if line.startswith("@"):
            finish()
            label, rows, start = line[1:], [], lineno
            if len(label) != 1 or label.isspace():
                raise GlyphParseError(
                    f"{source}:{lineno}: label must be a single character, got {label!r}")
            continue
        if label is None:
            raise GlyphParseError(f"{source}:{lineno}: row outside a glyph block: {line!r}")
        bad = set(line) - set(_ON)
        if bad:
            raise GlyphParseError(
                f"{source}:{lineno}: glyph {label!r} has invalid characters {sorted(bad)}")
        rows.append(line)
    finish()

    seen_labels: dict[str, int] = {}
    seen_bits: dict[bytes, str] = {}
    for i, gl in enumerate(glyphs):
        if gl.label in seen_labels:
            raise GlyphParseError(f"{source}: duplicate label {gl.label!r}")
        seen_labels[gl.label] = i
        key = gl.cells.tobytes()
        if key in seen_bits:
            raise GlyphParseError(
                f"{source}: glyph {gl.label!r} duplicates the pattern of {seen_bits[key]!r}")
        seen_bits[key] = gl.label
    return glyphs


def load_glyph_set(source) -> list[GlyphGrid]:
    path = Path(source)
    return parse_glyphs(path.read_text(), str(path))


def format_glyphs(glyphs) -> str:
    return "\n".join(f"@{g.label}\n{g.render()}\n" for g in glyphs)


def builtin_text() -> str:
    return resources.files("groupselect.data").joinpath(BUILTIN_RESOURCE).read_text()


def builtin_alphabet() -> list[GlyphGrid]:
    """The 26 pinned 4x4 letters A-Z."""
    text = builtin_text()
    digest = hashlib.sha256(text.encode()).hexdigest()
    if digest != BUILTIN_SHA256:
        raise RuntimeError(f"built-in alphabet asset changed (sha256 {digest})")
    return parse_glyphs(text, BUILTIN_RESOURCE)


def pattern_matrix(glyphs) -> np.ndarray:
    """Stack glyph encodings into a ``(len(glyphs), g*g)`` array."""
    if not glyphs:
        return np.zeros((0, 0), dtype=np.uint8)
    return np.stack([encode_grid(g) for g in glyphs])
