"""Integer geometry on the mosaic canvas.

Rectangles are half-open: ``PixelRect(x1, y1, x2, y2)`` covers columns
``x1..x2-1`` and rows ``y1..y2-1``. Quadrants are always ordered
top-left, top-right, bottom-left, bottom-right.
"""

from __future__ import annotations

from functools import lru_cache
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

Number = Union[int, float, Fraction]


class InvalidCenterError(ValueError):
    """Raised when a splice center does not lie on the canvas."""


def round_half_up(value: Number) -> int:
    """Round to the nearest integer, halves going towards +inf.

    Floats are converted to ``Fraction`` first so that the result does not
    depend on how the product that produced ``value`` was rounded.
    """
    if isinstance(value, int):
        return value
    f = Fraction(value)
    return (2 * f.numerator + f.denominator) // (2 * f.denominator)


@lru_cache(maxsize=64)
def _as_ratio(value: Number) -> tuple[int, int]:
    # limit_denominator so that a float 0.1 means exactly 1/10
    f = Fraction(value).limit_denominator(10**6) if isinstance(value, float) else Fraction(value)
    return f.numerator, f.denominator


@dataclass(frozen=True)
class PixelRect:
    x1: int
    y1: int
    x2: int
    y2: int

    def __post_init__(self):
        if self.x2 < self.x1 or self.y2 < self.y1:
            raise ValueError(f"inverted rect {self.as_tuple()}")

    @property
    def width(self) -> int:
        return self.x2 - self.x1

    @property
    def height(self) -> int:
        return self.y2 - self.y1

    @property
    def area(self) -> int:
        return self.width * self.height

    @property
    def is_empty(self) -> bool:
        return self.area == 0

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x1, self.y1, self.x2, self.y2)

    def contains(self, other: "PixelRect") -> bool:
        return (
            self.x1 <= other.x1
            and self.y1 <= other.y1
            and other.x2 <= self.x2
            and other.y2 <= self.y2
        )

    def intersection(self, other: "PixelRect") -> "PixelRect":
        """Overlap of two rects; an empty rect (anchored inside ``self``) if disjoint."""
        x1 = max(self.x1, other.x1)
        y1 = max(self.y1, other.y1)
        x2 = min(self.x2, other.x2)
        y2 = min(self.y2, other.y2)
        if x2 <= x1 or y2 <= y1:
            x1 = min(max(x1, self.x1), self.x2)
            y1 = min(max(y1, self.y1), self.y2)
            return PixelRect(x1, y1, x1, y1)
        return PixelRect(x1, y1, x2, y2)


@dataclass(frozen=True)
class SpliceCenter:
    cx: int
    cy: int


@dataclass(frozen=True)
class QuadrantLayout:
    rects: tuple[PixelRect, PixelRect, PixelRect, PixelRect]
    canvas_side: int

    @property
    def areas(self) -> tuple[int, int, int, int]:
        return tuple(r.area for r in self.rects)  # type: ignore[return-value]


@dataclass(frozen=True)
class BBox:
    """One object annotation in absolute ``xyxy`` pixel coordinates.

    Remapped boxes may temporarily sit partly off-canvas (negative or
    oversized coordinates) until they are clipped.
    """

    class_id: int
    x1: int
    y1: int
    x2: int
    y2: int

    @property
    def width(self) -> int:
        return self.x2 - self.x1

    @property
    def height(self) -> int:
        return self.y2 - self.y1

    @property
    def area(self) -> int:
        return max(self.width, 0) * max(self.height, 0)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x1, self.y1, self.x2, self.y2)

    def rect(self) -> PixelRect:
        return PixelRect(self.x1, self.y1, self.x2, self.y2)


def quadrant_layout(center: SpliceCenter, canvas_side: int) -> QuadrantLayout:
    cx, cy, side = center.cx, center.cy, canvas_side
    if not (0 <= cx <= side and 0 <= cy <= side):
        raise InvalidCenterError(f"center ({cx}, {cy}) outside {side}x{side} canvas")
    rects = (
        PixelRect(0, 0, cx, cy),
        PixelRect(cx, 0, side, cy),
        PixelRect(0, cy, cx, side),
        PixelRect(cx, cy, side, side),
    )
    return QuadrantLayout(rects=rects, canvas_side=side)


def largest_quadrant(layout: QuadrantLayout) -> int:
    """Index of the quadrant with the largest area, lowest index on ties."""
    areas = layout.areas
    best = 0
    for i in range(1, 4):
        if areas[i] > areas[best]:
            best = i
    return best


def remap_box(box: BBox, scale: Number, offset_x: int, offset_y: int) -> BBox:
    """Scale a box about the origin, then translate it.

    Each corner maps as ``round_half_up(scale * c) + offset``.
    """
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    s = Fraction(scale)
    num2, den = 2 * s.numerator, s.denominator
    den2 = 2 * den

    def scaled(c: int) -> int:
        return (num2 * c + den) // den2

    return BBox(
        box.class_id,
        scaled(box.x1) + offset_x,
        scaled(box.y1) + offset_y,
        scaled(box.x2) + offset_x,
        scaled(box.y2) + offset_y,
    )


def clip_box(
    box: BBox,
    bounds: PixelRect,
    min_visibility: float = 0.1,
    min_side: int = 2,
) -> Optional[BBox]:
    """Intersect ``box`` with ``bounds``.

    Returns None (dropped) when the surviving fraction of the original area
    is below ``min_visibility`` or either clipped side is below ``min_side``.
    """
    if not 0 <= min_visibility <= 1:
        raise ValueError(f"min_visibility must be in [0, 1], got {min_visibility}")
    x1 = max(box.x1, bounds.x1)
    y1 = max(box.y1, bounds.y1)
    x2 = min(box.x2, bounds.x2)
    y2 = min(box.y2, bounds.y2)
    w, h = x2 - x1, y2 - y1
    if w <= 0 or h <= 0 or box.area == 0:
        return None
    if w < min_side or h < min_side:
        return None
    num, den = _as_ratio(min_visibility)
    if w * h * den < num * box.area:
        return None
    return BBox(box.class_id, x1, y1, x2, y2)
