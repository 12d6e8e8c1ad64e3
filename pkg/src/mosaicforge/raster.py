"""Pixel buffers: decode/encode, bilinear resize, and clipped blits."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Union

import numpy as np
from PIL import Image

from .geometry import PixelRect, round_half_up

DEFAULT_FILL = (114, 114, 114)
JPEG_QUALITY = 95
FORMATS = {"png": "PNG", "jpeg": "JPEG", "jpg": "JPEG"}


class SizingError(ValueError):
    pass


@dataclass
class Canvas:
    """Square RGB8 canvas, ``pixels`` has shape ``(side, side, 3)``."""

    side: int
    pixels: np.ndarray
    fill_value: tuple[int, int, int] = DEFAULT_FILL

    @classmethod
    def blank(cls, side: int, fill_value: tuple[int, int, int] = DEFAULT_FILL) -> "Canvas":
        pixels = np.full((side, side, 3), fill_value, dtype=np.uint8)
        return cls(side, pixels, tuple(fill_value))

    @property
    def bounds(self) -> PixelRect:
        return PixelRect(0, 0, self.side, self.side)


def decode_image(path: Union[Path, str]) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8).copy()


def scaled_dims(width: int, height: int, scale: Union[float, Fraction]) -> tuple[int, int]:
    return max(round_half_up(Fraction(scale) * width), 1), max(round_half_up(Fraction(scale) * height), 1)


def _sample_positions(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # corner-aligned: output 0 -> input 0, output n_out-1 -> input n_in-1
    if n_out == 1 or n_in == 1:
        src = np.zeros(n_out, dtype=np.float64)
    else:
        src = (np.arange(n_out, dtype=np.int64) * (n_in - 1)) / (n_out - 1)
    lo = np.floor(src).astype(np.int64)
    lo = np.minimum(lo, n_in - 1)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = src - lo
    return lo, hi, frac


def resize_image(
    image: np.ndarray,
    scale: Union[float, Fraction],
    max_side: Optional[int] = None,
) -> np.ndarray:
    """Bilinear resize with aligned corners.

    Output size is ``round_half_up(scale * dim)`` per axis (at least 1).
    ``max_side`` bounds the output so it fits on a canvas.
    """
    if scale <= 0:
        raise SizingError(f"scale must be positive, got {scale}")
    h_in, w_in = image.shape[:2]
    w_out, h_out = scaled_dims(w_in, h_in, scale)
    if max_side is not None and max(w_out, h_out) > max_side:
        raise SizingError(f"resized image {w_out}x{h_out} exceeds limit {max_side}")
    if (w_out, h_out) == (w_in, h_in):
        return image.copy()

    x0, x1, fx = _sample_positions(w_in, w_out)
    y0, y1, fy = _sample_positions(h_in, h_out)
    src = image.astype(np.float64)
    # separable: interpolate rows first, then columns
    fy = fy[:, None, None]
    rows = src[y0]
    rows *= 1 - fy
    rows += src[y1] * fy
    fx = fx[None, :, None]
    out = rows[:, x0]
    out *= 1 - fx
    out += rows[:, x1] * fx
    out += 0.5
    np.floor(out, out=out)
    np.clip(out, 0, 255, out=out)
    return out.astype(np.uint8)


def covered_region(dest_origin: tuple[int, int], size: tuple[int, int], clip_rect: PixelRect) -> PixelRect:
    """Part of ``clip_rect`` covered by a ``size = (w, h)`` image placed at ``dest_origin``."""
    ox, oy = dest_origin
    w, h = size
    x1, y1 = max(ox, clip_rect.x1), max(oy, clip_rect.y1)
    x2, y2 = min(ox + w, clip_rect.x2), min(oy + h, clip_rect.y2)
    if x2 <= x1 or y2 <= y1:
        return PixelRect(clip_rect.x1, clip_rect.y1, clip_rect.x1, clip_rect.y1)
    return PixelRect(x1, y1, x2, y2)


def blit_cropped(
    canvas: Canvas,
    image: np.ndarray,
    dest_origin: tuple[int, int],
    clip_rect: PixelRect,
) -> PixelRect:
    """Copy ``image`` onto ``canvas`` with its top-left at ``dest_origin``.

    Only pixels inside ``clip_rect`` are written. Returns the canvas region
    actually covered by source pixels, empty when nothing lands in the clip.
    """
    if not canvas.bounds.contains(clip_rect):
        raise SizingError(f"clip rect {clip_rect.as_tuple()} is not within the canvas")
    h, w = image.shape[:2]
    region = covered_region(dest_origin, (w, h), clip_rect)
    if region.is_empty:
        return region
    ox, oy = dest_origin
    x1, y1, x2, y2 = region.as_tuple()
    canvas.pixels[y1:y2, x1:x2] = image[y1 - oy : y2 - oy, x1 - ox : x2 - ox]
    return region


def encode_image(canvas: Union[Canvas, np.ndarray], path: Union[Path, str], format: Optional[str] = None,
                 quality: int = JPEG_QUALITY) -> None:
    """Write the canvas as PNG (lossless) or JPEG; format defaults to the file suffix."""
    path = Path(path)
    key = (format or path.suffix.lstrip(".")).lower()
    if key not in FORMATS:
        raise ValueError(f"unsupported image format {key!r}")
    pixels = canvas.pixels if isinstance(canvas, Canvas) else canvas
    im = Image.fromarray(np.ascontiguousarray(pixels))
    if FORMATS[key] == "JPEG":
        im.save(path, format="JPEG", quality=quality)
    else:
        im.save(path, format="PNG")
