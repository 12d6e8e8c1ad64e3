"""Color-coded synthetic datasets for oracle checks.

Each image gets its own hue. The background is a dark shade of that hue and
every box is filled with a bright shade, so any pixel of a composed mosaic
can be traced back to its source image: bilinear blends of two shades stay
on the segment between them, and no two images share a hue.
"""

from __future__ import annotations

import colorsys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .annotations import LabeledImage, format_label_text
from .geometry import BBox
from .raster import DEFAULT_FILL, encode_image
from .sampling import RandomStream

MAX_PALETTES = 12
MIXED_COUNTS = (0, 5, 10, 50)


def palette(index: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """(dark, bright) RGB shades for image ``index`` out of ``n``."""
    if n > MAX_PALETTES:
        raise ValueError(f"at most {MAX_PALETTES} distinguishable images, got {n}")
    hue = index / n
    dark = np.array(colorsys.hsv_to_rgb(hue, 1.0, 0.4)) * 255
    bright = np.array(colorsys.hsv_to_rgb(hue, 1.0, 0.95)) * 255
    return np.round(dark), np.round(bright)


def make_image(
    index: int,
    n: int,
    box_count: int,
    width: int,
    height: int,
    stream: RandomStream,
    box_side: tuple[int, int] = (6, 16),
) -> LabeledImage:
    dark, bright = palette(index, n)
    pixels = np.empty((height, width, 3), dtype=np.uint8)
    pixels[...] = dark.astype(np.uint8)
    boxes = []
    lo, hi = box_side
    for _ in range(box_count):
        w = lo + stream.below(hi - lo + 1)
        h = lo + stream.below(hi - lo + 1)
        x1 = stream.below(width - w + 1)
        y1 = stream.below(height - h + 1)
        box = BBox(index % 10, x1, y1, x1 + w, y1 + h)
        pixels[box.y1 : box.y2, box.x1 : box.x2] = bright.astype(np.uint8)
        boxes.append(box)
    return LabeledImage(None, width, height, boxes, pixels)


def mixed_density_dataset(
    counts: Sequence[int] = MIXED_COUNTS,
    repeats: int = 2,
    size: tuple[int, int] = (160, 120),
    seed: int = 7,
) -> list[LabeledImage]:
    """``repeats`` images for every box count in ``counts``, all of one size.

    Equal sizes make density ties between repeats certain, which exercises
    the lowest-index tie-break.
    """
    stream = RandomStream(seed)
    plan = [c for _ in range(repeats) for c in counts]
    n = len(plan)
    return [make_image(i, n, c, size[0], size[1], stream) for i, c in enumerate(plan)]


def palettes_for(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    return [palette(i, n) for i in range(n)]


def classify_pixels(
    pixels: np.ndarray,
    palettes: Sequence[tuple[np.ndarray, np.ndarray]],
    fill: Sequence[int] = DEFAULT_FILL,
    tolerance: float = 3.0,
) -> np.ndarray:
    """Source image index for each ``(N, 3)`` pixel; -1 for fill or unknown colors."""
    p = np.asarray(pixels, dtype=np.float64).reshape(-1, 3)
    dark = np.stack([d for d, _ in palettes])  # (K, 3)
    span = np.stack([b for _, b in palettes]) - dark
    rel = p[:, None, :] - dark[None, :, :]  # (N, K, 3)
    t = np.clip((rel * span).sum(-1) / (span * span).sum(-1), 0.0, 1.0)
    dist = np.linalg.norm(rel - t[..., None] * span[None], axis=-1)
    best = dist.argmin(axis=1)
    labels = np.where(dist[np.arange(len(p)), best] <= tolerance, best, -1)
    is_fill = np.linalg.norm(p - np.asarray(fill, dtype=np.float64), axis=1) <= tolerance
    return np.where(is_fill, -1, labels)


def classify_pixel(pixel: Sequence[int], palettes, fill: Sequence[int] = DEFAULT_FILL, tolerance: float = 3.0) -> Optional[int]:
    label = int(classify_pixels(np.asarray([pixel]), palettes, fill, tolerance)[0])
    return None if label < 0 else label


def write_dataset(dataset: Sequence[LabeledImage], root: Path | str) -> Path:
    """Write an in-memory dataset in the ``images/`` + ``labels/`` layout."""
    root = Path(root)
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "labels").mkdir(parents=True, exist_ok=True)
    for i, im in enumerate(dataset):
        encode_image(im.load_pixels(), root / "images" / f"synth_{i:03d}.png")
        (root / "labels" / f"synth_{i:03d}.txt").write_text(
            format_label_text(im.boxes, im.width, im.height), encoding="utf-8", newline="\n"
        )
    return root
