"""YOLO labels, labeled images, and per-image target density."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from .geometry import BBox, round_half_up

IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png")
DENSITY_METRICS = ("count", "count_per_area")


class LabelParseError(ValueError):
    def __init__(self, message: str, line_number: Optional[int] = None, path: Optional[Path] = None):
        self.reason = message
        self.line_number = line_number
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line_number is not None:
            where += f"{':' if where else 'line '}{line_number}"
        super().__init__(f"{where}: {message}" if where else message)


class DatasetError(RuntimeError):
    pass


@dataclass
class LabeledImage:
    """An image and its boxes.

    ``pixels`` may hold an already-decoded ``(H, W, 3)`` uint8 array; when it
    is None the image is decoded from ``image_path`` on demand.
    """

    image_path: Optional[Path]
    width: int
    height: int
    boxes: list[BBox] = field(default_factory=list)
    pixels: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"image dimensions must be positive, got {self.width}x{self.height}")

    def load_pixels(self) -> np.ndarray:
        if self.pixels is not None:
            return self.pixels
        if self.image_path is None:
            raise DatasetError("image has neither pixels nor a path")
        from .raster import decode_image

        return decode_image(self.image_path)


def _parse_unit(token: str, name: str, line_number: Optional[int]) -> Fraction:
    try:
        value = Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise LabelParseError(f"non-numeric {name} {token!r}", line_number) from None
    if not 0 <= value <= 1:
        raise LabelParseError(f"{name}={token} outside [0, 1]", line_number)
    return value


def parse_yolo_line(
    line: str, image_width: int, image_height: int, line_number: Optional[int] = None
) -> BBox:
    """Convert one ``class cx cy w h`` line into an absolute xyxy box.

    Tokens are parsed as exact decimals, so the rounding of
    ``(cx - w/2) * W`` is independent of float representation. Corners that
    fall outside the image are clamped to it.
    """
    fields = line.split()
    if len(fields) != 5:
        raise LabelParseError(f"expected 5 fields, got {len(fields)}", line_number)
    try:
        class_id = int(fields[0])
    except ValueError:
        raise LabelParseError(f"non-integer class id {fields[0]!r}", line_number) from None
    if class_id < 0:
        raise LabelParseError(f"negative class id {class_id}", line_number)
    cx, cy, w, h = (
        _parse_unit(tok, name, line_number)
        for tok, name in zip(fields[1:], ("cx", "cy", "w", "h"))
    )
    W, H = image_width, image_height
    x1 = min(max(round_half_up((cx - w / 2) * W), 0), W)
    x2 = min(max(round_half_up((cx + w / 2) * W), 0), W)
    y1 = min(max(round_half_up((cy - h / 2) * H), 0), H)
    y2 = min(max(round_half_up((cy + h / 2) * H), 0), H)
    if x2 <= x1 or y2 <= y1:
        raise LabelParseError(f"degenerate box {(x1, y1, x2, y2)} on {W}x{H} image", line_number)
    return BBox(class_id, x1, y1, x2, y2)


def serialize_yolo_line(box: BBox, image_width: int, image_height: int) -> str:
    W, H = image_width, image_height
    cx = (box.x1 + box.x2) / (2 * W)
    cy = (box.y1 + box.y2) / (2 * H)
    w = (box.x2 - box.x1) / W
    h = (box.y2 - box.y1) / H
    return f"{box.class_id} {cx:.6f} {cy:.6f} {w:.6f} {h:.6f}"


def parse_label_text(text: str, image_width: int, image_height: int, path: Optional[Path] = None) -> list[BBox]:
    boxes = []
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            boxes.append(parse_yolo_line(line, image_width, image_height, number))
        except LabelParseError as exc:
            raise LabelParseError(exc.reason, number, path) from None
    return boxes


def format_label_text(boxes: Sequence[BBox], image_width: int, image_height: int) -> str:
    return "".join(serialize_yolo_line(b, image_width, image_height) + "\n" for b in boxes)


def load_dataset(root: Path | str) -> list[LabeledImage]:
    """Load ``<root>/images/*`` with labels from ``<root>/labels/<stem>.txt``.

    Images are returned sorted by path. An image without a label file has no
    boxes. Pixels are not decoded here, only the header is read for size.
    """
    root = Path(root)
    image_dir = root / "images"
    label_dir = root / "labels"
    if not image_dir.is_dir():
        raise DatasetError(f"{image_dir} is not a directory")
    paths = sorted(p for p in image_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not paths:
        raise DatasetError(f"no images found under {image_dir}")

    dataset = []
    for path in paths:
        try:
            with Image.open(path) as im:
                width, height = im.size
        except (OSError, UnidentifiedImageError) as exc:
            raise DatasetError(f"cannot read image {path}: {exc}") from exc
        label_path = label_dir / f"{path.stem}.txt"
        boxes: list[BBox] = []
        if label_path.is_file():
            text = label_path.read_text(encoding="utf-8")
            boxes = parse_label_text(text, width, height, label_path)
        dataset.append(LabeledImage(path, width, height, boxes))
    return dataset


def target_density(image: LabeledImage, metric: str = "count_per_area") -> Fraction:
    """Objects per pixel (``count_per_area``) or the plain box count (``count``)."""
    if metric == "count_per_area":
        return Fraction(len(image.boxes), image.width * image.height)
    if metric == "count":
        return Fraction(len(image.boxes))
    raise ValueError(f"unknown density metric {metric!r}; expected one of {DENSITY_METRICS}")
