"""Batch generation, previews, dataset statistics, and output digests."""

from __future__ import annotations

import hashlib
import logging
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
from PIL import Image, ImageDraw

from .annotations import IMAGE_SUFFIXES, LabeledImage, format_label_text, target_density
from .config import PipelineConfig
from .engine import SELECT, MosaicResult, augment_once
from .geometry import largest_quadrant
from .raster import decode_image, encode_image
from .sampling import RandomStream, worker_seed

log = logging.getLogger(__name__)

BOX_COLORS = [(255, 255, 255), (0, 0, 0), (255, 255, 0), (0, 255, 255)]  # per source image
CENTER_COLOR = (255, 255, 255)
MASK_COLOR = (255, 0, 255)
HISTOGRAM_BINS = ((0, 0), (1, 4), (5, 9), (10, 19), (20, 49), (50, 99), (100, None))


@dataclass(frozen=True)
class MosaicRecord:
    index: int
    mode: str
    box_count: int


@dataclass(frozen=True)
class GenerateSummary:
    written: int
    select_fraction: float
    mean_boxes: float

    def report(self) -> str:
        return (
            f"mosaics written: {self.written}\n"
            f"select-mode fraction: {self.select_fraction:.4f}\n"
            f"mean boxes per mosaic: {self.mean_boxes:.4f}\n"
        )


def worker_slices(count: int, workers: int) -> list[range]:
    """Contiguous, near-equal slices of ``range(count)``, one per worker."""
    base, extra = divmod(count, workers)
    slices, start = [], 0
    for w in range(workers):
        size = base + (1 if w < extra else 0)
        slices.append(range(start, start + size))
        start += size
    return slices


def iter_results(
    dataset: Sequence[LabeledImage], config: PipelineConfig, indices: range, worker: int, render: bool = True
) -> Iterator[tuple[int, MosaicResult]]:
    stream = RandomStream(worker_seed(config.seed, worker))
    for i in indices:
        yield i, augment_once(dataset, config, stream, render=render)


def write_result(result: MosaicResult, index: int, output_root: Path, image_format: str = "png") -> None:
    side = result.plan.canvas_side
    suffix = "png" if image_format == "png" else "jpg"
    encode_image(result.canvas, output_root / "images" / f"mosaic_{index}.{suffix}", image_format)
    (output_root / "labels" / f"mosaic_{index}.txt").write_text(
        format_label_text(result.boxes, side, side), encoding="utf-8", newline="\n"
    )


def _generate_slice(
    dataset: Sequence[LabeledImage], config: PipelineConfig, indices: range, worker: int, output_root: Path
) -> list[MosaicRecord]:
    records = []
    for i, result in iter_results(dataset, config, indices, worker):
        write_result(result, i, output_root, config.image_format)
        records.append(MosaicRecord(i, result.plan.mode, len(result.boxes)))
    return records


def generate(dataset: Sequence[LabeledImage], config: PipelineConfig, output_root: Path | str) -> GenerateSummary:
    """Write ``config.count`` mosaics and their labels under ``output_root``."""
    output_root = Path(output_root)
    (output_root / "images").mkdir(parents=True, exist_ok=True)
    (output_root / "labels").mkdir(parents=True, exist_ok=True)
    slices = worker_slices(config.count, config.workers)

    records: list[MosaicRecord] = []
    if config.workers == 1:
        records = _generate_slice(dataset, config, slices[0], 0, output_root)
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [
                pool.submit(_generate_slice, dataset, config, s, w, output_root)
                for w, s in enumerate(slices)
                if len(s)
            ]
            for fut in futures:
                records.extend(fut.result())
    records.sort(key=lambda r: r.index)
    log.info("wrote %d mosaics to %s", len(records), output_root)
    return summarize(records)


def summarize(records: Sequence[MosaicRecord]) -> GenerateSummary:
    n = len(records)
    if n == 0:
        return GenerateSummary(0, 0.0, 0.0)
    selected = sum(1 for r in records if r.mode == SELECT)
    return GenerateSummary(n, selected / n, sum(r.box_count for r in records) / n)


def annotate(result: MosaicResult) -> Image.Image:
    """Canvas with 2 px box outlines, a center cross, and (select mode) the largest mask."""
    im = Image.fromarray(result.canvas.pixels.copy())
    draw = ImageDraw.Draw(im)
    plan = result.plan
    if plan.mode == SELECT:
        rect = plan.layout.rects[largest_quadrant(plan.layout)]
        draw.rectangle((rect.x1, rect.y1, rect.x2 - 1, rect.y2 - 1), outline=MASK_COLOR, width=2)
    for box, source in zip(result.boxes, result.provenance):
        color = BOX_COLORS[source % len(BOX_COLORS)]
        draw.rectangle((box.x1, box.y1, box.x2 - 1, box.y2 - 1), outline=color, width=2)
    cx, cy = plan.center.cx, plan.center.cy
    draw.line((cx - 8, cy, cx + 8, cy), fill=CENTER_COLOR, width=2)
    draw.line((cx, cy - 8, cx, cy + 8), fill=CENTER_COLOR, width=2)
    return im


def preview(dataset: Sequence[LabeledImage], config: PipelineConfig, output_dir: Path | str, n: int) -> list[Path]:
    """Write ``n`` annotated previews; preview i shows the same mosaic as ``generate`` with one worker."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, result in iter_results(dataset, config, range(n), worker=0):
        path = output_dir / f"preview_{i}.png"
        annotate(result).save(path, format="PNG")
        paths.append(path)
    return paths


def dataset_stats(dataset: Sequence[LabeledImage], metric: str = "count_per_area") -> dict[str, float | int]:
    counts = [len(im.boxes) for im in dataset]
    densities = [float(target_density(im, metric)) for im in dataset]
    stats: dict[str, float | int] = {
        "images": len(dataset),
        "boxes_total": sum(counts),
        "boxes_min": min(counts),
        "boxes_mean": statistics.fmean(counts),
        "boxes_median": statistics.median(counts),
        "boxes_max": max(counts),
        "density_metric": metric,
        "density_min": min(densities),
        "density_mean": statistics.fmean(densities),
        "density_max": max(densities),
    }
    for lo, hi in HISTOGRAM_BINS:
        key = f"hist_{lo}" if hi == lo else (f"hist_{lo}_plus" if hi is None else f"hist_{lo}_{hi}")
        stats[key] = sum(1 for c in counts if c >= lo and (hi is None or c <= hi))
    return stats


def format_kv(stats: dict) -> str:
    return "".join(f"{k}={v:.8g}\n" if isinstance(v, float) else f"{k}={v}\n" for k, v in stats.items())


def format_report(stats: dict) -> str:
    lines = [
        f"images: {stats['images']}  boxes: {stats['boxes_total']}",
        f"boxes per image: min {stats['boxes_min']}  mean {stats['boxes_mean']:.4f}  "
        f"median {stats['boxes_median']}  max {stats['boxes_max']}",
        f"density ({stats['density_metric']}): min {stats['density_min']:.6g}  "
        f"mean {stats['density_mean']:.6g}  max {stats['density_max']:.6g}",
        "boxes-per-image histogram:",
    ]
    hist = {k: v for k, v in stats.items() if k.startswith("hist_")}
    width = max(hist.values()) or 1
    for key, value in hist.items():
        label = key[5:].replace("_plus", "+").replace("_", "-")
        lines.append(f"  {label:>7} | {'#' * round(40 * value / width)} {value}")
    return "\n".join(lines) + "\n"


def output_digest(root: Path | str) -> str:
    """SHA-256 over label bytes and decoded pixels of an output tree.

    Pixels are hashed after decoding so the digest does not depend on the
    PNG encoder's compression choices.
    """
    root = Path(root)
    h = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        rel = path.relative_to(root).as_posix()
        h.update(rel.encode() + b"\0")
        if path.suffix.lower() in IMAGE_SUFFIXES:
            pixels = decode_image(path)
            h.update(np.asarray(pixels.shape, dtype="<u4").tobytes())
            h.update(pixels.tobytes())
        else:
            h.update(path.read_bytes())
    return h.hexdigest()
