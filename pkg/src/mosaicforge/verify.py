"""Self-checks on the built-in synthetic dataset.

The oracles here recompute densities, mask areas and pixel provenance on
their own and never call the engine's tie-break helpers.
"""

from __future__ import annotations

import tempfile
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .annotations import LabeledImage
from .config import PipelineConfig
from .engine import SELECT, MosaicResult, augment_once
from .pipeline import generate, output_digest
from .sampling import RandomStream, draw_gate
from .synthetic import classify_pixels, mixed_density_dataset, palettes_for

REFERENCE_SEED = 20240608
REFERENCE_CONFIG = PipelineConfig(output_size=160, select_prob=0.4, seed=REFERENCE_SEED, count=8)
# sha256 of the output tree from generate(mixed_density_dataset(), REFERENCE_CONFIG)
GOLDEN_DIGEST = "a09e4a4904ae04e8eda04cfb950a27ef7e7f9eb9361df07d3425f592fede5f14"


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def oracle_mask_areas(cx: int, cy: int, side: int) -> list[int]:
    return [cx * cy, (side - cx) * cy, cx * (side - cy), (side - cx) * (side - cy)]


def oracle_argmax(values: Sequence) -> int:
    """First index holding the maximum."""
    top = max(values)
    return next(i for i, v in enumerate(values) if v == top)


def oracle_density(image: LabeledImage, metric: str) -> Fraction:
    n = len(image.boxes)
    return Fraction(n) if metric == "count" else Fraction(n, image.width * image.height)


def select_rule_holds(result: MosaicResult, images: Sequence[LabeledImage], metric: str) -> bool:
    plan = result.plan
    areas = oracle_mask_areas(plan.center.cx, plan.center.cy, plan.canvas_side)
    densest = oracle_argmax([oracle_density(im, metric) for im in images])
    return plan.quadrant_of(densest) == oracle_argmax(areas)


def grid_points(lo: int, hi: int, n: int = 5) -> list[int]:
    """``n`` evenly spaced integer positions over ``[lo+1, hi-2]`` (1 px inset, half-open ``hi``)."""
    a, b = lo + 1, hi - 2
    if b < a:
        a = b = (lo + hi - 1) // 2
    return sorted({int(round(v)) for v in np.linspace(a, b, n)})


def soundness_violations(result: MosaicResult, palettes) -> int:
    """Grid samples inside emitted boxes whose color does not trace back to the box's source image."""
    pixels = result.canvas.pixels
    ys, xs, expected = [], [], []
    for box, source in zip(result.boxes, result.dataset_provenance()):
        gy, gx = grid_points(box.y1, box.y2), grid_points(box.x1, box.x2)
        for y in gy:
            for x in gx:
                ys.append(y)
                xs.append(x)
                expected.append(source)
    if not expected:
        return 0
    labels = classify_pixels(pixels[ys, xs], palettes)
    return int(np.count_nonzero(labels != np.asarray(expected)))


def check_select_rule(dataset, config: PipelineConfig, n: int = 10_000) -> CheckResult:
    cfg = config.replace(select_prob=1.0)
    stream = RandomStream(cfg.seed)
    failures = 0
    for _ in range(n):
        result = augment_once(dataset, cfg, stream, render=False)
        images = [dataset[i] for i in result.plan.dataset_indices]
        if result.plan.mode != SELECT or not select_rule_holds(result, images, cfg.density_metric):
            failures += 1
    return CheckResult("select-rule", failures == 0, f"{n - failures}/{n} select plans put the densest image in the largest mask")


def check_gate_frequency(config: PipelineConfig, n: int = 10_000, tolerance: float = 0.02) -> CheckResult:
    stream = RandomStream(config.seed)
    fraction = sum(draw_gate(stream, config.select_prob) for _ in range(n)) / n
    ok = abs(fraction - config.select_prob) <= tolerance
    return CheckResult("gate-frequency", ok, f"observed {fraction:.4f} vs S={config.select_prob} (tolerance {tolerance})")


def check_label_soundness(dataset, config: PipelineConfig, n: int = 1_000) -> CheckResult:
    palettes = palettes_for(len(dataset))
    stream = RandomStream(config.seed)
    violations = boxes = 0
    for _ in range(n):
        result = augment_once(dataset, config, stream)
        boxes += len(result.boxes)
        violations += soundness_violations(result, palettes)
    return CheckResult("label-soundness", violations == 0, f"{violations} bad samples over {boxes} boxes in {n} mosaics")


def reference_digest() -> str:
    with tempfile.TemporaryDirectory() as tmp:
        generate(mixed_density_dataset(), REFERENCE_CONFIG, Path(tmp))
        return output_digest(tmp)


def check_golden_digest() -> CheckResult:
    digest = reference_digest()
    return CheckResult("golden-digest", digest == GOLDEN_DIGEST, f"seed {REFERENCE_SEED}: {digest[:16]}... expected {GOLDEN_DIGEST[:16]}...")


def run_checks(config: PipelineConfig, mosaics: int = 1_000, plans: int = 10_000) -> list[CheckResult]:
    """All self-checks; ``config`` supplies seed, S and the filtering thresholds."""
    dataset = mixed_density_dataset()
    cfg = config.replace(output_size=160, workers=1)
    return [
        check_label_soundness(dataset, cfg, mosaics),
        check_select_rule(dataset, cfg, plans),
        check_gate_frequency(cfg),
        check_golden_digest(),
    ]
