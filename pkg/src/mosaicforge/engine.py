"""Mosaic and Select-Mosaic planning, assembly, and the single-mosaic pipeline.

Per mosaic the random stream is consumed in a fixed order:

1. four dataset indices (4 outputs)
2. the select gate (1 output)
3. splice center, cx then cy (2 outputs)
4. quadrant assignment (3 outputs): a 4-permutation in plain mode, a
   3-permutation plus one discarded output in select mode
5. scale jitter for Q0, Q1, Q2, Q3 (4 outputs)

so every mosaic uses exactly 14 outputs whatever the gate decides.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .annotations import LabeledImage, target_density
from .config import PipelineConfig
from .geometry import (
    BBox,
    PixelRect,
    QuadrantLayout,
    SpliceCenter,
    clip_box,
    largest_quadrant,
    quadrant_layout,
    remap_box,
)
from .raster import Canvas, blit_cropped, covered_region, resize_image, scaled_dims
from .sampling import (
    RandomStream,
    draw_center,
    draw_gate,
    draw_indices,
    draw_permutation,
    draw_scale_jitter,
)

PLAIN = "plain"
SELECT = "select"
ASSIGNMENT_OUTPUTS = 3
OUTPUTS_PER_MOSAIC = 4 + 1 + 2 + ASSIGNMENT_OUTPUTS + 4


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class Assignment:
    quadrant: int
    image_index: int  # position among the four drawn images
    scale: Fraction
    scaled_size: tuple[int, int]
    dest_origin: tuple[int, int]


@dataclass(frozen=True)
class MosaicPlan:
    mode: str
    center: SpliceCenter
    assignments: tuple[Assignment, ...]  # ordered Q0..Q3
    canvas_side: int
    dataset_indices: tuple[int, ...] = ()

    def __post_init__(self):
        quadrants = sorted(a.quadrant for a in self.assignments)
        images = sorted(a.image_index for a in self.assignments)
        if quadrants != [0, 1, 2, 3] or images != [0, 1, 2, 3]:
            raise PlanError(f"assignments must cover 4 quadrants and 4 images exactly once: {self.assignments}")

    @property
    def layout(self) -> QuadrantLayout:
        return quadrant_layout(self.center, self.canvas_side)

    def quadrant_of(self, image_index: int) -> int:
        for a in self.assignments:
            if a.image_index == image_index:
                return a.quadrant
        raise KeyError(image_index)

    def image_in(self, quadrant: int) -> int:
        return self.assignments[quadrant].image_index


@dataclass
class MosaicResult:
    canvas: Optional[Canvas]
    boxes: list[BBox]
    plan: MosaicPlan
    provenance: list[int] = field(default_factory=list)  # drawn-image index per box

    def dataset_provenance(self) -> list[int]:
        return [self.plan.dataset_indices[i] for i in self.provenance]


def base_scale(width: int, height: int, output_size: int) -> Fraction:
    """Scale that brings the longer image side to ``output_size``."""
    return Fraction(output_size, max(width, height))


def placement_geometry(
    width: int, height: int, quadrant: int, center: SpliceCenter, canvas_side: int
) -> tuple[tuple[int, int], PixelRect]:
    """Top-left canvas position for a scaled image, and its clip rect.

    The image corner that faces the splice center is pinned to the center.
    """
    cx, cy = center.cx, center.cy
    origins = {
        0: (cx - width, cy - height),
        1: (cx, cy - height),
        2: (cx - width, cy),
        3: (cx, cy),
    }
    if quadrant not in origins:
        raise PlanError(f"quadrant must be 0..3, got {quadrant}")
    return origins[quadrant], quadrant_layout(center, canvas_side).rects[quadrant]


def densest_image(images: Sequence[LabeledImage], metric: str = "count_per_area") -> int:
    """Index of the highest-density image, lowest index on ties."""
    densities = [target_density(im, metric) for im in images]
    best = 0
    for i in range(1, len(densities)):
        if densities[i] > densities[best]:
            best = i
    return best


def _build_assignments(
    images: Sequence[LabeledImage],
    center: SpliceCenter,
    quadrant_to_image: Sequence[int],
    stream: RandomStream,
    config: PipelineConfig,
) -> tuple[Assignment, ...]:
    lo, hi = config.scale_jitter
    out = []
    for q in range(4):
        image_index = quadrant_to_image[q]
        im = images[image_index]
        jitter = draw_scale_jitter(stream, lo, hi)
        scale = base_scale(im.width, im.height, config.output_size) * Fraction(jitter)
        size = scaled_dims(im.width, im.height, scale)
        origin, _ = placement_geometry(size[0], size[1], q, center, config.canvas_side)
        out.append(Assignment(q, image_index, scale, size, origin))
    return tuple(out)


def _check_four(images: Sequence[LabeledImage]) -> None:
    if len(images) != 4:
        raise PlanError(f"a mosaic needs exactly 4 images, got {len(images)}")


def plan_plain(
    images: Sequence[LabeledImage],
    center: SpliceCenter,
    stream: RandomStream,
    config: PipelineConfig,
    dataset_indices: Sequence[int] = (),
) -> MosaicPlan:
    """Random placement: quadrant q receives drawn image ``perm[q]``."""
    _check_four(images)
    perm = draw_permutation(stream, 4)
    assignments = _build_assignments(images, center, perm, stream, config)
    return MosaicPlan(PLAIN, center, assignments, config.canvas_side, tuple(dataset_indices))


def plan_select(
    images: Sequence[LabeledImage],
    center: SpliceCenter,
    stream: RandomStream,
    config: PipelineConfig,
    dataset_indices: Sequence[int] = (),
) -> MosaicPlan:
    """Densest image into the largest quadrant, the other three shuffled over the rest."""
    _check_four(images)
    layout = quadrant_layout(center, config.canvas_side)
    target_q = largest_quadrant(layout)
    densest = densest_image(images, config.density_metric)

    rest_images = [i for i in range(4) if i != densest]
    rest_quadrants = [q for q in range(4) if q != target_q]
    perm = draw_permutation(stream, 3)
    stream.next_u64()  # keep the assignment step at a fixed output count
    quadrant_to_image = [0] * 4
    quadrant_to_image[target_q] = densest
    for slot, q in enumerate(rest_quadrants):
        quadrant_to_image[q] = rest_images[perm[slot]]
    assignments = _build_assignments(images, center, quadrant_to_image, stream, config)
    return MosaicPlan(SELECT, center, assignments, config.canvas_side, tuple(dataset_indices))


def assemble(
    plan: MosaicPlan,
    images: Sequence[LabeledImage],
    config: PipelineConfig,
    render: bool = True,
) -> MosaicResult:
    """Composite pixels and remap labels for a resolved plan.

    With ``render=False`` no pixels are touched; boxes are identical to the
    rendered case because the covered region is computed the same way.
    """
    _check_four(images)
    canvas = Canvas.blank(plan.canvas_side) if render else None
    layout = plan.layout
    boxes: list[BBox] = []
    provenance: list[int] = []
    for a in plan.assignments:
        im = images[a.image_index]
        clip_rect = layout.rects[a.quadrant]
        ox, oy = a.dest_origin
        if canvas is not None:
            pixels = resize_image(im.load_pixels(), a.scale, max_side=plan.canvas_side)
            covered = blit_cropped(canvas, pixels, a.dest_origin, clip_rect)
        else:
            covered = covered_region(a.dest_origin, a.scaled_size, clip_rect)
        if covered.is_empty:
            continue
        for box in im.boxes:
            moved = remap_box(box, a.scale, ox, oy)
            kept = clip_box(moved, covered, config.min_visibility, config.min_side)
            if kept is not None:
                boxes.append(kept)
                provenance.append(a.image_index)
    return MosaicResult(canvas, boxes, plan, provenance)


def draw_plan(dataset: Sequence[LabeledImage], config: PipelineConfig, stream: RandomStream) -> tuple[MosaicPlan, list[LabeledImage]]:
    """Run the frozen draw sequence for one mosaic and return its plan."""
    indices = draw_indices(stream, len(dataset))
    select = draw_gate(stream, config.select_prob)
    center = draw_center(stream, config.canvas_side, config.border_fraction)
    images = [dataset[i] for i in indices]
    planner = plan_select if select else plan_plain
    return planner(images, center, stream, config, indices), images


def augment_once(
    dataset: Sequence[LabeledImage],
    config: PipelineConfig,
    stream: RandomStream,
    render: bool = True,
) -> MosaicResult:
    if len(dataset) < 4:
        raise PlanError(f"need at least 4 images, dataset has {len(dataset)}")
    plan, images = draw_plan(dataset, config, stream)
    return assemble(plan, images, config, render=render)
