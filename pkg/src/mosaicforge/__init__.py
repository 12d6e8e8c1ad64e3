"""Mosaic and Select-Mosaic augmentation for object-detection datasets."""

from .annotations import LabeledImage, load_dataset, parse_yolo_line, serialize_yolo_line, target_density
from .config import PipelineConfig
from .engine import MosaicPlan, MosaicResult, assemble, augment_once, plan_plain, plan_select
from .geometry import BBox, PixelRect, QuadrantLayout, SpliceCenter
from .sampling import RandomStream

__all__ = [
    "BBox",
    "LabeledImage",
    "MosaicPlan",
    "MosaicResult",
    "PipelineConfig",
    "PixelRect",
    "QuadrantLayout",
    "RandomStream",
    "SpliceCenter",
    "assemble",
    "augment_once",
    "load_dataset",
    "parse_yolo_line",
    "plan_plain",
    "plan_select",
    "serialize_yolo_line",
    "target_density",
]
