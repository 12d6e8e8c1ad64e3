"""Pipeline configuration and the flat ``key = value`` config file format."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Optional

from .annotations import DENSITY_METRICS

SEED_ENV_VAR = "MOSAICFORGE_SEED"


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


@dataclass(frozen=True)
class PipelineConfig:
    output_size: int = 640
    select_prob: float = 0.4
    border_fraction: float = 0.25
    scale_jitter: tuple[float, float] = (0.5, 1.5)
    min_visibility: float = 0.1
    min_side: int = 2
    density_metric: str = "count_per_area"
    seed: int = 0
    count: int = 1
    workers: int = 1
    image_format: str = "png"

    def __post_init__(self):
        self.validate()

    @property
    def canvas_side(self) -> int:
        return 2 * self.output_size

    def validate(self) -> None:
        if self.output_size < 1:
            raise ConfigError("output_size", f"must be >= 1, got {self.output_size}")
        if not 0 <= self.select_prob <= 1:
            raise ConfigError("select_prob", f"must be in [0, 1], got {self.select_prob}")
        if not 0 <= self.border_fraction < 0.5:
            raise ConfigError("border_fraction", f"must be in [0, 0.5), got {self.border_fraction}")
        lo, hi = self.scale_jitter
        if not 0 < lo <= hi:
            raise ConfigError("scale_jitter", f"need 0 < lo <= hi, got {lo},{hi}")
        if hi > 2:
            # a jittered image must still fit on the 2s canvas
            raise ConfigError("scale_jitter", f"hi must be <= 2, got {hi}")
        if not 0 <= self.min_visibility <= 1:
            raise ConfigError("min_visibility", f"must be in [0, 1], got {self.min_visibility}")
        if self.min_side < 0:
            raise ConfigError("min_side", f"must be >= 0, got {self.min_side}")
        if self.density_metric not in DENSITY_METRICS:
            raise ConfigError("density_metric", f"must be one of {DENSITY_METRICS}, got {self.density_metric!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed", f"must be an unsigned 64-bit integer, got {self.seed}")
        if self.count < 0:
            raise ConfigError("count", f"must be >= 0, got {self.count}")
        if self.workers < 1:
            raise ConfigError("workers", f"must be >= 1, got {self.workers}")
        if self.image_format not in ("png", "jpeg"):
            raise ConfigError("image_format", f"must be png or jpeg, got {self.image_format!r}")

    def replace(self, **changes: Any) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)


FIELD_NAMES = tuple(f.name for f in dataclasses.fields(PipelineConfig))

_CONVERTERS = {
    "output_size": int,
    "select_prob": float,
    "border_fraction": float,
    "min_visibility": float,
    "min_side": int,
    "density_metric": str,
    "seed": lambda v: int(v, 0),
    "count": int,
    "workers": int,
    "image_format": str,
}


def parse_jitter(text: str) -> tuple[float, float]:
    parts = text.replace(" ", "").split(",")
    if len(parts) != 2:
        raise ValueError(f"expected lo,hi but got {text!r}")
    return float(parts[0]), float(parts[1])


def convert_value(key: str, raw: str) -> Any:
    key = key.replace("-", "_")
    if key not in FIELD_NAMES:
        raise ConfigError(key, "unknown config key")
    try:
        if key == "scale_jitter":
            return parse_jitter(raw)
        return _CONVERTERS[key](raw.strip())
    except ValueError as exc:
        raise ConfigError(key, f"cannot parse {raw!r}: {exc}") from None


def read_config_file(path: Path | str) -> dict[str, Any]:
    """Read flat ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, Any] = {}
    for number, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{number}", f"expected key = value, got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = convert_value(key, raw)
    return values


def resolve_config(
    overrides: Optional[Mapping[str, Any]] = None,
    config_path: Optional[Path | str] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> PipelineConfig:
    """Merge sources: explicit overrides, then config file, then env seed, then defaults."""
    environ = os.environ if environ is None else environ
    values: dict[str, Any] = {}
    if SEED_ENV_VAR in environ and environ[SEED_ENV_VAR].strip():
        values["seed"] = convert_value("seed", environ[SEED_ENV_VAR])
    if config_path is not None:
        values.update(read_config_file(config_path))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return PipelineConfig(**values)
