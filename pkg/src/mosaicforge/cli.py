"""Command-line front end: ``generate``, ``preview``, ``stats``, ``verify``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .annotations import DENSITY_METRICS, DatasetError, LabelParseError, load_dataset
from .config import ConfigError, PipelineConfig, parse_jitter, resolve_config
from .engine import PlanError
from .pipeline import dataset_stats, format_kv, format_report, generate, preview
from .verify import run_checks

log = logging.getLogger("mosaicforge")


def _jitter_arg(text: str) -> tuple[float, float]:
    try:
        return parse_jitter(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat key = value config file")
    p.add_argument("--size", dest="output_size", type=int, help="output size s; the canvas is 2s x 2s (default 640)")
    p.add_argument("--select-prob", dest="select_prob", type=float, help="probability S of select mode (default 0.4)")
    p.add_argument("--seed", type=lambda v: int(v, 0), help="u64 seed (fallback: $MOSAICFORGE_SEED, then 0)")
    p.add_argument("--border", dest="border_fraction", type=float, help="splice-center border fraction (default 0.25)")
    p.add_argument("--scale-jitter", dest="scale_jitter", type=_jitter_arg, metavar="LO,HI", help="default 0.5,1.5")
    p.add_argument("--min-visibility", dest="min_visibility", type=float, help="default 0.1")
    p.add_argument("--min-side", dest="min_side", type=int, help="default 2")
    p.add_argument("--density-metric", dest="density_metric", choices=DENSITY_METRICS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mosaicforge", description="Mosaic / Select-Mosaic dataset augmentation")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write mosaics and YOLO labels")
    p.add_argument("--input", type=Path, required=True, help="dataset root with images/ and labels/")
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--count", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--image-format", dest="image_format", choices=("png", "jpeg"))
    _add_config_flags(p)

    p = sub.add_parser("preview", help="write annotated preview mosaics")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--output", type=Path, required=True, help="directory for preview_<i>.png")
    p.add_argument("-n", "--count", dest="n", type=int, default=4)
    _add_config_flags(p)

    p = sub.add_parser("stats", help="box-count and density statistics of a dataset or output tree")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--kv", action="store_true", help="print only the key=value block")
    _add_config_flags(p)

    p = sub.add_parser("verify", help="run the built-in oracle checks")
    p.add_argument("--mosaics", type=int, default=1000, help="mosaics for the pixel oracle")
    p.add_argument("--plans", type=int, default=10_000, help="plans for the select-rule check")
    _add_config_flags(p)
    return parser


_CONFIG_KEYS = (
    "output_size", "select_prob", "seed", "border_fraction", "scale_jitter",
    "min_visibility", "min_side", "density_metric", "count", "workers", "image_format",
)


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    overrides = {k: getattr(args, k) for k in _CONFIG_KEYS if hasattr(args, k)}
    return resolve_config(overrides, args.config)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = config_from_args(args)
        if args.command == "generate":
            summary = generate(load_dataset(args.input), config, args.output)
            sys.stdout.write(summary.report())
        elif args.command == "preview":
            paths = preview(load_dataset(args.input), config, args.output, args.n)
            for path in paths:
                print(path)
        elif args.command == "stats":
            stats = dataset_stats(load_dataset(args.input), config.density_metric)
            if not args.kv:
                sys.stdout.write(format_report(stats))
                print("---")
            sys.stdout.write(format_kv(stats))
        elif args.command == "verify":
            results = run_checks(config, mosaics=args.mosaics, plans=args.plans)
            for r in results:
                print(r.line())
            return 0 if all(r.passed for r in results) else 1
    except (ConfigError, DatasetError, LabelParseError, PlanError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
