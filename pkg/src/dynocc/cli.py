"""Command-line entry point.

Exit codes: 0 on success (including clips that legitimately yield zero
pairs), 2 on configuration errors, 3 when no frame could be processed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .pipeline import ConfigError, PipelineConfig, run_pipeline


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynocc",
        description=(
            "Extract relative depth pairs from occlusion cues in two-way "
            "optical flow over pre-extracted video frames."
        ),
    )
    parser.add_argument("--config", required=True, type=Path, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="override the run seed")
    flow = parser.add_mutually_exclusive_group()
    flow.add_argument(
        "--flow-dir",
        type=Path,
        default=None,
        help="directory of <frame>_prev.flo / <frame>_next.flo files",
    )
    flow.add_argument(
        "--internal-flow",
        action="store_true",
        help="estimate flow with the built-in block matcher",
    )
    parser.add_argument("--out", type=Path, default=None, help="annotations JSONL path")
    parser.add_argument(
        "--overlay-dir", type=Path, default=None, help="write marker overlays here"
    )
    parser.add_argument("--keep-rate", type=float, default=None, help="random drop keep rate")
    parser.add_argument("--delta", type=float, default=None, help="figure/ground margin")
    return parser


def _apply_overrides(config: PipelineConfig, args: argparse.Namespace) -> PipelineConfig:
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.flow_dir is not None:
        updates["flow_source"] = "flo-dir"
        updates["flow_dir"] = str(args.flow_dir)
    if args.internal_flow:
        updates["flow_source"] = "internal"
    if args.out is not None:
        updates["out"] = str(args.out)
    if args.overlay_dir is not None:
        updates["overlay_dir"] = str(args.overlay_dir)
    if updates:
        config = dataclasses.replace(config, **updates)
    if args.keep_rate is not None:
        config = dataclasses.replace(
            config, sampling=dataclasses.replace(config.sampling, keep_rate=args.keep_rate)
        )
    if args.delta is not None:
        config = dataclasses.replace(
            config, ordering=dataclasses.replace(config.ordering, delta=args.delta)
        )
    return config.validate()


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = _apply_overrides(PipelineConfig.from_file(args.config), args)
        summary = run_pipeline(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(summary, sort_keys=True))
    return 0 if summary["frames_annotated"] > 0 else 3


if __name__ == "__main__":
    sys.exit(main())
