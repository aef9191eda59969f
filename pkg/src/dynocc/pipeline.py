"""End-to-end extraction over frame directories: configuration, per-frame
orchestration, annotation serialization, and diagnostic overlays.

Output is JSON Lines, one frame per line:
{"frame": str, "image": str, "pairs": [{"i": [x, y], "j": [x, y], "o": int}, ...],
 "stats": {...}}
Runs are byte-identical for a fixed (config, seed), independent of the
worker count.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator

from .block_match import estimate_flow_block_matching
from .boundaries import BoundaryDetector
from .flowio import load_frame, read_flo_file, save_rgb_png, save_scalar_png16
from .ordering import DepthOrderClassifier
from .sampling import DepthPair, PairSampler
from .validation import check_frame

log = logging.getLogger("dynocc")

FLOW_SOURCES = ("flo-dir", "internal")

OVERLAY_BOUNDARY = (0, 255, 0)    # green: boundary point
OVERLAY_BACKGROUND = (255, 0, 0)  # red: background sample
OVERLAY_FOREGROUND = (0, 0, 255)  # blue: foreground sample


class ConfigError(ValueError):
    """Unusable pipeline configuration."""


@dataclass(frozen=True)
class BoundaryConfig:
    blur_size: int = 31
    norm_percentile: float = 90.0
    threshold: float = 0.3


@dataclass(frozen=True)
class OrderingConfig:
    segment_len: int = 20
    delta: float = 0.5
    helper_offset: int = 5
    align_tolerance: int = 1


@dataclass(frozen=True)
class SamplingConfig:
    bg_max_offset: float = 30.0
    fg_max_offset: float = 7.0
    flow_epsilon: float = 0.5
    keep_rate: float = 0.1
    max_attempts: int = 8


@dataclass(frozen=True)
class BlockMatchingConfig:
    block_size: int = 9
    radius: int = 10


def _group_from_dict(cls, data, context: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{context} must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown {context} keys: {sorted(unknown)}")
    return cls(**data)


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a run needs; JSON-serializable and overridable from the CLI."""

    frames: str
    out: str
    flow_source: str = "flo-dir"
    flow_dir: Optional[str] = None
    baseline: int = 2
    seed: int = 0
    overlay_dir: Optional[str] = None
    debug_map_dir: Optional[str] = None
    boundary: BoundaryConfig = field(default_factory=BoundaryConfig)
    ordering: OrderingConfig = field(default_factory=OrderingConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    block_matching: BlockMatchingConfig = field(default_factory=BlockMatchingConfig)

    def validate(self) -> "PipelineConfig":
        if self.flow_source not in FLOW_SOURCES:
            raise ConfigError(f"flow_source must be one of {FLOW_SOURCES}")
        if self.flow_source == "flo-dir" and not self.flow_dir:
            raise ConfigError("flow_dir is required when flow_source is 'flo-dir'")
        if self.baseline < 1:
            raise ConfigError("baseline must be >= 1")
        if not 0.0 < self.sampling.keep_rate <= 1.0:
            raise ConfigError("sampling.keep_rate must lie in (0, 1]")
        if self.boundary.blur_size < 1 or self.boundary.blur_size % 2 == 0:
            raise ConfigError("boundary.blur_size must be odd and >= 1")
        if not 0.0 < self.boundary.norm_percentile <= 100.0:
            raise ConfigError("boundary.norm_percentile must lie in (0, 100]")
        if not 0.0 < self.boundary.threshold <= 1.0:
            raise ConfigError("boundary.threshold must lie in (0, 1]")
        return self

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        data = dict(data)
        groups = {
            "boundary": BoundaryConfig,
            "ordering": OrderingConfig,
            "sampling": SamplingConfig,
            "block_matching": BlockMatchingConfig,
        }
        kwargs = {}
        for name, group_cls in groups.items():
            if name in data:
                kwargs[name] = _group_from_dict(group_cls, data.pop(name), name)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = {"frames", "out"} - set(data)
        if missing:
            raise ConfigError(f"missing required config keys: {sorted(missing)}")
        try:
            config = cls(**data, **kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        return config.validate()

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class FrameAnnotation:
    """All depth pairs extracted from one frame, plus audit stats."""

    frame: str
    image_path: str
    pairs: tuple[DepthPair, ...]
    stats: dict

    def to_json_obj(self) -> dict:
        return {
            "frame": self.frame,
            "image": self.image_path,
            "pairs": [
                {"i": [int(p.i[0]), int(p.i[1])], "j": [int(p.j[0]), int(p.j[1])], "o": int(p.o)}
                for p in self.pairs
            ],
            "stats": {k: int(v) for k, v in sorted(self.stats.items())},
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "FrameAnnotation":
        pairs = tuple(
            DepthPair(i=(int(p["i"][0]), int(p["i"][1])), j=(int(p["j"][0]), int(p["j"][1])), o=int(p["o"]))
            for p in obj["pairs"]
        )
        return cls(
            frame=obj["frame"],
            image_path=obj.get("image", ""),
            pairs=pairs,
            stats={k: int(v) for k, v in obj.get("stats", {}).items()},
        )


def write_annotations(annotations, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for annotation in annotations:
            fh.write(json.dumps(annotation.to_json_obj(), sort_keys=True, separators=(",", ":")))
            fh.write("\n")


def read_annotations(path) -> list[FrameAnnotation]:
    annotations = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                annotations.append(FrameAnnotation.from_json_obj(json.loads(line)))
    return annotations


def render_overlay(frame, annotation: FrameAnnotation) -> np.ndarray:
    """Paint 3-px marker squares over the frame: green at boundary points,
    red at background samples, blue at foreground samples."""
    arr = check_frame(frame)
    if arr.ndim == 2:
        arr = np.stack([arr] * 3, axis=-1)
    image = np.rint(arr * 255.0).astype(np.uint8)
    height, width = image.shape[:2]

    red, blue, green = [], [], []
    for pair in annotation.pairs:
        for (x, y) in (pair.i, pair.j):
            if not (0 <= x < width and 0 <= y < height):
                raise ValueError(f"annotation point ({x}, {y}) outside {width}x{height} frame")
        if pair.o == 1:
            green.append(pair.i)
            red.append(pair.j)
        elif pair.o == 0:
            blue.append(pair.i)
            green.append(pair.j)

    def stamp(points, color):
        for (x, y) in points:
            y0, y1 = max(y - 1, 0), min(y + 2, height)
            x0, x1 = max(x - 1, 0), min(x + 2, width)
            image[y0:y1, x0:x1] = color

    # boundary markers painted last so they stay visible
    stamp(red, OVERLAY_BACKGROUND)
    stamp(blue, OVERLAY_FOREGROUND)
    stamp(green, OVERLAY_BOUNDARY)
    return image


class DepthPairExtractor(BaseEstimator):
    """In-memory clip annotator composing boundary detection, figure/ground
    classification, and pair sampling.

    Stateless transformer over clips; per-frame randomness derives from
    (seed, frame index) so results do not depend on scheduling.
    """

    def __init__(
        self,
        blur_size: int = 31,
        norm_percentile: float = 90.0,
        threshold: float = 0.3,
        segment_len: int = 20,
        delta: float = 0.5,
        helper_offset: int = 5,
        align_tolerance: int = 1,
        bg_max_offset: float = 30.0,
        fg_max_offset: float = 7.0,
        flow_epsilon: float = 0.5,
        keep_rate: float = 0.1,
        max_attempts: int = 8,
        baseline: int = 2,
        seed: int = 0,
    ):
        self.blur_size = blur_size
        self.norm_percentile = norm_percentile
        self.threshold = threshold
        self.segment_len = segment_len
        self.delta = delta
        self.helper_offset = helper_offset
        self.align_tolerance = align_tolerance
        self.bg_max_offset = bg_max_offset
        self.fg_max_offset = fg_max_offset
        self.flow_epsilon = flow_epsilon
        self.keep_rate = keep_rate
        self.max_attempts = max_attempts
        self.baseline = baseline
        self.seed = seed

    @classmethod
    def from_config(cls, config: PipelineConfig) -> "DepthPairExtractor":
        return cls(
            blur_size=config.boundary.blur_size,
            norm_percentile=config.boundary.norm_percentile,
            threshold=config.boundary.threshold,
            segment_len=config.ordering.segment_len,
            delta=config.ordering.delta,
            helper_offset=config.ordering.helper_offset,
            align_tolerance=config.ordering.align_tolerance,
            bg_max_offset=config.sampling.bg_max_offset,
            fg_max_offset=config.sampling.fg_max_offset,
            flow_epsilon=config.sampling.flow_epsilon,
            keep_rate=config.sampling.keep_rate,
            max_attempts=config.sampling.max_attempts,
            baseline=config.baseline,
            seed=config.seed,
        )

    def fit(self, X=None, y=None):
        return self

    def _detector(self) -> BoundaryDetector:
        return BoundaryDetector(
            blur_size=self.blur_size,
            norm_percentile=self.norm_percentile,
            threshold=self.threshold,
        )

    def _classifier(self) -> DepthOrderClassifier:
        return DepthOrderClassifier(
            segment_len=self.segment_len,
            delta=self.delta,
            helper_offset=self.helper_offset,
            align_tolerance=self.align_tolerance,
        )

    def _sampler(self) -> PairSampler:
        return PairSampler(
            bg_max_offset=self.bg_max_offset,
            fg_max_offset=self.fg_max_offset,
            flow_epsilon=self.flow_epsilon,
            keep_rate=self.keep_rate,
            max_attempts=self.max_attempts,
            helper_offset=self.helper_offset,
            seed=self.seed,
        )

    def edge_mask(self, flow_prev, flow_next) -> Optional[np.ndarray]:
        """Edge mask for a frame; falls back to the single available field at
        clip ends, None when neither flow exists."""
        detector = self._detector()
        if flow_prev is not None and flow_next is not None:
            return detector.detect(flow_prev, flow_next)
        if flow_prev is not None:
            return detector.detect_one_way(flow_prev)
        if flow_next is not None:
            return detector.detect_one_way(flow_next)
        return None

    def annotate_clip(
        self,
        flows_prev,
        flows_next,
        frame_ids=None,
        image_paths=None,
        workers: int = 1,
    ) -> tuple[list[FrameAnnotation], list[tuple[str, str]]]:
        """Annotate every frame of a clip that has two-way flow and edge masks
        for both temporal neighbors.

        flows_prev/flows_next are sequences indexed by frame, None where the
        flow is unavailable. Returns (annotations, skipped) where skipped
        pairs each unannotated frame id with its reason.
        """
        count = len(flows_prev)
        if len(flows_next) != count:
            raise ValueError("flows_prev and flows_next must cover the same frames")
        if frame_ids is None:
            frame_ids = [f"{t:05d}" for t in range(count)]
        if image_paths is None:
            image_paths = ["" for _ in range(count)]

        edge_masks = [self.edge_mask(flows_prev[t], flows_next[t]) for t in range(count)]
        classifier = self._classifier()
        sampler = self._sampler()

        annotations: list[FrameAnnotation] = []
        skipped: list[tuple[str, str]] = []
        jobs: list[int] = []
        for t in range(count):
            if not (self.baseline <= t < count - self.baseline):
                skipped.append((frame_ids[t], "clip boundary frame"))
            elif flows_prev[t] is None or flows_next[t] is None:
                skipped.append((frame_ids[t], "missing two-way flow"))
            elif edge_masks[t - self.baseline] is None:
                skipped.append((frame_ids[t], f"no flow for neighbor {frame_ids[t - self.baseline]}"))
            elif edge_masks[t + self.baseline] is None:
                skipped.append((frame_ids[t], f"no flow for neighbor {frame_ids[t + self.baseline]}"))
            else:
                jobs.append(t)

        def annotate(t: int) -> FrameAnnotation:
            verdicts = classifier.classify(
                edge_masks[t],
                flows_prev[t],
                flows_next[t],
                edge_masks[t - self.baseline],
                edge_masks[t + self.baseline],
            )
            rng = np.random.default_rng((self.seed, t))
            kept, before = sampler.sample(
                verdicts, flows_next[t], flow_other=flows_prev[t], rng=rng
            )
            stats = {
                "boundary_pixels": int(edge_masks[t].sum()),
                "segments_classified": len(verdicts),
                "pairs_before_drop": before,
                "pairs_after_drop": len(kept),
            }
            return FrameAnnotation(
                frame=frame_ids[t],
                image_path=image_paths[t],
                pairs=tuple(kept),
                stats=stats,
            )

        if workers > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                annotations = list(pool.map(annotate, jobs))
        else:
            annotations = [annotate(t) for t in jobs]
        return annotations, skipped

    def transform(self, X) -> list[list[FrameAnnotation]]:
        return [self.annotate_clip(flows_prev, flows_next)[0] for flows_prev, flows_next in X]


def _discover_frames(pattern: str) -> list[Path]:
    path = Path(pattern)
    if path.is_dir():
        files = [p for p in path.iterdir() if p.suffix.lower() in (".png", ".ppm")]
    else:
        import glob as globmod

        files = [Path(p) for p in globmod.glob(pattern)]
    return sorted(files)


def _worker_count() -> int:
    raw = os.environ.get("DYNOCC_THREADS", "1")
    try:
        workers = int(raw)
    except ValueError as exc:
        raise ConfigError(f"DYNOCC_THREADS must be an integer, got {raw!r}") from exc
    return max(workers, 1)


def run_pipeline(config: PipelineConfig) -> dict:
    """Run the full extraction and write annotations (plus optional overlays
    and debug maps). Returns a summary accounting for every input frame."""
    config.validate()
    frame_paths = _discover_frames(config.frames)
    if not Path(config.frames).exists() and not frame_paths:
        raise ConfigError(f"frames path {config.frames!r} does not exist")
    frame_ids = [p.stem for p in frame_paths]
    count = len(frame_paths)

    frames_cache: dict[int, np.ndarray] = {}

    def frame_at(t: int) -> np.ndarray:
        if t not in frames_cache:
            frames_cache[t] = load_frame(frame_paths[t])
        return frames_cache[t]

    baseline = config.baseline
    flows_prev: list[Optional[np.ndarray]] = [None] * count
    flows_next: list[Optional[np.ndarray]] = [None] * count
    if config.flow_source == "flo-dir":
        flow_dir = Path(config.flow_dir)
        if not flow_dir.is_dir():
            raise ConfigError(f"flow_dir {config.flow_dir!r} is not a directory")
        for t, stem in enumerate(frame_ids):
            prev_path = flow_dir / f"{stem}_prev.flo"
            next_path = flow_dir / f"{stem}_next.flo"
            if prev_path.exists():
                flows_prev[t] = read_flo_file(prev_path)
            if next_path.exists():
                flows_next[t] = read_flo_file(next_path)
    else:
        bm = config.block_matching
        for t in range(count):
            if t - baseline >= 0:
                flows_prev[t] = estimate_flow_block_matching(
                    frame_at(t), frame_at(t - baseline), bm.block_size, bm.radius
                )
            if t + baseline < count:
                flows_next[t] = estimate_flow_block_matching(
                    frame_at(t), frame_at(t + baseline), bm.block_size, bm.radius
                )

    extractor = DepthPairExtractor.from_config(config)
    annotations, skipped = extractor.annotate_clip(
        flows_prev,
        flows_next,
        frame_ids=frame_ids,
        image_paths=[str(p) for p in frame_paths],
        workers=_worker_count(),
    )
    for frame_id, reason in skipped:
        log.warning("skipping frame %s: %s", frame_id, reason)

    write_annotations(annotations, config.out)

    if config.overlay_dir:
        overlay_dir = Path(config.overlay_dir)
        overlay_dir.mkdir(parents=True, exist_ok=True)
        index = {fid: t for t, fid in enumerate(frame_ids)}
        for annotation in annotations:
            image = render_overlay(frame_at(index[annotation.frame]), annotation)
            save_rgb_png(image, overlay_dir / f"{annotation.frame}.png")

    if config.debug_map_dir:
        debug_dir = Path(config.debug_map_dir)
        debug_dir.mkdir(parents=True, exist_ok=True)
        detector = extractor._detector()
        annotated = {a.frame for a in annotations}
        for t, stem in enumerate(frame_ids):
            if stem not in annotated:
                continue
            maps = detector.intermediate_maps(flows_prev[t], flows_next[t])
            for name, values in maps.items():
                save_scalar_png16(values, debug_dir / f"{stem}_{name}.png")

    summary = {
        "frames_total": count,
        "frames_annotated": len(annotations),
        "frames_skipped": [{"frame": fid, "reason": reason} for fid, reason in skipped],
        "pairs_total": int(sum(len(a.pairs) for a in annotations)),
        "out": str(config.out),
    }
    log.info(
        "annotated %d/%d frames, %d pairs",
        summary["frames_annotated"],
        summary["frames_total"],
        summary["pairs_total"],
    )
    return summary
