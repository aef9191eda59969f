"""Relative depth pair extraction from occlusion cues in two-way optical flow.

The package is organized as stateless, sklearn-compatible stages:
BoundaryDetector (flow pair -> thinned edge mask), DepthOrderClassifier
(edge mask -> figure/ground verdicts), PairSampler (verdicts -> depth
pairs), and DepthPairExtractor composing them over whole clips. Module
functions underneath expose each operation individually.
"""

from .block_match import estimate_flow_block_matching
from .boundaries import (
    BoundaryDetector,
    FusedConfidence,
    box_blur,
    detect_boundaries,
    detect_boundaries_one_way,
    divergence_map,
    divergence_score,
    fuse_confidence,
    nearest_rank_percentile,
    percentile_normalize,
    threshold_mask,
)
from .flowio import (
    FlowDimensionError,
    FlowFileError,
    FlowMagicError,
    FlowTruncationError,
    load_depth_png16,
    load_depth_raw,
    load_frame,
    read_flo,
    read_flo_file,
    save_depth_raw,
    save_frame_png,
    save_scalar_png16,
    write_flo,
    write_flo_file,
)
from .flowops import (
    flow_gradient_magnitude,
    gradient_direction,
    gradient_direction_map,
    sample_flow,
)
from .metrics import (
    QuerySet,
    predict_orders,
    query_loss,
    query_loss_gradient,
    query_losses,
    ranking_loss,
    softplus,
    top_fraction,
    whdr,
    whdr_from_depth,
)
from .ordering import (
    DepthOrderClassifier,
    FigureGroundVerdict,
    classify_segment,
    decide_foreground_side,
    dilate_mask,
    helper_pixels,
    warp_match_count,
)
from .pipeline import (
    BlockMatchingConfig,
    BoundaryConfig,
    ConfigError,
    DepthPairExtractor,
    FrameAnnotation,
    OrderingConfig,
    PipelineConfig,
    SamplingConfig,
    read_annotations,
    render_overlay,
    run_pipeline,
    write_annotations,
)
from .sampling import (
    DepthPair,
    PairSampler,
    extract_pairs,
    flow_consistent,
    random_drop,
    sample_background_point,
    sample_foreground_point,
)
from .segments import BoundarySegment, path_normals, split_segments, trace_skeleton_paths
from .synthetic import (
    GroundTruth,
    RenderedScene,
    SceneSpec,
    Sprite,
    boundary_from_layers,
    default_scene,
    render_scene,
    score_boundaries,
    score_pairs,
    write_scene,
)
from .thinning import thin

__version__ = "0.1.0"
