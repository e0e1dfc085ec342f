"""infodrop: keypoint-aware information-dropping augmentation tooling.

Mask generators that drop appearance information around keypoints while
leaving heatmap supervision untouched, baseline geometric augmentation,
Gaussian target rendering, OKS-based AP/AR evaluation with visibility
splits, step-decay schedule plans, and a synthetic stick-figure benchmark.
"""

from .types import (
    COCO_LAYOUT,
    KeypointInstance,
    KeypointLayout,
    RngState,
)
from .masking import (
    AidConfig,
    CutoutParams,
    FillPolicy,
    GridMaskParams,
    HasParams,
    RandomEraseParams,
    apply_mask,
    default_aid_config,
    keypoints_dropped,
    sample_cutout,
    sample_gridmask,
    sample_has,
    sample_mask,
    sample_random_erase,
)
from .geometry import AffineTransform, GeomConfig, sample_transform, transform_keypoints, warp_image
from .targets import HeatmapStack, decode_heatmap, load_heatmaps, render_heatmaps, save_heatmaps
from .schedule import ExperimentConfig, SchedulePlan, aid_active, build_schedule, experiment
from .oks import MetricsReport, OksSigmas, evaluate, evaluate_splits, full_report, oks
from .coco import load_coco_annotations, load_coco_results, save_coco_annotations, split_by_visibility
from .pipeline import AugmentedSample, augment_sample

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "RngState",
    "KeypointLayout",
    "KeypointInstance",
    "COCO_LAYOUT",
    "AidConfig",
    "FillPolicy",
    "CutoutParams",
    "RandomEraseParams",
    "HasParams",
    "GridMaskParams",
    "sample_cutout",
    "sample_random_erase",
    "sample_has",
    "sample_gridmask",
    "sample_mask",
    "apply_mask",
    "keypoints_dropped",
    "default_aid_config",
    "GeomConfig",
    "AffineTransform",
    "sample_transform",
    "warp_image",
    "transform_keypoints",
    "HeatmapStack",
    "render_heatmaps",
    "decode_heatmap",
    "save_heatmaps",
    "load_heatmaps",
    "SchedulePlan",
    "ExperimentConfig",
    "build_schedule",
    "experiment",
    "aid_active",
    "OksSigmas",
    "MetricsReport",
    "oks",
    "evaluate",
    "evaluate_splits",
    "full_report",
    "load_coco_annotations",
    "save_coco_annotations",
    "load_coco_results",
    "split_by_visibility",
    "AugmentedSample",
    "augment_sample",
]
