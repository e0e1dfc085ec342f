"""In-process bindings for external training loops.

Five operations, each a thin delegation to the core library: mask sampling
from a config mapping, mask application, heatmap rendering, schedule-plan
queries from the emitted JSON, and OKS evaluation from annotation files.
Images, masks and heatmaps are exchanged as contiguous row-major numeric
buffers; anything supporting the buffer protocol is accepted without
copying, and non-contiguous or wrongly typed input is rejected with a clear
message rather than silently converted.
"""

from __future__ import annotations

import importlib.metadata
from pathlib import Path
from typing import Any, Mapping

import numpy as np

import infodrop
from infodrop.config import parse_aid_config
from infodrop.masking import FillPolicy
from infodrop.masking import apply_mask as _apply_mask
from infodrop.masking import sample_mask as _sample_mask
from infodrop.oks import OksSigmas
from infodrop.oks import evaluate as _evaluate
from infodrop.oks import evaluate_splits as _evaluate_splits
from infodrop.coco import load_coco_annotations, load_coco_results
from infodrop.schedule import SchedulePlan
from infodrop.targets import render_heatmaps as _render_heatmaps
from infodrop.types import KeypointInstance, KeypointLayout, RngState

__version__ = "0.1.0"

if __version__ != infodrop.__version__:
    raise ImportError(
        f"infodrop-bindings {__version__} does not match infodrop "
        f"{infodrop.__version__}; reinstall matching versions"
    )

__all__ = [
    "__version__",
    "sample_mask",
    "apply_mask",
    "render_heatmaps",
    "lr_at",
    "aid_active",
    "evaluate",
]


def _as_array(buf: Any, dtype: np.dtype, dims: tuple[int, ...] | None, what: str) -> np.ndarray:
    """View a buffer-protocol object as an array without copying."""
    if isinstance(buf, np.ndarray):
        arr = buf
        if arr.dtype != dtype:
            raise TypeError(f"{what} must have dtype {np.dtype(dtype).name}, got {arr.dtype}")
        if not arr.flags["C_CONTIGUOUS"]:
            raise TypeError(f"{what} must be C-contiguous (row-major); pass a contiguous copy")
        if dims is not None and arr.shape != tuple(dims):
            raise ValueError(f"{what} has shape {arr.shape}, expected {tuple(dims)}")
        return arr
    try:
        arr = np.frombuffer(buf, dtype=dtype)
    except (TypeError, ValueError) as e:
        raise TypeError(f"{what} does not expose a readable buffer: {e}") from e
    if dims is None:
        raise ValueError(f"raw {what} buffers need explicit dims")
    expected = int(np.prod(dims))
    if arr.size != expected:
        raise ValueError(f"{what} buffer holds {arr.size} values, dims {dims} need {expected}")
    return arr.reshape(dims)


def _fill_policy(fill: Any) -> FillPolicy:
    if isinstance(fill, FillPolicy):
        return fill
    if isinstance(fill, str):
        if fill == "per-image-mean":
            return FillPolicy.per_image_mean()
        if fill == "dataset-mean":
            return FillPolicy.dataset_mean()
        raise ValueError(f"fill mode {fill!r} needs values; pass a mapping")
    if isinstance(fill, Mapping):
        values = fill.get("values")
        return FillPolicy(fill.get("mode", "constant"),
                          tuple(values) if values is not None else None)
    if isinstance(fill, (int, float)):
        return FillPolicy.constant(float(fill))
    if isinstance(fill, (tuple, list)):
        return FillPolicy.constant(*fill)
    raise TypeError(f"cannot interpret fill {fill!r}")


def sample_mask(
    config: Mapping,
    width: int,
    height: int,
    seed: int,
    stream: str = "mask",
) -> np.ndarray:
    """Sample a boolean drop mask from an ``aid`` config mapping.

    ``config`` uses the shared config schema (the ``aid`` section).
    ``stream`` selects the named random sub-stream; the command-line
    augmenter uses ``"augment/image<ID>"`` per image, so passing that name
    reproduces its masks bit for bit.
    """
    aid = parse_aid_config(dict(config), (int(width), int(height)))
    rng = RngState(int(seed), stream)
    return _sample_mask(rng, int(width), int(height), aid)


def apply_mask(
    image: Any,
    mask: Any,
    fill: Any,
    image_dims: tuple[int, ...] | None = None,
    mask_dims: tuple[int, int] | None = None,
) -> np.ndarray:
    """Write fill values into dropped pixels; returns a new uint8 array.

    ``image`` is uint8 (H, W) or (H, W, C); ``mask`` is boolean (H, W).
    Raw buffers are accepted with explicit ``image_dims`` / ``mask_dims``.
    """
    img = _as_array(image, np.dtype(np.uint8), image_dims, "image")
    m = _as_array(mask, np.dtype(np.bool_), mask_dims, "mask")
    return _apply_mask(img, m, _fill_policy(fill))


def render_heatmaps(
    keypoints: Any,
    out_dims: tuple[int, int],
    stride: float,
    sigma: float,
    num_keypoints: int | None = None,
) -> np.ndarray:
    """Render (K, H, W) float64 Gaussian maps from (K, 3) keypoint rows.

    Rows are (x, y, v) in input pixels with the usual visibility flags.
    """
    kp = np.asarray(
        _as_array(
            keypoints, np.dtype(np.float64),
            (num_keypoints, 3) if num_keypoints is not None else None,
            "keypoints",
        )
    )
    if kp.ndim != 2 or kp.shape[1] != 3:
        raise ValueError(f"keypoints must be (K, 3), got {kp.shape}")
    layout = KeypointLayout(f"k{kp.shape[0]}", tuple(f"p{i}" for i in range(kp.shape[0])))
    # Rendering reads coordinates and visibility only; box and area are
    # placeholders to satisfy the instance contract.
    inst = KeypointInstance(kp, (0.0, 0.0, 1.0, 1.0), 1.0, layout)
    stack = _render_heatmaps(inst, (int(out_dims[0]), int(out_dims[1])), float(stride), float(sigma))
    return np.asarray(stack.maps)


def _load_plan(plan: Any) -> SchedulePlan:
    if isinstance(plan, SchedulePlan):
        return plan
    if isinstance(plan, Mapping):
        import json

        return SchedulePlan.from_json(json.dumps(plan))
    text = str(plan)
    if text.lstrip().startswith("{"):
        return SchedulePlan.from_json(text)
    return SchedulePlan.from_json_file(Path(text))


def lr_at(plan: Any, epoch: int) -> float:
    """Learning rate at an epoch of a plan (JSON text, path, or mapping)."""
    return _load_plan(plan).lr_at(int(epoch))


def aid_active(plan: Any, epoch: int) -> bool:
    """Whether information dropping runs at an epoch of a plan."""
    return _load_plan(plan).aid_at(int(epoch))


def evaluate(
    gt_path: str | Path,
    dt_path: str | Path,
    split: str = "all",
    kappas: Any = None,
) -> dict:
    """OKS AP/AR report from annotation and results files.

    ``split`` is one of all / vis / invis / both; the split metrics are
    filled only when requested. Returns the report as a plain dict.
    """
    if split not in ("all", "vis", "invis", "both"):
        raise ValueError(f"unknown split {split!r}")
    anns = load_coco_annotations(gt_path)
    gt = {image_id: instances for image_id, _, instances in anns}
    dt = load_coco_results(dt_path, anns.layout)
    if kappas is not None:
        sigmas = OksSigmas(np.asarray(kappas, dtype=np.float64), anns.layout.name)
    elif anns.layout.num_keypoints == 17:
        sigmas = OksSigmas.coco()
    else:
        raise ValueError(
            f"layout {anns.layout.name!r} has {anns.layout.num_keypoints} keypoints; "
            "pass kappas explicitly"
        )
    report = _evaluate(gt, dt, sigmas)
    out = report.as_dict()
    if split in ("vis", "invis", "both"):
        ap_vis, ap_invis = _evaluate_splits(gt, dt, sigmas)
        if split in ("vis", "both"):
            out["AP_vis"] = ap_vis
        if split in ("invis", "both"):
            out["AP_invis"] = ap_invis
    return out


def verify_installed_versions() -> tuple[str, str]:
    """Installed distribution versions of (bindings, core); must be equal."""
    return (
        importlib.metadata.version("infodrop-bindings"),
        importlib.metadata.version("infodrop"),
    )
