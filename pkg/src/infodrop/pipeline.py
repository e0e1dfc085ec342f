"""Sample-level augmentation: geometry and information dropping composed.

The mask only ever touches pixels. Annotations pass through the geometric
transform untouched by masking, and heatmap targets are rendered from the
annotations alone, so supervision is identical with and without dropping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import AffineTransform, GeomConfig, sample_transform, transform_keypoints, warp_image
from .masking import AidConfig, FillPolicy, apply_mask, keypoints_dropped, sample_mask
from .types import KeypointInstance, RngState, ensure_image

__all__ = ["AugmentedSample", "augment_sample"]


@dataclass(frozen=True)
class AugmentedSample:
    """The output frame: pixels, transformed annotations, and diagnostics."""

    image: np.ndarray
    instances: tuple[KeypointInstance, ...]
    transform: AffineTransform
    flipped: bool
    mask: np.ndarray
    dropped_keypoints: tuple[np.ndarray, ...]


def augment_sample(
    img: np.ndarray,
    instances: list[KeypointInstance],
    geom: GeomConfig,
    aid: AidConfig,
    rng: RngState,
    bbox: tuple[float, float, float, float] | None = None,
    border_fill: FillPolicy | None = None,
) -> AugmentedSample:
    """Augment one sample; geometry and mask draws use independent streams.

    With ``aid_order="after_geometry"`` the mask is sampled in the output
    frame; with ``"before_geometry"`` it is sampled in the source frame,
    applied there, and the dropped regions are warped with the image. Pass
    ``bbox`` for per-instance crops (top-down); omit it to transform the
    whole image (bottom-up). ``border_fill`` covers out-of-source pixels of
    the warp and is deliberately independent of the mask fill, so runs with
    and without dropping produce identical kept pixels.
    """
    img = ensure_image(img)
    h, w = img.shape[:2]
    geom_rng = rng.fork("geom")
    mask_rng = rng.fork("aid")
    border_fill = border_fill if border_fill is not None else FillPolicy.per_image_mean()

    if bbox is not None:
        t, flip = sample_transform(geom_rng, geom, bbox=bbox)
    else:
        t, flip = sample_transform(geom_rng, geom, image_size=(w, h))
    out_instances = tuple(transform_keypoints(inst, t, flip) for inst in instances)

    out_w, out_h = geom.output_size
    if geom.aid_order == "after_geometry":
        out_img = warp_image(img, t, geom.output_size, border_fill)
        mask = sample_mask(mask_rng, out_w, out_h, aid)
        out_img = apply_mask(out_img, mask, aid.fill)
    else:
        mask = sample_mask(mask_rng, w, h, aid)
        masked = apply_mask(img, mask, aid.fill)
        out_img = warp_image(masked, t, geom.output_size, border_fill)

    dropped = tuple(
        keypoints_dropped(inst, mask)
        for inst in (out_instances if geom.aid_order == "after_geometry" else instances)
    )
    return AugmentedSample(out_img, out_instances, t, flip, mask, dropped)
