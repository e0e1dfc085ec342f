"""Baseline geometric augmentation: random flip, scale and rotation.

Keypoints use the pixel-center convention from :mod:`infodrop.types`.
Bounding boxes use corner coordinates, i.e. the full ``W x H`` image is the
box ``(0, 0, W, H)``; the center of a box in pixel-center coordinates is
``(x + w / 2 - 0.5, y + h / 2 - 0.5)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .masking import FillPolicy
from .types import KeypointInstance, KeypointLayout, RngState, ensure_image, image_center

__all__ = ["GeomConfig", "AffineTransform", "sample_transform", "warp_image", "transform_keypoints"]

AID_ORDERS = ("before_geometry", "after_geometry")


@dataclass(frozen=True)
class GeomConfig:
    flip_prob: float = 0.5
    scale_range: tuple[float, float] = (0.7, 1.3)
    rotation_max_deg: float = 40.0
    output_size: tuple[int, int] = (192, 256)
    aid_order: str = "after_geometry"

    def __post_init__(self) -> None:
        smin, smax = self.scale_range
        if not (0 < smin <= smax):
            raise ValueError("scale_range must satisfy 0 < smin <= smax")
        if not 0 <= self.flip_prob <= 1:
            raise ValueError("flip_prob must lie in [0, 1]")
        if self.rotation_max_deg < 0:
            raise ValueError("rotation_max_deg must be >= 0")
        if self.aid_order not in AID_ORDERS:
            raise ValueError(f"aid_order must be one of {AID_ORDERS}")
        w, h = self.output_size
        if w < 1 or h < 1:
            raise ValueError("output_size must be positive")


@dataclass(frozen=True)
class AffineTransform:
    """2x3 matrix mapping source pixel-center coords to output coords."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.ascontiguousarray(np.asarray(self.matrix, dtype=np.float64))
        if m.shape != (2, 3):
            raise ValueError(f"affine matrix must be 2x3, got {m.shape}")
        if abs(np.linalg.det(m[:, :2])) < 1e-12:
            raise ValueError("affine transform must be invertible")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "AffineTransform":
        return cls(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))

    @classmethod
    def from_components(
        cls,
        src_center: tuple[float, float],
        dst_center: tuple[float, float],
        scale: float | tuple[float, float],
        rotation_deg: float = 0.0,
        flip_x: bool = False,
    ) -> "AffineTransform":
        """Scale/rotate/flip about ``src_center``, then move it to ``dst_center``."""
        sx, sy = (scale, scale) if np.isscalar(scale) else scale
        theta = math.radians(rotation_deg)
        cos_t, sin_t = math.cos(theta), math.sin(theta)
        lin = np.array([[cos_t, -sin_t], [sin_t, cos_t]]) @ np.diag(
            [-sx if flip_x else sx, sy]
        )
        offset = np.asarray(dst_center) - lin @ np.asarray(src_center)
        return cls(np.hstack([lin, offset[:, None]]))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map ``(N, 2)`` points (a single ``(2,)`` point is accepted too)."""
        pts = np.asarray(points, dtype=np.float64)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        out = pts @ self.matrix[:, :2].T + self.matrix[:, 2]
        return out[0] if single else out

    def inverse(self) -> "AffineTransform":
        lin = np.linalg.inv(self.matrix[:, :2])
        offset = -lin @ self.matrix[:, 2]
        return AffineTransform(np.hstack([lin, offset[:, None]]))

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix[:, :2]))


def _expand_to_aspect(bbox: tuple[float, float, float, float], aspect: float):
    """Grow the short side of a box to reach ``aspect`` = width / height."""
    x, y, w, h = bbox
    if w / h < aspect:
        new_w = h * aspect
        x -= (new_w - w) / 2
        w = new_w
    else:
        new_h = w / aspect
        y -= (new_h - h) / 2
        h = new_h
    return x, y, w, h


def sample_transform(
    rng: RngState,
    cfg: GeomConfig,
    bbox: tuple[float, float, float, float] | None = None,
    image_size: tuple[int, int] | None = None,
) -> tuple[AffineTransform, bool]:
    """Sample a crop/scale/rotate(/flip) transform to the output frame.

    With ``bbox`` the region is the per-instance box expanded to the output
    aspect ratio (top-down mode); with ``image_size`` it is the whole image
    (bottom-up mode). Draw order: scale, rotation, flip.
    """
    if (bbox is None) == (image_size is None):
        raise ValueError("pass exactly one of bbox or image_size")
    if bbox is not None and (bbox[2] <= 0 or bbox[3] <= 0):
        raise ValueError(f"degenerate bbox {bbox}")
    out_w, out_h = cfg.output_size
    region = bbox if bbox is not None else (0.0, 0.0, float(image_size[0]), float(image_size[1]))
    region = _expand_to_aspect(region, out_w / out_h)

    gen = rng.generator()
    s = gen.uniform(*cfg.scale_range)
    theta = gen.uniform(-cfg.rotation_max_deg, cfg.rotation_max_deg)
    flip = bool(gen.random() < cfg.flip_prob)

    x, y, w, h = region
    src_center = (x + w / 2 - 0.5, y + h / 2 - 0.5)
    t = AffineTransform.from_components(
        src_center,
        image_center(out_w, out_h),
        scale=(out_w / w) * s,
        rotation_deg=theta,
        flip_x=flip,
    )
    return t, flip


def warp_image(
    img: np.ndarray,
    t: AffineTransform,
    output_size: tuple[int, int],
    fill: FillPolicy | None = None,
) -> np.ndarray:
    """Resample under ``t`` with bilinear interpolation.

    Sample points inside the source extent use edge replication at borders;
    points outside the extent are written from the fill policy (default:
    per-image mean).
    """
    img = ensure_image(img)
    fill = fill if fill is not None else FillPolicy.per_image_mean()
    out_w, out_h = output_size
    h, w = img.shape[:2]

    inv = t.inverse()
    ys, xs = np.mgrid[0:out_h, 0:out_w]
    pts = np.stack([xs.ravel(), ys.ravel()], axis=1).astype(np.float64)
    src = inv.apply(pts)
    sx, sy = src[:, 0], src[:, 1]

    outside = (sx < -0.5) | (sx > w - 0.5) | (sy < -0.5) | (sy > h - 0.5)
    x0 = np.floor(sx)
    y0 = np.floor(sy)
    fx = sx - x0
    fy = sy - y0
    xi0 = np.clip(x0, 0, w - 1).astype(np.intp)
    xi1 = np.clip(x0 + 1, 0, w - 1).astype(np.intp)
    yi0 = np.clip(y0, 0, h - 1).astype(np.intp)
    yi1 = np.clip(y0 + 1, 0, h - 1).astype(np.intp)

    flat = img.reshape(h, w, -1).astype(np.float64)
    w00 = (1 - fx) * (1 - fy)
    w10 = fx * (1 - fy)
    w01 = (1 - fx) * fy
    w11 = fx * fy
    val = (
        flat[yi0, xi0] * w00[:, None]
        + flat[yi0, xi1] * w10[:, None]
        + flat[yi1, xi0] * w01[:, None]
        + flat[yi1, xi1] * w11[:, None]
    )
    val[outside] = fill.resolve(img).astype(np.float64)
    out = np.clip(np.rint(val), 0, 255).astype(np.uint8)
    out = out.reshape(out_h, out_w, -1)
    return out[:, :, 0] if img.ndim == 2 else out


def transform_keypoints(
    instance: KeypointInstance,
    t: AffineTransform,
    flip: bool = False,
    layout: KeypointLayout | None = None,
) -> KeypointInstance:
    """Map labeled keypoint coordinates by ``t``; swap left/right on flip.

    The matrix already contains the mirroring when the transform was sampled
    with a flip, so ``flip`` only controls the index permutation. Visibility
    flags are never changed. The box is mapped to the axis-aligned hull of
    its corners and the area scales with the transform determinant.
    """
    layout = layout if layout is not None else instance.layout
    kp = instance.keypoints.copy()
    labeled = kp[:, 2] > 0
    if labeled.any():
        kp[labeled, :2] = t.apply(kp[labeled, :2])
    if flip:
        kp = kp[layout.flip_permutation()]

    x, y, w, h = instance.bbox
    corners_cc = np.array(
        [
            [x - 0.5, y - 0.5],
            [x + w - 0.5, y - 0.5],
            [x - 0.5, y + h - 0.5],
            [x + w - 0.5, y + h - 0.5],
        ]
    )
    mapped = t.apply(corners_cc)
    x0, y0 = mapped.min(axis=0)
    x1, y1 = mapped.max(axis=0)
    bbox = (x0 + 0.5, y0 + 0.5, x1 - x0, y1 - y0)
    area = instance.area * abs(t.det)
    return instance.replace(keypoints=kp, bbox=bbox, area=area)
