"""Information-dropping mask generators and their application to images.

Four mask families are provided: cutout and random-erase drop a single
rectangular area, hide-and-seek drops grid patches independently, and
gridmask drops a periodic lattice of squares. All generators are pure
functions of ``(RngState, dims, params)`` and return a boolean drop mask;
they never see or touch annotations, so heatmap supervision generated from
the annotations is unaffected by construction.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .types import KeypointInstance, RngState, ensure_image, ensure_mask

__all__ = [
    "FillPolicy",
    "CutoutParams",
    "RandomEraseParams",
    "HasParams",
    "GridMaskParams",
    "AidConfig",
    "METHODS",
    "sample_cutout",
    "sample_random_erase",
    "sample_has",
    "sample_gridmask",
    "sample_mask",
    "apply_mask",
    "keypoints_dropped",
    "default_params",
    "default_aid_config",
]

log = logging.getLogger(__name__)

RANDOM_ERASE_ATTEMPTS = 10


@dataclass(frozen=True)
class FillPolicy:
    """What to write into dropped pixels.

    ``constant`` uses the given per-channel values; ``dataset-mean`` uses
    per-channel means precomputed over the training set (must be supplied);
    ``per-image-mean`` computes the mean of the image being masked.
    """

    mode: str = "dataset-mean"
    values: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("constant", "dataset-mean", "per-image-mean"):
            raise ValueError(f"unknown fill mode {self.mode!r}")
        if self.mode == "constant":
            if self.values is None:
                raise ValueError("constant fill needs explicit values")
            if any(not 0 <= v <= 255 for v in self.values):
                raise ValueError("constant fill values must lie in [0, 255]")
        if self.values is not None:
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @classmethod
    def constant(cls, *values: float) -> "FillPolicy":
        return cls("constant", tuple(values))

    @classmethod
    def dataset_mean(cls, values: tuple[float, ...] | None = None) -> "FillPolicy":
        return cls("dataset-mean", values)

    @classmethod
    def per_image_mean(cls) -> "FillPolicy":
        return cls("per-image-mean", None)

    def resolve(self, img: np.ndarray) -> np.ndarray:
        """Per-channel uint8 fill values for this image."""
        channels = 1 if img.ndim == 2 else img.shape[2]
        if self.mode == "per-image-mean":
            flat = img.reshape(-1, channels) if img.ndim == 3 else img.reshape(-1, 1)
            values = flat.mean(axis=0)
        else:
            if self.values is None:
                raise ValueError(
                    "dataset-mean fill used before dataset statistics were supplied"
                )
            values = np.asarray(self.values, dtype=np.float64)
            if values.size == 1 and channels > 1:
                values = np.repeat(values, channels)
            if values.size != channels:
                raise ValueError(
                    f"fill has {values.size} values for a {channels}-channel image"
                )
        return np.clip(np.rint(values), 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class CutoutParams:
    """Axis-aligned holes with fixed size and uniformly sampled centers."""

    num_holes: int = 1
    hole_w: int = 16
    hole_h: int = 16
    fill: FillPolicy = field(default_factory=FillPolicy)

    def __post_init__(self) -> None:
        if self.num_holes < 0:
            raise ValueError("num_holes must be >= 0")
        if self.num_holes > 0 and (self.hole_w < 1 or self.hole_h < 1):
            raise ValueError("hole_w and hole_h must be >= 1 when holes are sampled")


@dataclass(frozen=True)
class RandomEraseParams:
    """One rectangle with sampled area fraction and log-uniform aspect ratio.

    ``aspect`` is height / width.
    """

    area_frac_range: tuple[float, float] = (0.02, 0.4)
    aspect_range: tuple[float, float] = (0.3, 3.3)
    fill: FillPolicy = field(default_factory=FillPolicy)

    def __post_init__(self) -> None:
        s_low, s_high = self.area_frac_range
        r_low, r_high = self.aspect_range
        if not (0 < s_low <= s_high <= 1):
            raise ValueError("area_frac_range must satisfy 0 < s_low <= s_high <= 1")
        if not (0 < r_low <= r_high):
            raise ValueError("aspect_range must satisfy 0 < r_low <= r_high")


@dataclass(frozen=True)
class HasParams:
    """Independent per-patch dropping on a fixed grid.

    The grid splits the image into ``grid_rows x grid_cols`` patches of
    ``H // grid_rows`` by ``W // grid_cols`` pixels; the last row/column
    absorbs any remainder.
    """

    grid_rows: int = 4
    grid_cols: int = 4
    drop_prob: float = 0.3
    fill: FillPolicy = field(default_factory=FillPolicy)

    def __post_init__(self) -> None:
        if self.grid_rows < 1 or self.grid_cols < 1:
            raise ValueError("grid must be at least 1x1")
        if not 0 <= self.drop_prob <= 1:
            raise ValueError("drop_prob must lie in [0, 1]")


@dataclass(frozen=True)
class GridMaskParams:
    """Periodic lattice of dropped squares.

    The period ``d`` is drawn uniformly (inclusive) from ``period_range``;
    each ``d x d`` tile contains one dropped square of side
    ``round(ratio * d)`` (round half to even). A random phase in ``[0, d)^2``
    and an optional rotation of the lattice are applied before rasterizing
    by pixel-center inclusion.
    """

    period_range: tuple[int, int] = (8, 16)
    ratio: float = 0.4
    rotate_max_deg: float = 0.0
    fill: FillPolicy = field(default_factory=FillPolicy)

    def __post_init__(self) -> None:
        d_min, d_max = self.period_range
        if d_min < 2 or d_max < d_min:
            raise ValueError("period_range must satisfy 2 <= d_min <= d_max")
        if not 0 <= self.ratio <= 1:
            raise ValueError("ratio must lie in [0, 1]")
        # Dropped square side must stay strictly below the period for every
        # period in range; the bound is tightest at d_max.
        if np.rint(self.ratio * d_max) >= d_max:
            raise ValueError(
                f"ratio {self.ratio} leaves no kept band at period {d_max}"
            )
        if self.rotate_max_deg < 0:
            raise ValueError("rotate_max_deg must be >= 0")


MaskParams = CutoutParams | RandomEraseParams | HasParams | GridMaskParams

METHODS = ("cutout", "random-erase", "has", "gridmask", "none")

_PARAM_TYPES = {
    "cutout": CutoutParams,
    "random-erase": RandomEraseParams,
    "has": HasParams,
    "gridmask": GridMaskParams,
}


@dataclass(frozen=True)
class AidConfig:
    """Which dropping method to run, its parameters, and how often."""

    method: str = "none"
    params: MaskParams | None = None
    apply_prob: float = 0.5

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not 0 <= self.apply_prob <= 1:
            raise ValueError("apply_prob must lie in [0, 1]")
        if self.method == "none":
            if self.params is not None:
                raise ValueError("method 'none' takes no params")
        else:
            expected = _PARAM_TYPES[self.method]
            if not isinstance(self.params, expected):
                raise ValueError(
                    f"method {self.method!r} needs {expected.__name__}, "
                    f"got {type(self.params).__name__}"
                )

    @property
    def fill(self) -> FillPolicy:
        # "none" carries no params; per-image mean needs no outside values.
        return self.params.fill if self.params is not None else FillPolicy.per_image_mean()

    def with_fill(self, fill: FillPolicy) -> "AidConfig":
        if self.params is None:
            return self
        from dataclasses import replace

        return AidConfig(self.method, replace(self.params, fill=fill), self.apply_prob)


def sample_cutout(rng: RngState, w: int, h: int, p: CutoutParams) -> np.ndarray:
    """Drop ``num_holes`` fixed-size rectangles with uniform integer centers.

    A hole centered at ``(cx, cy)`` spans ``[cx - hole_w // 2, ...)`` of
    width ``hole_w`` (ditto vertically) and is clipped at the borders.
    """
    if w < 1 or h < 1:
        raise ValueError("image dims must be >= 1")
    mask = np.zeros((h, w), dtype=bool)
    if p.num_holes == 0:
        return mask
    gen = rng.generator()
    for _ in range(p.num_holes):
        cx = int(gen.integers(0, w))
        cy = int(gen.integers(0, h))
        x0 = cx - p.hole_w // 2
        y0 = cy - p.hole_h // 2
        x1 = min(x0 + p.hole_w, w)
        y1 = min(y0 + p.hole_h, h)
        mask[max(y0, 0):y1, max(x0, 0):x1] = True
    return mask


def sample_random_erase(rng: RngState, w: int, h: int, p: RandomEraseParams) -> np.ndarray:
    """Drop one rectangle of sampled area fraction and aspect ratio.

    Rejection-samples up to a fixed attempt budget for an integer rectangle
    that fits inside the image with dropped fraction inside
    ``area_frac_range``; if none fits, returns an all-keep mask and logs it.
    """
    if w < 1 or h < 1:
        raise ValueError("image dims must be >= 1")
    mask = np.zeros((h, w), dtype=bool)
    gen = rng.generator()
    s_low, s_high = p.area_frac_range
    log_r = (math.log(p.aspect_range[0]), math.log(p.aspect_range[1]))
    total = w * h
    for _ in range(RANDOM_ERASE_ATTEMPTS):
        s = gen.uniform(s_low, s_high)
        aspect = math.exp(gen.uniform(*log_r))
        rh = math.sqrt(s * total * aspect)
        rw = math.sqrt(s * total / aspect)
        best = None
        for ch in {math.floor(rh), math.ceil(rh)}:
            for cw in {math.floor(rw), math.ceil(rw)}:
                if ch < 1 or cw < 1 or ch > h or cw > w:
                    continue
                frac = ch * cw / total
                if s_low <= frac <= s_high:
                    err = abs(frac - s)
                    if best is None or err < best[0]:
                        best = (err, ch, cw)
        if best is None:
            continue
        _, ch, cw = best
        top = int(gen.integers(0, h - ch + 1))
        left = int(gen.integers(0, w - cw + 1))
        mask[top:top + ch, left:left + cw] = True
        return mask
    log.warning(
        "random-erase found no admissible rectangle for %dx%d within %d attempts; "
        "returning all-keep", w, h, RANDOM_ERASE_ATTEMPTS,
    )
    return mask


def sample_has(rng: RngState, w: int, h: int, p: HasParams) -> np.ndarray:
    """Drop each grid patch independently with probability ``drop_prob``."""
    if w < p.grid_cols or h < p.grid_rows:
        raise ValueError(f"{p.grid_rows}x{p.grid_cols} grid does not fit {w}x{h} image")
    gen = rng.generator()
    drops = gen.random((p.grid_rows, p.grid_cols)) < p.drop_prob
    mask = np.zeros((h, w), dtype=bool)
    ph, pw = h // p.grid_rows, w // p.grid_cols
    for r in range(p.grid_rows):
        y0 = r * ph
        y1 = (r + 1) * ph if r < p.grid_rows - 1 else h
        for c in range(p.grid_cols):
            if drops[r, c]:
                x0 = c * pw
                x1 = (c + 1) * pw if c < p.grid_cols - 1 else w
                mask[y0:y1, x0:x1] = True
    return mask


def sample_gridmask(rng: RngState, w: int, h: int, p: GridMaskParams) -> np.ndarray:
    """Drop a periodic lattice of squares with random period, phase, rotation.

    A pixel is dropped when its center, rotated back into lattice space
    around the image center, lands inside the ``side x side`` square of its
    tile, where ``side = round(ratio * d)``.
    """
    if w < 1 or h < 1:
        raise ValueError("image dims must be >= 1")
    gen = rng.generator()
    d = int(gen.integers(p.period_range[0], p.period_range[1] + 1))
    ox = gen.uniform(0.0, d)
    oy = gen.uniform(0.0, d)
    theta = math.radians(gen.uniform(-p.rotate_max_deg, p.rotate_max_deg))
    side = float(np.rint(p.ratio * d))
    if side == 0:
        return np.zeros((h, w), dtype=bool)

    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    if theta != 0.0:
        cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
        cos_t, sin_t = math.cos(-theta), math.sin(-theta)
        rx = cos_t * (xs - cx) - sin_t * (ys - cy) + cx
        ry = sin_t * (xs - cx) + cos_t * (ys - cy) + cy
    else:
        rx, ry = xs, ys
    return ((rx - ox) % d < side) & ((ry - oy) % d < side)


def sample_mask(rng: RngState, w: int, h: int, cfg: AidConfig) -> np.ndarray:
    """Sample a drop mask per config, gated by ``apply_prob``.

    The gate draw happens first on the same stream, so whether a sample is
    masked at all is decided deterministically from the RngState.
    """
    gate = rng.generator().random()
    if cfg.method == "none" or gate >= cfg.apply_prob:
        return np.zeros((h, w), dtype=bool)
    inner = rng.fork("mask")
    if cfg.method == "cutout":
        return sample_cutout(inner, w, h, cfg.params)
    if cfg.method == "random-erase":
        return sample_random_erase(inner, w, h, cfg.params)
    if cfg.method == "has":
        return sample_has(inner, w, h, cfg.params)
    return sample_gridmask(inner, w, h, cfg.params)


def apply_mask(img: np.ndarray, mask: np.ndarray, fill: FillPolicy) -> np.ndarray:
    """Replace dropped pixels per the fill policy; kept pixels are untouched.

    Annotations are not an input and cannot be altered here.
    """
    img = ensure_image(img)
    mask = ensure_mask(mask)
    if mask.shape != img.shape[:2]:
        raise ValueError(f"mask {mask.shape} does not match image {img.shape[:2]}")
    out = img.copy()
    if not mask.any():
        return out
    values = fill.resolve(img)
    if img.ndim == 2:
        out[mask] = values[0]
    else:
        out[mask, :] = values
    return out


def keypoints_dropped(instance: KeypointInstance, mask: np.ndarray) -> np.ndarray:
    """Per-keypoint flags: the nearest pixel of a labeled keypoint is dropped.

    Purely diagnostic; unlabeled (v=0) and out-of-bounds keypoints report
    False. The result never feeds back into supervision.
    """
    mask = ensure_mask(mask)
    h, w = mask.shape
    kp = instance.keypoints
    out = np.zeros(kp.shape[0], dtype=bool)
    for i, (x, y, v) in enumerate(kp):
        if v <= 0:
            continue
        px, py = int(np.rint(x)), int(np.rint(y))
        if 0 <= px < w and 0 <= py < h:
            out[i] = bool(mask[py, px])
    return out


def default_params(method: str, w: int, h: int, fill: FillPolicy | None = None) -> MaskParams:
    """Reasonable per-method defaults scaled to the image size.

    Intensities are deliberately mid-range; ``calibrate`` can adjust each
    method's primary knob so that all methods perturb training equally.
    """
    fill = fill if fill is not None else FillPolicy()
    side = min(w, h)
    if method == "cutout":
        hole = max(1, int(np.rint(0.25 * side)))
        return CutoutParams(1, hole, hole, fill)
    if method == "random-erase":
        return RandomEraseParams((0.02, 0.4), (0.3, 3.3), fill)
    if method == "has":
        return HasParams(4, 4, 0.3, fill)
    if method == "gridmask":
        d_min = max(2, side // 8)
        d_max = max(d_min, side // 4)
        return GridMaskParams((d_min, d_max), 0.4, 0.0, fill)
    raise ValueError(f"no parameters for method {method!r}")


def default_aid_config(
    method: str,
    image_size: tuple[int, int],
    apply_prob: float = 0.5,
    fill: FillPolicy | None = None,
) -> AidConfig:
    """Default config for one method on ``(w, h)`` images."""
    if method == "none":
        return AidConfig("none", None, apply_prob)
    w, h = image_size
    return AidConfig(method, default_params(method, w, h, fill), apply_prob)
