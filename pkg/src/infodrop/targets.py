"""Gaussian response-map supervision and argmax decoding.

Rendering takes keypoint annotations only, never the image, so masks
applied to pixels cannot alter the supervision by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .types import KeypointInstance

__all__ = ["HeatmapStack", "render_heatmaps", "decode_heatmap", "save_heatmaps", "load_heatmaps"]

TRUNCATION_SIGMAS = 3.0
_MAGIC = "infodrop-heatmaps-v1"


@dataclass(frozen=True)
class HeatmapStack:
    """K unnormalized Gaussian maps at ``stride`` input pixels per cell.

    Values lie in [0, 1]; a keypoint aligned with a cell center puts an
    exact 1.0 there; maps of unlabeled keypoints are all zero.
    """

    maps: np.ndarray
    stride: float
    sigma: float

    def __post_init__(self) -> None:
        m = np.ascontiguousarray(np.asarray(self.maps, dtype=np.float64))
        if m.ndim != 3:
            raise ValueError(f"maps must be (K, H, W), got {m.shape}")
        m.flags.writeable = False
        object.__setattr__(self, "maps", m)

    @property
    def num_keypoints(self) -> int:
        return self.maps.shape[0]

    @property
    def out_size(self) -> tuple[int, int]:
        return self.maps.shape[2], self.maps.shape[1]


def render_heatmaps(
    instance: KeypointInstance,
    out_size: tuple[int, int],
    stride: float = 4.0,
    sigma: float = 2.0,
) -> HeatmapStack:
    """Render one Gaussian per labeled keypoint on an ``(Hout, Wout)`` grid.

    Cell ``(u, v)`` of map k reads ``exp(-((u - x/stride)^2 +
    (v - y/stride)^2) / (2 sigma^2))``, truncated to zero beyond a radius of
    3 sigma (max truncation error exp(-4.5) ~ 0.011). Keypoints outside the
    grid render whatever tail falls inside it.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    out_h, out_w = out_size
    k = instance.layout.num_keypoints
    maps = np.zeros((k, out_h, out_w), dtype=np.float64)
    radius = TRUNCATION_SIGMAS * sigma
    for i, (x, y, v) in enumerate(instance.keypoints):
        if v <= 0:
            continue
        cx = x / stride
        cy = y / stride
        u0 = max(int(np.floor(cx - radius)), 0)
        u1 = min(int(np.ceil(cx + radius)) + 1, out_w)
        v0 = max(int(np.floor(cy - radius)), 0)
        v1 = min(int(np.ceil(cy + radius)) + 1, out_h)
        if u0 >= u1 or v0 >= v1:
            continue
        us = np.arange(u0, u1, dtype=np.float64)
        vs = np.arange(v0, v1, dtype=np.float64)
        d2 = (us[None, :] - cx) ** 2 + (vs[:, None] - cy) ** 2
        patch = np.exp(-d2 / (2.0 * sigma * sigma))
        patch[d2 > radius * radius] = 0.0
        maps[i, v0:v1, u0:u1] = patch
    return HeatmapStack(maps, float(stride), float(sigma))


def decode_heatmap(stack: HeatmapStack) -> np.ndarray:
    """Decode each map to ``(x, y, confidence)`` in input pixels.

    Takes the row-major-first argmax cell, shifts a quarter cell toward the
    larger horizontal/vertical neighbor, and scales by the stride. An
    all-zero (or non-positive) map decodes to the grid center with
    confidence 0.
    """
    k, h, w = stack.maps.shape
    if h < 1 or w < 1:
        raise ValueError("empty heatmaps")
    out = np.zeros((k, 3), dtype=np.float64)
    for i in range(k):
        m = stack.maps[i]
        flat_idx = int(m.argmax())
        peak = float(m.reshape(-1)[flat_idx])
        if peak <= 0.0:
            out[i] = ((w - 1) / 2.0 * stack.stride, (h - 1) / 2.0 * stack.stride, 0.0)
            continue
        py, px = divmod(flat_idx, w)
        x, y = float(px), float(py)
        if 0 < px < w - 1:
            left, right = m[py, px - 1], m[py, px + 1]
            if right > left:
                x += 0.25
            elif left > right:
                x -= 0.25
        if 0 < py < h - 1:
            up, down = m[py - 1, px], m[py + 1, px]
            if down > up:
                y += 0.25
            elif up > down:
                y -= 0.25
        out[i] = (x * stack.stride, y * stack.stride, peak)
    return out


def save_heatmaps(stack: HeatmapStack, path: str | Path) -> None:
    """Write a one-line JSON header followed by raw little-endian float64."""
    header = {
        "magic": _MAGIC,
        "dims": list(stack.maps.shape),
        "dtype": "<f8",
        "stride": stack.stride,
        "sigma": stack.sigma,
    }
    with open(path, "wb") as f:
        f.write(json.dumps(header).encode("utf-8"))
        f.write(b"\n")
        f.write(stack.maps.astype("<f8").tobytes())


def load_heatmaps(path: str | Path) -> HeatmapStack:
    with open(path, "rb") as f:
        header_line = f.readline()
        raw = f.read()
    header = json.loads(header_line.decode("utf-8"))
    if header.get("magic") != _MAGIC:
        raise ValueError(f"{path}: not a heatmap tensor file")
    dims = tuple(header["dims"])
    maps = np.frombuffer(raw, dtype=header["dtype"]).reshape(dims)
    return HeatmapStack(maps.astype(np.float64), header["stride"], header["sigma"])
