"""8-bit PNG image I/O and 1-bit mask export."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .types import ensure_image, ensure_mask

__all__ = ["load_png", "save_png", "save_mask_png", "load_mask_png"]


def load_png(path: str | Path) -> np.ndarray:
    """Load as uint8 grayscale or RGB, matching the file's mode."""
    with Image.open(path) as im:
        if im.mode in ("L", "RGB"):
            arr = np.asarray(im)
        elif im.mode in ("1", "I;16", "I", "LA"):
            arr = np.asarray(im.convert("L"))
        else:
            arr = np.asarray(im.convert("RGB"))
    return ensure_image(arr.astype(np.uint8))


def save_png(img: np.ndarray, path: str | Path) -> None:
    img = ensure_image(img)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[:, :, 0]
    Image.fromarray(img).save(path, format="PNG")


def save_mask_png(mask: np.ndarray, path: str | Path) -> None:
    """1-bit PNG: white = kept, black = dropped."""
    mask = ensure_mask(mask)
    Image.fromarray(~mask).convert("1").save(path, format="PNG")


def load_mask_png(path: str | Path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("1"))
    return ~arr.astype(bool)
