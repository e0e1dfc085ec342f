"""Shared domain types and conventions.

Coordinate convention (used by every module in this package): pixel ``(x, y)``
of an image addresses column ``x`` and row ``y``, and the continuous
coordinate of that pixel's center is exactly ``(x, y)``. An ``H x W`` image
therefore spans the continuous region ``[-0.5, W - 0.5) x [-0.5, H - 0.5)``
and its center is ``((W - 1) / 2, (H - 1) / 2)``.

Images are ``uint8`` numpy arrays of shape ``(H, W)`` or ``(H, W, C)`` with
``C`` in ``{1, 3}``. Binary masks are boolean ``(H, W)`` arrays where ``True``
marks a dropped pixel.

Keypoint visibility follows the COCO convention: ``v=0`` unlabeled (x, y
ignored), ``v=1`` labeled but not visible, ``v=2`` labeled and visible.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RngState",
    "KeypointLayout",
    "KeypointInstance",
    "COCO_KEYPOINT_NAMES",
    "COCO_LAYOUT",
    "ensure_image",
    "ensure_mask",
    "drop_fraction",
    "image_center",
]


@dataclass(frozen=True)
class RngState:
    """Deterministic random state: a 64-bit seed plus a named sub-stream.

    The same ``(seed, stream)`` pair always produces the same generator on
    any platform. Stochastic operations take an ``RngState`` and derive a
    fresh generator from it, so they are pure functions of their inputs;
    callers that need several independent draws fork named sub-streams.
    """

    seed: int
    stream: str = "root"

    def fork(self, name: str) -> "RngState":
        """Derive an independent child stream, e.g. ``fork("epoch3")``."""
        return RngState(self.seed, f"{self.stream}/{name}")

    def generator(self) -> np.random.Generator:
        """Build a fresh PCG64 generator for this (seed, stream) pair."""
        digest = hashlib.sha256(self.stream.encode("utf-8")).digest()
        words = np.frombuffer(digest, dtype=np.uint32)
        entropy = [self.seed & 0xFFFFFFFFFFFFFFFF, *words.tolist()]
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


COCO_KEYPOINT_NAMES = (
    "nose",
    "left_eye",
    "right_eye",
    "left_ear",
    "right_ear",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
)


@dataclass(frozen=True)
class KeypointLayout:
    """Named keypoint schema with left/right pair indices.

    ``flip_pairs`` lists index pairs that exchange under a horizontal flip.
    Together the pairs must form a symmetric involution: no index may appear
    twice and no pair may map an index to itself.
    """

    name: str
    keypoint_names: tuple[str, ...]
    flip_pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        k = len(self.keypoint_names)
        seen: set[int] = set()
        for a, b in self.flip_pairs:
            if not (0 <= a < k and 0 <= b < k) or a == b:
                raise ValueError(f"invalid flip pair ({a}, {b}) for {k} keypoints")
            if a in seen or b in seen:
                raise ValueError(f"index reused in flip pairs: ({a}, {b})")
            seen.update((a, b))

    @property
    def num_keypoints(self) -> int:
        return len(self.keypoint_names)

    def flip_permutation(self) -> np.ndarray:
        """Index permutation applied to keypoints on horizontal flip."""
        perm = np.arange(self.num_keypoints)
        for a, b in self.flip_pairs:
            perm[a], perm[b] = perm[b], perm[a]
        return perm

    @classmethod
    def from_names(cls, name: str, keypoint_names: tuple[str, ...]) -> "KeypointLayout":
        """Derive flip pairs by matching ``left_*`` / ``right_*`` names."""
        index = {n: i for i, n in enumerate(keypoint_names)}
        pairs = []
        for n, i in index.items():
            if n.startswith("left_"):
                twin = "right_" + n[len("left_"):]
                if twin in index:
                    pairs.append((i, index[twin]))
        return cls(name, tuple(keypoint_names), tuple(sorted(pairs)))


COCO_LAYOUT = KeypointLayout.from_names("coco_person", COCO_KEYPOINT_NAMES)


@dataclass(frozen=True, eq=False)
class KeypointInstance:
    """One annotated person (or detection): keypoints, visibility, box, area.

    ``keypoints`` is a ``(K, 3)`` float array of ``(x, y, v)`` rows in pixel
    coordinates. ``score`` is set on detections, ``None`` on ground truth.
    Instances are immutable; transforms return new instances.
    """

    keypoints: np.ndarray
    bbox: tuple[float, float, float, float]
    area: float
    layout: KeypointLayout
    score: float | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        kp = np.ascontiguousarray(np.asarray(self.keypoints, dtype=np.float64))
        if kp.ndim != 2 or kp.shape[1] != 3:
            raise ValueError(f"keypoints must be (K, 3), got {kp.shape}")
        if kp.shape[0] != self.layout.num_keypoints:
            raise ValueError(
                f"{kp.shape[0]} keypoints for layout "
                f"{self.layout.name!r} with {self.layout.num_keypoints}"
            )
        v = kp[:, 2]
        if not np.isin(v, (0.0, 1.0, 2.0)).all():
            raise ValueError("visibility flags must be 0, 1 or 2")
        if v.any() and not self.area > 0:
            raise ValueError("area must be positive when any keypoint is labeled")
        kp.flags.writeable = False
        object.__setattr__(self, "keypoints", kp)
        object.__setattr__(self, "bbox", tuple(float(c) for c in self.bbox))
        object.__setattr__(self, "area", float(self.area))

    @property
    def visibility(self) -> np.ndarray:
        return self.keypoints[:, 2]

    @property
    def labeled_count(self) -> int:
        """Number of keypoints with v > 0."""
        return int((self.keypoints[:, 2] > 0).sum())

    @property
    def zero_labeled(self) -> bool:
        """True when no keypoint carries a label (degenerate annotation)."""
        return self.labeled_count == 0

    def with_keypoints(self, keypoints: np.ndarray) -> "KeypointInstance":
        return KeypointInstance(
            keypoints, self.bbox, self.area, self.layout, self.score, dict(self.extra)
        )

    def replace(self, **changes) -> "KeypointInstance":
        fields = {
            "keypoints": self.keypoints,
            "bbox": self.bbox,
            "area": self.area,
            "layout": self.layout,
            "score": self.score,
            "extra": dict(self.extra),
        }
        fields.update(changes)
        return KeypointInstance(**fields)


def ensure_image(img: np.ndarray) -> np.ndarray:
    """Validate the uint8 image contract and return the array unchanged."""
    img = np.asarray(img)
    if img.dtype != np.uint8:
        raise ValueError(f"images are uint8, got dtype {img.dtype}")
    if img.ndim == 2:
        return img
    if img.ndim == 3 and img.shape[2] in (1, 3):
        return img
    raise ValueError(f"images are (H, W) or (H, W, C) with C in {{1, 3}}, got {img.shape}")


def ensure_mask(mask: np.ndarray) -> np.ndarray:
    """Validate the boolean drop-mask contract."""
    mask = np.asarray(mask)
    if mask.dtype != np.bool_ or mask.ndim != 2:
        raise ValueError(f"masks are 2-d boolean arrays, got {mask.dtype} {mask.shape}")
    return mask


def drop_fraction(mask: np.ndarray) -> float:
    """Fraction of pixels marked dropped."""
    mask = ensure_mask(mask)
    return float(mask.mean()) if mask.size else 0.0


def image_center(width: int, height: int) -> tuple[float, float]:
    """Continuous center of a width x height pixel grid."""
    return (width - 1) / 2.0, (height - 1) / 2.0
