"""COCO-keypoints JSON ingestion, round-trip serialization, visibility splits."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .types import KeypointInstance, KeypointLayout

__all__ = [
    "CocoFormatError",
    "CocoSchemaError",
    "CocoImage",
    "CocoAnnotations",
    "load_coco_annotations",
    "save_coco_annotations",
    "load_coco_results",
    "split_by_visibility",
]


class CocoFormatError(ValueError):
    """The file is not parseable JSON."""


class CocoSchemaError(ValueError):
    """The JSON parses but does not follow the keypoints schema."""


@dataclass(frozen=True)
class CocoImage:
    id: int
    file_name: str
    width: int | None = None
    height: int | None = None
    extra: dict = field(default_factory=dict)


@dataclass
class CocoAnnotations:
    """A loaded keypoints dataset: images, per-image instances, layout.

    Iterating yields ``(image_id, file_name, instances)`` triples in the
    order the images appear in the file.
    """

    images: list[CocoImage]
    instances: dict[int, list[KeypointInstance]]
    layout: KeypointLayout
    category_id: int
    categories_raw: list[dict]

    def __iter__(self):
        for img in self.images:
            yield img.id, img.file_name, self.instances.get(img.id, [])

    @property
    def num_instances(self) -> int:
        return sum(len(v) for v in self.instances.values())

    def all_instances(self) -> list[KeypointInstance]:
        out: list[KeypointInstance] = []
        for img in self.images:
            out.extend(self.instances.get(img.id, []))
        return out


def _layout_from_category(cat: dict) -> KeypointLayout:
    names = tuple(cat.get("keypoints", ()))
    if not names:
        raise CocoSchemaError(f"category id {cat.get('id')} has no keypoints list")
    return KeypointLayout.from_names(cat.get("name", "person"), names)


def _instance_from_annotation(ann: dict, layout: KeypointLayout) -> KeypointInstance:
    if "keypoints" not in ann:
        raise CocoSchemaError(f"annotation id {ann.get('id')} has no keypoints field")
    flat = np.asarray(ann["keypoints"], dtype=np.float64)
    if flat.size != 3 * layout.num_keypoints:
        raise CocoSchemaError(
            f"annotation id {ann.get('id')}: expected "
            f"{3 * layout.num_keypoints} keypoint values, got {flat.size}"
        )
    kp = flat.reshape(-1, 3)
    bbox = tuple(float(v) for v in ann.get("bbox", (0.0, 0.0, 0.0, 0.0)))
    area = float(ann.get("area", bbox[2] * bbox[3]))
    extra = {k: v for k, v in ann.items() if k not in ("keypoints", "bbox", "area")}
    return KeypointInstance(
        kp, bbox, area, layout, score=ann.get("score"), extra=extra
    )


def load_coco_annotations(path: str | Path) -> CocoAnnotations:
    """Load a COCO-keypoints-style JSON file.

    Raises CocoFormatError with the byte offset on malformed JSON and
    CocoSchemaError naming the offending annotation on schema violations.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise CocoFormatError(f"{path}: malformed JSON at byte offset {e.pos}: {e.msg}") from e
    for block in ("images", "annotations", "categories"):
        if block not in doc:
            raise CocoSchemaError(f"{path}: missing {block!r} block")

    kp_cats = [c for c in doc["categories"] if c.get("keypoints")]
    if not kp_cats:
        raise CocoSchemaError(f"{path}: no category defines a keypoint schema")
    cat = kp_cats[0]
    layout = _layout_from_category(cat)
    cat_id = int(cat.get("id", 1))

    images = [
        CocoImage(
            id=int(im["id"]),
            file_name=im.get("file_name", ""),
            width=im.get("width"),
            height=im.get("height"),
            extra={k: v for k, v in im.items() if k not in ("id", "file_name", "width", "height")},
        )
        for im in doc["images"]
    ]
    instances: dict[int, list[KeypointInstance]] = {}
    for ann in doc["annotations"]:
        if ann.get("category_id", cat_id) != cat_id:
            continue
        inst = _instance_from_annotation(ann, layout)
        instances.setdefault(int(ann["image_id"]), []).append(inst)
    return CocoAnnotations(images, instances, layout, cat_id, doc["categories"])


def save_coco_annotations(anns: CocoAnnotations, path: str | Path) -> None:
    """Serialize back to COCO JSON; numeric fields are written exactly."""
    images = []
    for im in anns.images:
        entry: dict = {"id": im.id, "file_name": im.file_name}
        if im.width is not None:
            entry["width"] = im.width
        if im.height is not None:
            entry["height"] = im.height
        entry.update(im.extra)
        images.append(entry)
    annotations = []
    for im in anns.images:
        for inst in anns.instances.get(im.id, []):
            ann = dict(inst.extra)
            ann.setdefault("image_id", im.id)
            ann.setdefault("category_id", anns.category_id)
            ann["keypoints"] = [
                int(v) if float(v).is_integer() else float(v)
                for v in inst.keypoints.reshape(-1)
            ]
            ann["bbox"] = [int(v) if float(v).is_integer() else float(v) for v in inst.bbox]
            ann["area"] = int(inst.area) if float(inst.area).is_integer() else inst.area
            if inst.score is not None:
                ann["score"] = inst.score
            annotations.append(ann)
    doc = {"images": images, "annotations": annotations, "categories": anns.categories_raw}
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_coco_results(path: str | Path, layout: KeypointLayout) -> dict[int, list[KeypointInstance]]:
    """Load a COCO results list: ``[{image_id, category_id, keypoints, score}]``.

    Detections carry no annotated box, so the box and area are derived from
    the tight extent of the predicted keypoints (the standard results
    convention).
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise CocoFormatError(f"{path}: malformed JSON at byte offset {e.pos}: {e.msg}") from e
    if not isinstance(doc, list):
        raise CocoSchemaError(f"{path}: results file must be a JSON list")
    out: dict[int, list[KeypointInstance]] = {}
    for i, det in enumerate(doc):
        if "keypoints" not in det or "score" not in det:
            raise CocoSchemaError(f"{path}: result #{i} needs keypoints and score")
        kp = np.asarray(det["keypoints"], dtype=np.float64).reshape(-1, 3)
        if kp.shape[0] != layout.num_keypoints:
            raise CocoSchemaError(
                f"{path}: result #{i} has {kp.shape[0]} keypoints, layout expects "
                f"{layout.num_keypoints}"
            )
        xs, ys = kp[:, 0], kp[:, 1]
        x0, x1 = float(xs.min()), float(xs.max())
        y0, y1 = float(ys.min()), float(ys.max())
        bbox = (x0, y0, x1 - x0, y1 - y0)
        # Detections are evaluated with all coordinates regardless of their
        # reported visibility, so mark every keypoint labeled.
        kp = kp.copy()
        kp[:, 2] = 2.0
        area = max(bbox[2] * bbox[3], 1e-12)
        inst = KeypointInstance(
            kp, bbox, area, layout,
            score=float(det["score"]),
            extra={k: v for k, v in det.items() if k not in ("keypoints", "score")},
        )
        out.setdefault(int(det["image_id"]), []).append(inst)
    return out


def split_by_visibility(
    instances: list[KeypointInstance],
) -> tuple[list[KeypointInstance], list[KeypointInstance]]:
    """Partition labels into a visible-only and an invisible-only view.

    The visible-only copy demotes v=1 keypoints to v=0 (keeping v=2); the
    invisible-only copy demotes v=2 to v=0 (keeping v=1). Demotion rather
    than deletion keeps areas and matching structure intact. Inputs are
    untouched; every instance appears in both outputs.
    """
    vis_only: list[KeypointInstance] = []
    invis_only: list[KeypointInstance] = []
    for inst in instances:
        kp_vis = inst.keypoints.copy()
        kp_vis[kp_vis[:, 2] == 1.0, 2] = 0.0
        kp_inv = inst.keypoints.copy()
        kp_inv[kp_inv[:, 2] == 2.0, 2] = 0.0
        vis_only.append(inst.with_keypoints(kp_vis))
        invis_only.append(inst.with_keypoints(kp_inv))
    return vis_only, invis_only
