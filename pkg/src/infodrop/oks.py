"""Keypoint-similarity AP/AR evaluation with visibility-split metrics.

Similarity. For a detection/ground-truth pair sharing a K-keypoint schema,
``oks = mean_i exp(-d_i^2 / (2 * s^2 * k_i^2))`` over ground-truth keypoints
with v > 0, where ``d_i`` is the Euclidean distance, ``s^2`` the ground-truth
area and ``k_i`` the per-keypoint falloff constant. Prediction coordinates
are always used regardless of predicted visibility. A ground truth with no
labeled keypoint has no similarity; it is excluded from matching.

Matching protocol (per image, per area range, per threshold):
  * detections are sorted by score, descending, ties kept in input order,
    and truncated to ``max_dets``;
  * a ground truth is *ignored* when it has no labeled keypoint or its area
    lies outside the range (inclusive bounds); ignored ground truths sort
    after the others, in a stable order;
  * each detection greedily takes the not-yet-matched ground truth with the
    highest similarity at or above the threshold, scanning in the sorted
    order above (a later candidate with equal similarity replaces the held
    one); once a non-ignored candidate is held, ignored ground truths are
    not considered;
  * a detection matched to an ignored ground truth is itself ignored, as is
    an unmatched detection whose own area lies outside the range.

Scoring. Over all images jointly, detections are ranked by score (stable);
ignored detections are dropped from the ranking, matched ones are true
positives. Precision is interpolated to be non-increasing in recall and read
at 101 recall points 0.00, 0.01, ..., 1.00; AP is its mean over the 10
thresholds 0.50, 0.55, ..., 0.95 and AR is the mean final recall. Medium
and large use ground-truth areas in [32^2, 96^2] and [96^2, inf). With no
eligible ground truth, a metric is reported as absent (None), not 0.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .coco import split_by_visibility
from .types import KeypointInstance

__all__ = [
    "OksSigmas",
    "MetricsReport",
    "OksUndefinedError",
    "oks",
    "evaluate",
    "evaluate_splits",
    "OKS_THRESHOLDS",
    "AREA_RANGES",
]

OKS_THRESHOLDS = tuple((50 + 5 * i) / 100.0 for i in range(10))
RECALL_POINTS = 101
AREA_RANGES: dict[str, tuple[float, float]] = {
    "all": (0.0, float("inf")),
    "medium": (32.0 ** 2, 96.0 ** 2),
    "large": (96.0 ** 2, float("inf")),
}

# Standard 17-keypoint person falloffs; kappas in the oks formula are twice
# these values.
COCO_SIGMAS = (
    0.026, 0.025, 0.025, 0.035, 0.035, 0.079, 0.079, 0.072, 0.072,
    0.062, 0.062, 0.107, 0.107, 0.087, 0.087, 0.089, 0.089,
)


class OksUndefinedError(ValueError):
    """Similarity is undefined: the ground truth has no labeled keypoint."""


@dataclass(frozen=True)
class OksSigmas:
    """Per-keypoint falloff constants ``k_i`` keyed to a keypoint schema."""

    kappas: np.ndarray
    schema: str = ""

    def __post_init__(self) -> None:
        k = np.ascontiguousarray(np.asarray(self.kappas, dtype=np.float64))
        if k.ndim != 1 or k.size == 0:
            raise ValueError("kappas must be a non-empty 1-d array")
        if not (k > 0).all():
            raise ValueError("all falloff constants must be positive")
        k.flags.writeable = False
        object.__setattr__(self, "kappas", k)

    def __len__(self) -> int:
        return int(self.kappas.size)

    @classmethod
    def coco(cls) -> "OksSigmas":
        return cls(2.0 * np.asarray(COCO_SIGMAS), "coco_person")

    @classmethod
    def uniform(cls, num_keypoints: int, kappa: float = 0.1, schema: str = "") -> "OksSigmas":
        return cls(np.full(num_keypoints, kappa), schema)


@dataclass(frozen=True)
class MetricsReport:
    """AP/AR summary; absent (inapplicable) metrics are None."""

    ap: float | None
    ap50: float | None
    ap75: float | None
    ap_m: float | None
    ap_l: float | None
    ar: float | None
    ap_vis: float | None = None
    ap_invis: float | None = None

    _LABELS = ("AP", "AP50", "AP75", "AP_M", "AP_L", "AR", "AP_vis", "AP_invis")

    def as_dict(self) -> dict[str, float | None]:
        vals = (self.ap, self.ap50, self.ap75, self.ap_m, self.ap_l, self.ar,
                self.ap_vis, self.ap_invis)
        return dict(zip(self._LABELS, vals))

    def to_text(self) -> str:
        items = self.as_dict()
        header = "  ".join(f"{k:>8s}" for k in items)
        row = "  ".join(f"{v:8.4f}" if v is not None else f"{'-':>8s}" for v in items.values())
        return f"{header}\n{row}"


def oks(pred: KeypointInstance, gt: KeypointInstance, sigmas: OksSigmas) -> float:
    """Similarity in [0, 1] between a prediction and one ground truth."""
    k = len(sigmas)
    if pred.keypoints.shape[0] != k or gt.keypoints.shape[0] != k:
        raise ValueError("prediction, ground truth and sigmas must share a schema")
    labeled = gt.keypoints[:, 2] > 0
    if not labeled.any():
        raise OksUndefinedError("ground truth has no labeled keypoint")
    d2 = ((pred.keypoints[labeled, :2] - gt.keypoints[labeled, :2]) ** 2).sum(axis=1)
    e = d2 / (2.0 * gt.area * sigmas.kappas[labeled] ** 2)
    return float(np.exp(-e).mean())


def _sorted_dts(dts: list[KeypointInstance], max_dets: int) -> list[KeypointInstance]:
    for d in dts:
        if d.score is None:
            raise ValueError("detections must carry scores")
    order = sorted(range(len(dts)), key=lambda i: -dts[i].score)
    return [dts[i] for i in order[:max_dets]]


def _match_image(
    oks_matrix: np.ndarray,
    gt_ignore: np.ndarray,
    thresholds: tuple[float, ...],
) -> tuple[np.ndarray, np.ndarray]:
    """Greedy matching; returns (dt matched gt index or -1, dt ignore flags)."""
    nd, ng = oks_matrix.shape
    gt_order = sorted(range(ng), key=lambda g: gt_ignore[g])
    nt = len(thresholds)
    dt_match = -np.ones((nt, nd), dtype=np.int64)
    dt_ig = np.zeros((nt, nd), dtype=bool)
    for ti, t in enumerate(thresholds):
        gt_taken = np.zeros(ng, dtype=bool)
        for d in range(nd):
            best = min(t, 1.0 - 1e-10)
            m = -1
            for g in gt_order:
                if gt_taken[g]:
                    continue
                if m > -1 and not gt_ignore[m] and gt_ignore[g]:
                    break
                if oks_matrix[d, g] < best:
                    continue
                best = oks_matrix[d, g]
                m = g
            if m > -1:
                dt_match[ti, d] = m
                gt_taken[m] = True
                dt_ig[ti, d] = gt_ignore[m]
    return dt_match, dt_ig


def _accumulate(
    per_image: list[tuple[np.ndarray, np.ndarray, np.ndarray, int]],
    nt: int,
) -> tuple[np.ndarray | None, np.ndarray | None]:
    """Merge per-image match results into precision[nt, 101] and recall[nt]."""
    npig = sum(n for _, _, _, n in per_image)
    if npig == 0:
        return None, None
    scores = np.concatenate([s for s, _, _, _ in per_image]) if per_image else np.zeros(0)
    order = np.argsort(-scores, kind="mergesort")
    matched = np.concatenate([m for _, m, _, _ in per_image], axis=1)[:, order] >= 0
    ignored = np.concatenate([ig for _, _, ig, _ in per_image], axis=1)[:, order]

    tps = matched & ~ignored
    fps = ~matched & ~ignored
    tp_sum = np.cumsum(tps, axis=1).astype(np.float64)
    fp_sum = np.cumsum(fps, axis=1).astype(np.float64)

    rec_points = np.arange(RECALL_POINTS) / 100.0
    precision = np.zeros((nt, RECALL_POINTS))
    recall = np.zeros(nt)
    for ti in range(nt):
        tp, fp = tp_sum[ti], fp_sum[ti]
        nd = tp.size
        rc = tp / npig
        # Positions before any counted detection have tp + fp = 0; clamping
        # the denominator keeps them at precision 0 without an epsilon that
        # would nudge exact values.
        pr = tp / np.maximum(tp + fp, 1.0)
        recall[ti] = rc[-1] if nd else 0.0
        for i in range(nd - 1, 0, -1):
            if pr[i] > pr[i - 1]:
                pr[i - 1] = pr[i]
        inds = np.searchsorted(rc, rec_points, side="left")
        q = np.zeros(RECALL_POINTS)
        valid = inds < nd
        q[valid] = pr[inds[valid]]
        precision[ti] = q
    return precision, recall


def _eval_range(
    gt: Mapping[int, list[KeypointInstance]],
    dt: Mapping[int, list[KeypointInstance]],
    sigmas: OksSigmas,
    area_range: tuple[float, float],
    max_dets: int,
    thresholds: tuple[float, ...],
) -> tuple[np.ndarray | None, np.ndarray | None]:
    lo, hi = area_range
    image_ids = sorted(set(gt) | set(dt))
    per_image = []
    for img_id in image_ids:
        gts = gt.get(img_id, [])
        dts = _sorted_dts(dt.get(img_id, []), max_dets)
        if not gts and not dts:
            continue
        gt_ignore = np.array(
            [g.zero_labeled or not lo <= g.area <= hi for g in gts], dtype=bool
        )
        oks_matrix = np.zeros((len(dts), len(gts)))
        for di, d in enumerate(dts):
            for gi, g in enumerate(gts):
                if not g.zero_labeled:
                    oks_matrix[di, gi] = oks(d, g, sigmas)
        dt_match, dt_ig = _match_image(oks_matrix, gt_ignore, thresholds)
        dt_outside = np.array([not lo <= d.area <= hi for d in dts], dtype=bool)
        dt_ig |= (dt_match < 0) & dt_outside[None, :]
        scores = np.array([d.score for d in dts], dtype=np.float64)
        npig = int((~gt_ignore).sum())
        per_image.append((scores, dt_match, dt_ig, npig))
    return _accumulate(per_image, len(thresholds))


def _mean_ap(precision: np.ndarray | None) -> float | None:
    return None if precision is None else float(precision.mean())


def evaluate(
    gt: Mapping[int, list[KeypointInstance]],
    dt: Mapping[int, list[KeypointInstance]],
    sigmas: OksSigmas | None = None,
    area_ranges: Mapping[str, tuple[float, float]] | None = None,
    max_dets: int = 20,
) -> MetricsReport:
    """Evaluate detections against ground truth over a set of images.

    Both arguments map image id to instances. Detections must carry scores.
    """
    sigmas = sigmas if sigmas is not None else OksSigmas.coco()
    ranges = dict(area_ranges) if area_ranges is not None else dict(AREA_RANGES)
    if "all" not in ranges:
        raise ValueError("area_ranges must include 'all'")

    precision_all, recall_all = _eval_range(gt, dt, sigmas, ranges["all"], max_dets, OKS_THRESHOLDS)
    report = {
        "ap": _mean_ap(precision_all),
        "ap50": None,
        "ap75": None,
        "ap_m": None,
        "ap_l": None,
        "ar": None if recall_all is None else float(recall_all.mean()),
    }
    if precision_all is not None:
        report["ap50"] = float(precision_all[OKS_THRESHOLDS.index(0.50)].mean())
        report["ap75"] = float(precision_all[OKS_THRESHOLDS.index(0.75)].mean())
    if "medium" in ranges:
        p, _ = _eval_range(gt, dt, sigmas, ranges["medium"], max_dets, OKS_THRESHOLDS)
        report["ap_m"] = _mean_ap(p)
    if "large" in ranges:
        p, _ = _eval_range(gt, dt, sigmas, ranges["large"], max_dets, OKS_THRESHOLDS)
        report["ap_l"] = _mean_ap(p)
    return MetricsReport(**report)


def _split_gt(
    gt: Mapping[int, list[KeypointInstance]]
) -> tuple[dict[int, list[KeypointInstance]], dict[int, list[KeypointInstance]]]:
    vis: dict[int, list[KeypointInstance]] = {}
    invis: dict[int, list[KeypointInstance]] = {}
    for img_id, insts in gt.items():
        v_insts, i_insts = split_by_visibility(list(insts))
        vis[img_id] = [x for x in v_insts if not x.zero_labeled]
        invis[img_id] = [x for x in i_insts if not x.zero_labeled]
    return vis, invis


def evaluate_splits(
    gt: Mapping[int, list[KeypointInstance]],
    dt: Mapping[int, list[KeypointInstance]],
    sigmas: OksSigmas | None = None,
    area_ranges: Mapping[str, tuple[float, float]] | None = None,
    max_dets: int = 20,
) -> tuple[float | None, float | None]:
    """AP on the visible-only and invisible-only ground-truth views.

    Instances whose view has no labeled keypoint are dropped from that view;
    an empty view yields None, not 0.
    """
    vis, invis = _split_gt(gt)
    ap_vis = evaluate(vis, dt, sigmas, area_ranges, max_dets).ap
    ap_invis = evaluate(invis, dt, sigmas, area_ranges, max_dets).ap
    return ap_vis, ap_invis


def full_report(
    gt: Mapping[int, list[KeypointInstance]],
    dt: Mapping[int, list[KeypointInstance]],
    sigmas: OksSigmas | None = None,
    area_ranges: Mapping[str, tuple[float, float]] | None = None,
    max_dets: int = 20,
) -> MetricsReport:
    """`evaluate` plus the visibility-split metrics in one report."""
    report = evaluate(gt, dt, sigmas, area_ranges, max_dets)
    ap_vis, ap_invis = evaluate_splits(gt, dt, sigmas, area_ranges, max_dets)
    return replace(report, ap_vis=ap_vis, ap_invis=ap_invis)
