import numpy as np
import pytest

from infodrop.types import KeypointInstance, KeypointLayout

TRI_LAYOUT = KeypointLayout("tri", ("nose", "left_shoulder", "right_shoulder"), ((1, 2),))


def make_instance(coords, vis, area=100.0, layout=None, score=None, bbox=None):
    """Build a KeypointInstance from coordinate pairs and visibility flags."""
    coords = np.asarray(coords, dtype=np.float64)
    vis = np.asarray(vis, dtype=np.float64)
    kp = np.column_stack([coords, vis])
    if layout is None:
        layout = KeypointLayout(f"k{len(vis)}", tuple(f"p{i}" for i in range(len(vis))))
    if bbox is None:
        side = float(np.sqrt(area))
        bbox = (0.0, 0.0, side, side)
    return KeypointInstance(kp, bbox, area, layout, score=score)


def random_instance(gen, layout, score=None, label_probs=(0.2, 0.3, 0.5), span=200.0):
    """Random instance with mixed visibility and an area spanning M/L sizes."""
    k = layout.num_keypoints
    coords = gen.uniform(0, span, size=(k, 2))
    vis = gen.choice([0.0, 1.0, 2.0], size=k, p=label_probs)
    area = float(gen.uniform(15.0, 150.0)) ** 2
    kp = np.column_stack([coords, vis])
    x0, y0 = coords.min(axis=0)
    x1, y1 = coords.max(axis=0)
    return KeypointInstance(
        kp, (float(x0), float(y0), float(x1 - x0 + 1), float(y1 - y0 + 1)),
        area, layout, score=score,
    )


def random_eval_fixture(gen, layout, max_images=5, max_instances=5, jitter=25.0):
    """A random (gt, dt) pair exercising the evaluator's edge cases.

    Detections are jittered copies of ground truths plus spurious extras;
    some images have no detections, some no ground truth; scores include
    exact ties.
    """
    n_images = int(gen.integers(1, max_images + 1))
    gt = {}
    dt = {}
    for img_id in range(1, n_images + 1):
        n_gt = int(gen.integers(0, max_instances + 1))
        gts = [random_instance(gen, layout) for _ in range(n_gt)]
        # Occasionally a fully unlabeled annotation.
        if n_gt and gen.random() < 0.3:
            inst = gts[0]
            kp = inst.keypoints.copy()
            kp[:, 2] = 0.0
            gts[0] = inst.with_keypoints(kp)
        gt[img_id] = gts

        dts = []
        tie_score = round(float(gen.uniform(0.3, 0.9)), 2)
        for inst in gts:
            if gen.random() < 0.8:
                kp = inst.keypoints.copy()
                kp[:, :2] += gen.normal(0.0, jitter, size=kp[:, :2].shape)
                kp[:, 2] = 2.0
                score = tie_score if gen.random() < 0.3 else float(gen.uniform(0.1, 1.0))
                x0, y0 = kp[:, 0].min(), kp[:, 1].min()
                x1, y1 = kp[:, 0].max(), kp[:, 1].max()
                dts.append(
                    KeypointInstance(
                        kp,
                        (x0, y0, x1 - x0, y1 - y0),
                        max((x1 - x0) * (y1 - y0), 1e-6),
                        inst.layout,
                        score=score,
                    )
                )
        for _ in range(int(gen.integers(0, 3))):
            dts.append(random_instance(gen, layout, score=float(gen.uniform(0.1, 1.0))))
        for d in dts:
            assert d.score is not None
        if gen.random() < 0.15:
            dts = []
        dt[img_id] = dts
    return gt, dt


@pytest.fixture
def gen():
    return np.random.default_rng(20240817)
