"""Synthetic stick-figure benchmark for training-dynamics experiments.

Each sample is a small grayscale image of a five-keypoint figure (head, two
elbows, two hands). Limb segments are drawn as bright lines, so a keypoint's
position is constrained by the skeleton even when its blob (the local
appearance cue) is hidden; occluders or dropping masks remove the blob but
leave the structural evidence. A tiny convolutional heatmap regressor is
trained with plain SGD + momentum under the schedule plans, which is enough
to reproduce the qualitative loss/accuracy patterns of dropping-augmented
training at desk scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .masking import AidConfig, FillPolicy, apply_mask, sample_mask
from .schedule import ExperimentConfig, SchedulePlan, aid_active
from .targets import HeatmapStack, decode_heatmap, render_heatmaps
from .types import KeypointInstance, KeypointLayout, RngState

__all__ = [
    "STICK_LAYOUT",
    "StickFigureParams",
    "OccludedSample",
    "generate_dataset",
    "occlude_test_set",
    "TinyRegressor",
    "TrainSettings",
    "RunCurves",
    "train",
    "pck",
    "toy_schedule",
    "toy_experiment",
    "bench_aid_config",
    "BenchSettings",
    "run_experiments",
]

STICK_LAYOUT = KeypointLayout(
    "stick5",
    ("head", "left_elbow", "right_elbow", "left_hand", "right_hand"),
    ((1, 2), (3, 4)),
)


@dataclass(frozen=True)
class StickFigureParams:
    """Geometry and appearance knobs for the procedural figures.

    Angles are radians in image coordinates (x right, y down, 0 = +x).
    Left-side limbs point down-left, right-side limbs down-right, so the
    sides are geometrically distinct and flip pairs are meaningful.
    """

    image_size: int = 48
    upper_len: tuple[float, float] = (10.0, 14.0)
    fore_len: tuple[float, float] = (10.0, 14.0)
    left_angle: tuple[float, float] = (math.radians(110), math.radians(160))
    right_angle: tuple[float, float] = (math.radians(20), math.radians(70))
    elbow_bend: tuple[float, float] = (math.radians(-60), math.radians(60))
    blob_radius: tuple[float, ...] = (2.2, 1.7, 1.7, 1.5, 1.5)
    blob_intensity: tuple[float, ...] = (200.0, 170.0, 170.0, 160.0, 160.0)
    line_intensity: float = 90.0
    background_level: float = 18.0
    noise_std: float = 8.0
    occluder_size: tuple[int, int] = (4, 9)
    margin: float = 2.0
    rejection_budget: int = 100

    def __post_init__(self) -> None:
        if self.image_size < 16:
            raise ValueError("image_size must be at least 16")
        if len(self.blob_radius) != 5 or len(self.blob_intensity) != 5:
            raise ValueError("blob parameters are per keypoint (5 values)")


@dataclass(frozen=True)
class OccludedSample:
    """A test sample plus flags marking which keypoints were covered."""

    image: np.ndarray
    instance: KeypointInstance
    occluded: np.ndarray

    def __post_init__(self) -> None:
        flags = np.asarray(self.occluded, dtype=bool)
        flags.flags.writeable = False
        object.__setattr__(self, "occluded", flags)


def _sample_skeleton(gen: np.random.Generator, p: StickFigureParams) -> np.ndarray:
    """Five (x, y) keypoints; raises after the rejection budget is spent."""
    s = p.image_size
    lo, hi = p.margin, s - 1 - p.margin
    for _ in range(p.rejection_budget):
        head = np.array(
            [gen.uniform(0.30 * s, 0.70 * s), gen.uniform(0.18 * s, 0.40 * s)]
        )
        pts = [head]
        ok = True
        for angle_range in (p.left_angle, p.right_angle):
            phi = gen.uniform(*angle_range)
            upper = gen.uniform(*p.upper_len)
            elbow = head + upper * np.array([math.cos(phi), math.sin(phi)])
            psi = phi + gen.uniform(*p.elbow_bend)
            fore = gen.uniform(*p.fore_len)
            hand = elbow + fore * np.array([math.cos(psi), math.sin(psi)])
            pts.extend([elbow, hand])
        # Order: head, left elbow, right elbow, left hand, right hand.
        pts = [pts[0], pts[1], pts[3], pts[2], pts[4]]
        for q in pts:
            if not (lo <= q[0] <= hi and lo <= q[1] <= hi):
                ok = False
                break
        if ok:
            return np.array(pts)
    raise RuntimeError(
        "could not fit a figure inside the image within the rejection budget; "
        "reduce limb lengths or margins"
    )


def _draw_line(img: np.ndarray, a: np.ndarray, b: np.ndarray, intensity: float) -> None:
    n = max(2, int(np.ceil(np.linalg.norm(b - a) * 2)) + 1)
    ts = np.linspace(0.0, 1.0, n)
    xs = np.rint(a[0] + (b[0] - a[0]) * ts).astype(int)
    ys = np.rint(a[1] + (b[1] - a[1]) * ts).astype(int)
    h, w = img.shape
    keep = (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
    img[ys[keep], xs[keep]] = np.maximum(img[ys[keep], xs[keep]], intensity)


def _add_blob(img: np.ndarray, center: np.ndarray, radius: float, intensity: float) -> None:
    h, w = img.shape
    cx, cy = center
    r = int(math.ceil(3 * radius))
    x0, x1 = max(int(cx) - r, 0), min(int(cx) + r + 1, w)
    y0, y1 = max(int(cy) - r, 0), min(int(cy) + r + 1, h)
    if x0 >= x1 or y0 >= y1:
        return
    xs = np.arange(x0, x1, dtype=np.float64)
    ys = np.arange(y0, y1, dtype=np.float64)
    d2 = (xs[None, :] - cx) ** 2 + (ys[:, None] - cy) ** 2
    img[y0:y1, x0:x1] += intensity * np.exp(-d2 / (2.0 * radius * radius))


def _render_figure(gen: np.random.Generator, pts: np.ndarray, p: StickFigureParams) -> np.ndarray:
    s = p.image_size
    img = p.background_level + gen.normal(0.0, p.noise_std, size=(s, s))
    head, le, re_, lh, rh = pts
    for a, b in ((head, le), (le, lh), (head, re_), (re_, rh)):
        _draw_line(img, a, b, p.line_intensity)
    for i, q in enumerate(pts):
        _add_blob(img, q, p.blob_radius[i], p.blob_intensity[i])
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def generate_dataset(
    rng: RngState, n: int, p: StickFigureParams | None = None
) -> list[tuple[np.ndarray, KeypointInstance]]:
    """Draw ``n`` figures; all keypoints are labeled visible."""
    if n < 1:
        raise ValueError("n must be >= 1")
    p = p if p is not None else StickFigureParams()
    out = []
    for i in range(n):
        gen = rng.fork(f"sample{i}").generator()
        pts = _sample_skeleton(gen, p)
        img = _render_figure(gen, pts, p)
        kp = np.column_stack([pts, np.full(5, 2.0)])
        x0, y0 = pts.min(axis=0)
        x1, y1 = pts.max(axis=0)
        inst = KeypointInstance(
            kp,
            (float(x0), float(y0), float(x1 - x0 + 1), float(y1 - y0 + 1)),
            float((x1 - x0 + 1) * (y1 - y0 + 1)),
            STICK_LAYOUT,
        )
        out.append((img, inst))
    return out


def occlude_test_set(
    rng: RngState,
    samples: list[tuple[np.ndarray, KeypointInstance]],
    rate: float,
    p: StickFigureParams | None = None,
) -> list[OccludedSample]:
    """Paste background-like patches over a fraction ``rate`` of keypoints.

    Annotations are unchanged; covered keypoints still count in evaluation.
    """
    if not 0 <= rate <= 1:
        raise ValueError("rate must lie in [0, 1]")
    p = p if p is not None else StickFigureParams()
    out = []
    for i, (img, inst) in enumerate(samples):
        gen = rng.fork(f"occlude{i}").generator()
        canvas = img.astype(np.float64)
        h, w = canvas.shape
        flags = np.zeros(inst.layout.num_keypoints, dtype=bool)
        for k, (x, y, v) in enumerate(inst.keypoints):
            if gen.random() >= rate:
                continue
            flags[k] = True
            side = int(gen.integers(p.occluder_size[0], p.occluder_size[1] + 1))
            cx, cy = int(np.rint(x)), int(np.rint(y))
            x0, x1 = max(cx - side // 2, 0), min(cx - side // 2 + side, w)
            y0, y1 = max(cy - side // 2, 0), min(cy - side // 2 + side, h)
            patch = p.background_level + gen.normal(
                0.0, p.noise_std, size=(y1 - y0, x1 - x0)
            )
            canvas[y0:y1, x0:x1] = patch
        out.append(
            OccludedSample(np.clip(np.rint(canvas), 0, 255).astype(np.uint8), inst, flags)
        )
    return out


# ---------------------------------------------------------------------------
# Tiny heatmap regressor: numpy conv net with explicit backprop.


def _im2col(x: np.ndarray, k: int, stride: int, pad: int) -> tuple[np.ndarray, tuple[int, int]]:
    n, c, h, w = x.shape
    out_h = (h + 2 * pad - k) // stride + 1
    out_w = (w + 2 * pad - k) // stride + 1
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    cols = np.empty((n, c, k, k, out_h, out_w), dtype=x.dtype)
    for i in range(k):
        for j in range(k):
            cols[:, :, i, j] = xp[:, :, i:i + stride * out_h:stride, j:j + stride * out_w:stride]
    return cols.reshape(n, c * k * k, out_h * out_w), (out_h, out_w)


def _col2im(
    cols: np.ndarray, out_shape: tuple[int, int, int, int], k: int, stride: int, pad: int
) -> np.ndarray:
    n, c, h, w = out_shape
    in_h = (h + 2 * pad - k) // stride + 1
    in_w = (w + 2 * pad - k) // stride + 1
    cols = cols.reshape(n, c, k, k, in_h, in_w)
    xp = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=cols.dtype)
    for i in range(k):
        for j in range(k):
            xp[:, :, i:i + stride * in_h:stride, j:j + stride * in_w:stride] += cols[:, :, i, j]
    return xp[:, :, pad:pad + h, pad:pad + w]


class TinyRegressor:
    """Small fixed-architecture heatmap regressor.

    Trunk: two stride-2 3x3 convolutions and one stride-1 3x3 convolution
    (ReLU after each), then a stride-2 4x4 transposed convolution emitting
    one map per keypoint at half the input resolution. ``param_count``
    reports the exact parameter total. Training runs in float32 by default;
    pass ``dtype=np.float64`` for numerical checks (finite differences need
    the extra precision).
    """

    CHANNELS = (12, 24, 24)
    OUTPUT_STRIDE = 2

    def __init__(
        self,
        rng: RngState,
        num_keypoints: int,
        image_size: int = 48,
        dtype: np.dtype = np.float32,
    ):
        if image_size % 4 != 0:
            raise ValueError("image_size must be divisible by 4")
        self.num_keypoints = num_keypoints
        self.image_size = image_size
        self.dtype = np.dtype(dtype)
        c1, c2, c3 = self.CHANNELS
        gen = rng.fork("init").generator()

        def he(shape, fan_in):
            # Draw in float64 for a dtype-independent stream, then cast.
            return gen.normal(0.0, math.sqrt(2.0 / fan_in), size=shape).astype(self.dtype)

        self.params: dict[str, np.ndarray] = {
            "W1": he((c1, 1 * 3 * 3), 9),
            "b1": np.zeros(c1, dtype=self.dtype),
            "W2": he((c2, c1 * 3 * 3), c1 * 9),
            "b2": np.zeros(c2, dtype=self.dtype),
            "W3": he((c3, c2 * 3 * 3), c2 * 9),
            "b3": np.zeros(c3, dtype=self.dtype),
            "W4": he((c3, num_keypoints * 4 * 4), c3 * 16),
            "b4": np.zeros(num_keypoints, dtype=self.dtype),
        }

    @property
    def param_count(self) -> int:
        return sum(v.size for v in self.params.values())

    def _forward(self, x: np.ndarray):
        p = self.params
        x = np.ascontiguousarray(x, dtype=self.dtype)
        caches = {}
        cols1, (h1, w1) = _im2col(x, 3, 2, 1)
        z1 = p["W1"] @ cols1 + p["b1"][None, :, None]
        a1 = np.maximum(z1, 0.0)
        caches["1"] = (cols1, z1, x.shape)
        a1m = a1.reshape(x.shape[0], -1, h1, w1)

        cols2, (h2, w2) = _im2col(a1m, 3, 2, 1)
        z2 = p["W2"] @ cols2 + p["b2"][None, :, None]
        a2 = np.maximum(z2, 0.0)
        caches["2"] = (cols2, z2, a1m.shape)
        a2m = a2.reshape(x.shape[0], -1, h2, w2)

        cols3, (h3, w3) = _im2col(a2m, 3, 1, 1)
        z3 = p["W3"] @ cols3 + p["b3"][None, :, None]
        a3 = np.maximum(z3, 0.0)
        caches["3"] = (cols3, z3, a2m.shape)

        # Transposed convolution: scatter each trunk cell's 4x4 footprint.
        xf = a3  # (n, c3, h3*w3)
        cols4 = np.matmul(p["W4"].T[None], xf)
        out_h, out_w = h3 * 2, w3 * 2
        y = _col2im(
            cols4, (x.shape[0], self.num_keypoints, out_h, out_w), 4, 2, 1
        ) + p["b4"][None, :, None, None]
        caches["4"] = (xf, (h3, w3))
        return y, caches

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Heatmaps of shape (N, K, H/2, W/2) for inputs (N, 1, H, W)."""
        y, _ = self._forward(x)
        return y

    def loss(self, x: np.ndarray, targets: np.ndarray) -> float:
        pred, _ = self._forward(x)
        return float(np.mean((pred - np.asarray(targets, dtype=self.dtype)) ** 2))

    def loss_and_grads(self, x: np.ndarray, targets: np.ndarray):
        p = self.params
        pred, caches = self._forward(x)
        diff = pred - np.asarray(targets, dtype=self.dtype)
        loss = float(np.mean(diff ** 2))
        dy = (2.0 / diff.size) * diff

        grads: dict[str, np.ndarray] = {}
        xf, (h3, w3) = caches["4"]
        n = x.shape[0]
        dcols4, _ = _im2col(dy, 4, 2, 1)
        grads["b4"] = dy.sum(axis=(0, 2, 3))
        grads["W4"] = np.matmul(xf, dcols4.transpose(0, 2, 1)).sum(axis=0)
        da3 = np.matmul(p["W4"][None], dcols4)

        cols3, z3, shape2 = caches["3"]
        dz3 = da3 * (z3 > 0)
        grads["b3"] = dz3.sum(axis=(0, 2))
        grads["W3"] = np.matmul(dz3, cols3.transpose(0, 2, 1)).sum(axis=0)
        dcols3 = np.matmul(p["W3"].T[None], dz3)
        da2 = _col2im(dcols3, shape2, 3, 1, 1).reshape(n, shape2[1], -1)

        cols2, z2, shape1 = caches["2"]
        dz2 = da2 * (z2 > 0)
        grads["b2"] = dz2.sum(axis=(0, 2))
        grads["W2"] = np.matmul(dz2, cols2.transpose(0, 2, 1)).sum(axis=0)
        dcols2 = np.matmul(p["W2"].T[None], dz2)
        da1 = _col2im(dcols2, shape1, 3, 2, 1).reshape(n, shape1[1], -1)

        cols1, z1, _ = caches["1"]
        dz1 = da1 * (z1 > 0)
        grads["b1"] = dz1.sum(axis=(0, 2))
        grads["W1"] = np.matmul(dz1, cols1.transpose(0, 2, 1)).sum(axis=0)
        return loss, grads

    def get_flat_params(self) -> np.ndarray:
        return np.concatenate([self.params[k].ravel() for k in sorted(self.params)])

    def set_flat_params(self, flat: np.ndarray) -> None:
        pos = 0
        for k in sorted(self.params):
            size = self.params[k].size
            chunk = flat[pos:pos + size].reshape(self.params[k].shape)
            self.params[k] = chunk.astype(self.dtype)
            pos += size
        if pos != flat.size:
            raise ValueError("flat parameter vector has the wrong length")

    def flat_grads(self, grads: dict[str, np.ndarray]) -> np.ndarray:
        return np.concatenate([grads[k].ravel() for k in sorted(grads)])


@dataclass(frozen=True)
class TrainSettings:
    batch_size: int = 32
    momentum: float = 0.9
    lr_scale: float = 1.0
    heatmap_sigma: float = 1.5
    pck_threshold: float = 0.1
    flip_prob: float = 0.5
    # Cap on trained epochs; plans cannot express zero epochs, this can.
    epochs: int | None = None


@dataclass
class RunCurves:
    """Per-epoch training loss and test accuracy for one run."""

    experiment_id: str
    seed: int
    train_loss: np.ndarray
    test_pck: np.ndarray
    test_pck_occluded: np.ndarray
    lr: np.ndarray
    aid_on: np.ndarray

    def rows(self) -> list[dict]:
        out = []
        for e in range(len(self.train_loss)):
            out.append(
                {
                    "experiment": self.experiment_id,
                    "seed": self.seed,
                    "epoch": e,
                    "lr": float(self.lr[e]),
                    "aid_on": int(self.aid_on[e]),
                    "train_loss": float(self.train_loss[e]),
                    "test_pck": float(self.test_pck[e]),
                    "test_pck_occluded": float(self.test_pck_occluded[e]),
                }
            )
        return out


def _flip_sample(img: np.ndarray, inst: KeypointInstance) -> tuple[np.ndarray, KeypointInstance]:
    w = img.shape[1]
    kp = inst.keypoints.copy()
    kp[:, 0] = (w - 1) - kp[:, 0]
    kp = kp[inst.layout.flip_permutation()]
    return img[:, ::-1].copy(), inst.with_keypoints(kp)


def _render_target(inst: KeypointInstance, size: int, sigma: float) -> np.ndarray:
    half = size // 2
    return render_heatmaps(inst, (half, half), stride=2.0, sigma=sigma).maps


def _dataset_fill(samples: list[tuple[np.ndarray, KeypointInstance]]) -> FillPolicy:
    mean = float(np.mean([img.mean() for img, _ in samples]))
    return FillPolicy.dataset_mean((mean,))


def pck(
    model: TinyRegressor,
    test_set: list[OccludedSample],
    threshold_frac: float = 0.1,
) -> tuple[float, float | None]:
    """Fraction of labeled keypoints decoded within a diagonal fraction.

    Returns (overall, occluded-only); the occluded figure is None when no
    keypoint is flagged.
    """
    if not test_set:
        raise ValueError("empty test set")
    size = test_set[0].image.shape[0]
    diag = math.hypot(size, size)
    threshold = threshold_frac * diag

    x = np.stack([s.image for s in test_set]).astype(np.float64)[:, None] / 255.0
    preds = model.forward(x)
    total = correct = 0
    occ_total = occ_correct = 0
    for i, sample in enumerate(test_set):
        stack = HeatmapStack(preds[i], float(model.OUTPUT_STRIDE), 1.0)
        decoded = decode_heatmap(stack)
        for k, (gx, gy, v) in enumerate(sample.instance.keypoints):
            if v <= 0:
                continue
            err = math.hypot(decoded[k, 0] - gx, decoded[k, 1] - gy)
            hit = err <= threshold
            total += 1
            correct += hit
            if sample.occluded[k]:
                occ_total += 1
                occ_correct += hit
    overall = correct / total
    occluded = occ_correct / occ_total if occ_total else None
    return overall, occluded


def train(
    cfg: ExperimentConfig,
    train_samples: list[tuple[np.ndarray, KeypointInstance]],
    test_set: list[OccludedSample],
    aid: AidConfig,
    rng: RngState,
    settings: TrainSettings = TrainSettings(),
) -> tuple[TinyRegressor, RunCurves]:
    """SGD + momentum training under the experiment's plan.

    ``aid_active(cfg, epoch)`` gates mask sampling; masks touch only the
    input pixels while the target heatmaps always come from the unaltered
    annotations. Flips are the only geometric augmentation here. Aborts on a
    non-finite loss with the epoch index.
    """
    size = train_samples[0][0].shape[0]
    k = train_samples[0][1].layout.num_keypoints
    model = TinyRegressor(rng.fork("model"), k, size)

    if aid.method != "none" and aid.fill.mode == "dataset-mean" and aid.fill.values is None:
        aid = aid.with_fill(_dataset_fill(train_samples))

    # Precompute both flip orientations once; per-epoch draws just index.
    images = [[], []]
    targets = [[], []]
    for img, inst in train_samples:
        fimg, finst = _flip_sample(img, inst)
        images[0].append(img)
        images[1].append(fimg)
        targets[0].append(_render_target(inst, size, settings.heatmap_sigma))
        targets[1].append(_render_target(finst, size, settings.heatmap_sigma))
    images = [np.stack(v) for v in images]
    targets = [np.stack(v).astype(model.dtype) for v in targets]

    plan = cfg.plan
    epochs = plan.total_epochs if settings.epochs is None else min(settings.epochs, plan.total_epochs)
    n = len(train_samples)
    velocity = {key: np.zeros_like(val) for key, val in model.params.items()}
    curves = RunCurves(
        cfg.id,
        rng.seed,
        train_loss=np.zeros(epochs),
        test_pck=np.zeros(epochs),
        test_pck_occluded=np.zeros(epochs),
        lr=np.zeros(epochs),
        aid_on=np.zeros(epochs, dtype=bool),
    )

    for epoch in range(epochs):
        lr = plan.lr_at(epoch) * settings.lr_scale
        aid_on = aid_active(cfg, epoch)
        epoch_rng = rng.fork(f"epoch{epoch}")
        order = epoch_rng.fork("shuffle").generator().permutation(n)

        batch_losses = []
        for start in range(0, n, settings.batch_size):
            idx = order[start:start + settings.batch_size]
            xs = np.empty((len(idx), 1, size, size), dtype=model.dtype)
            ys = np.empty((len(idx), k, size // 2, size // 2), dtype=model.dtype)
            for row, i in enumerate(idx):
                sample_rng = epoch_rng.fork(f"sample{i}")
                side = int(sample_rng.generator().random() < settings.flip_prob)
                img = images[side][i]
                if aid_on:
                    mask = sample_mask(sample_rng.fork("aid"), size, size, aid)
                    if mask.any():
                        img = apply_mask(img, mask, aid.fill)
                xs[row, 0] = img / 255.0
                ys[row] = targets[side][i]
            loss, grads = model.loss_and_grads(xs, ys)
            if not math.isfinite(loss):
                raise RuntimeError(f"training diverged at epoch {epoch}")
            if lr > 0:
                for key in model.params:
                    velocity[key] = settings.momentum * velocity[key] - lr * grads[key]
                    model.params[key] = model.params[key] + velocity[key]
            batch_losses.append(loss)

        overall, occluded = pck(model, test_set, settings.pck_threshold)
        curves.train_loss[epoch] = float(np.mean(batch_losses))
        curves.test_pck[epoch] = overall
        curves.test_pck_occluded[epoch] = occluded if occluded is not None else np.nan
        curves.lr[epoch] = lr
        curves.aid_on[epoch] = aid_on
    return model, curves


# ---------------------------------------------------------------------------
# Desk-scale schedule variants: same proportional structure, 30/60 epochs.

TOY_BASE_LR = 0.7


def toy_schedule(name: str, aid_mode: str, base_lr: float = TOY_BASE_LR) -> SchedulePlan:
    """30/60-epoch analogues of S1/S2/S3 with x0.1 drops.

    toy-S1 runs 30 epochs with drops at 24 and 28 (the long plans' 170/210
    and 200/210 proportions); toy-S2 runs 60 with the same tail lengths
    (drops at 54 and 58); toy-S3 repeats toy-S1 twice with dropping enabled
    in the second pass.
    """
    lr1, lr2, lr3 = base_lr, base_lr / 10, base_lr / 100
    if name == "S1":
        if aid_mode == "off_on":
            raise ValueError("toy S1 does not switch aid mid-run")
        return SchedulePlan(
            30,
            ((0, lr1), (24, lr2), (28, lr3)),
            ((0, aid_mode == "on"),),
        )
    if name == "S2":
        if aid_mode == "off_on":
            raise ValueError("toy S2 does not switch aid mid-run")
        return SchedulePlan(
            60,
            ((0, lr1), (54, lr2), (58, lr3)),
            ((0, aid_mode == "on"),),
        )
    if name == "S3":
        if aid_mode != "off_on":
            raise ValueError("toy S3 is defined as off-then-on")
        return SchedulePlan(
            60,
            ((0, lr1), (24, lr2), (28, lr3), (30, lr1), (54, lr2), (58, lr3)),
            ((0, False), (30, True)),
        )
    raise ValueError(f"unknown schedule {name!r}")


def toy_experiment(exp_id: str, base_lr: float = TOY_BASE_LR) -> ExperimentConfig:
    from .schedule import EXPERIMENT_TABLE

    name, mode = EXPERIMENT_TABLE[exp_id]
    return ExperimentConfig(exp_id, toy_schedule(name, mode, base_lr))


def bench_aid_config(image_size: int = 48) -> AidConfig:
    """The benchmark's dropping config: grid-patch dropping, tuned strong.

    Patch dropping suits the full-image (bottom-up style) bench; the high
    rate is what makes the schedule ablation separate cleanly at this tiny
    scale.
    """
    from .masking import HasParams

    return AidConfig("has", HasParams(4, 4, 0.45, FillPolicy()), 0.85)


@dataclass(frozen=True)
class BenchSettings:
    train_n: int = 384
    test_n: int = 160
    occlusion_rate: float = 0.5
    base_lr: float = TOY_BASE_LR


def run_experiments(
    experiment_ids: list[str],
    seeds: list[int],
    aid: AidConfig | None = None,
    settings: BenchSettings = BenchSettings(),
    figure_params: StickFigureParams | None = None,
) -> list[RunCurves]:
    """Train every (experiment, seed) pair on that seed's dataset.

    Experiments with dropping off train with no masking; E5 switches it on
    mid-run via its plan. Within a seed every experiment shares the same
    data, model init, batch order and mask draws (common random numbers),
    so matched-epoch comparisons isolate the schedule/dropping variable.
    Returns one RunCurves per pair, in (seed-major, experiment-minor) order.
    """
    p = figure_params if figure_params is not None else StickFigureParams()
    out = []
    for seed in seeds:
        rng = RngState(seed)
        data = generate_dataset(rng.fork("train"), settings.train_n, p)
        test = occlude_test_set(
            rng.fork("occlude"),
            generate_dataset(rng.fork("test"), settings.test_n, p),
            settings.occlusion_rate,
            p,
        )
        aid_cfg = aid if aid is not None else bench_aid_config(p.image_size)
        for exp_id in experiment_ids:
            cfg = toy_experiment(exp_id, settings.base_lr)
            _, curves = train(cfg, data, test, aid_cfg, rng.fork("run"))
            out.append(curves)
    return out
