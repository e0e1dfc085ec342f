"""Equalize the regularization strength of dropping methods.

Different mask families at their default knobs perturb training unequally.
This module adjusts each method's primary intensity knob (cutout hole size,
erase area midpoint, patch drop probability, gridmask square ratio) by
bisection until its probe loss matches a reference config's within a
relative tolerance.

The probe: a fixed-seed regressor is first warmed up on the clean probe set
so that it extracts appearance features at all (a freshly initialized net is
equally bad on masked and unmasked pixels, which would make every config
look alike); the probe loss is then the mean training loss over the first
epoch of masked training from that state. Identical random streams are used
for every candidate knob value, so the probe loss is a smooth monotone
function of intensity and bisection is stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .bench import TinyRegressor
from .masking import (
    AidConfig,
    CutoutParams,
    GridMaskParams,
    HasParams,
    RandomEraseParams,
    apply_mask,
    sample_mask,
)
from .targets import render_heatmaps
from .types import KeypointInstance, RngState

__all__ = ["CalibrationSettings", "CalibrationResult", "probe_loss", "calibrate"]


@dataclass(frozen=True)
class CalibrationSettings:
    warmup_epochs: int = 12
    measure_epochs: int = 1
    batch_size: int = 32
    lr: float = 0.7
    momentum: float = 0.9
    heatmap_sigma: float = 1.5
    tolerance: float = 0.02
    max_iterations: int = 14


@dataclass(frozen=True)
class CalibrationResult:
    config: AidConfig
    achieved_loss: float
    target_loss: float
    reached: bool
    note: str = ""

    @property
    def relative_error(self) -> float:
        return abs(self.achieved_loss - self.target_loss) / self.target_loss


class _ProbeHarness:
    """Shared warm-up plus per-config one-epoch loss measurement."""

    def __init__(
        self,
        probe_set: list[tuple[np.ndarray, KeypointInstance]],
        rng: RngState,
        settings: CalibrationSettings,
    ):
        self.settings = settings
        self.rng = rng
        self.size = probe_set[0][0].shape[0]
        k = probe_set[0][1].layout.num_keypoints
        self.images = np.stack([img for img, _ in probe_set])
        self.fill_mean = float(self.images.mean())
        self.model = TinyRegressor(rng.fork("probe-model"), k, self.size)
        half = self.size // 2
        self.targets = np.stack(
            [
                render_heatmaps(inst, (half, half), 2.0, settings.heatmap_sigma).maps
                for _, inst in probe_set
            ]
        ).astype(self.model.dtype)
        self._warm_params = self._warm_up()

    def _sgd_epochs(self, params, epochs: int, stream: str, aid: AidConfig | None):
        s = self.settings
        model = self.model
        model.params = {key: val.copy() for key, val in params.items()}
        velocity = {key: np.zeros_like(val) for key, val in model.params.items()}
        n = self.images.shape[0]
        losses = []
        for epoch in range(epochs):
            order = self.rng.fork(f"{stream}/order{epoch}").generator().permutation(n)
            for start in range(0, n, s.batch_size):
                idx = order[start:start + s.batch_size]
                xs = np.empty((len(idx), 1, self.size, self.size), dtype=model.dtype)
                for row, i in enumerate(idx):
                    img = self.images[i]
                    if aid is not None and aid.method != "none":
                        mask = sample_mask(
                            self.rng.fork(f"{stream}/mask/e{epoch}/i{i}"),
                            self.size, self.size, aid,
                        )
                        if mask.any():
                            img = apply_mask(img, mask, aid.fill)
                    xs[row, 0] = img / 255.0
                loss, grads = model.loss_and_grads(xs, self.targets[idx])
                losses.append(loss)
                for key in model.params:
                    velocity[key] = s.momentum * velocity[key] - s.lr * grads[key]
                    model.params[key] = model.params[key] + velocity[key]
        return losses, model.params

    def _warm_up(self):
        _, params = self._sgd_epochs(
            self.model.params, self.settings.warmup_epochs, "warmup", None
        )
        return params

    def loss_for(self, aid: AidConfig) -> float:
        if aid.method != "none" and aid.fill.mode == "dataset-mean" and aid.fill.values is None:
            aid = aid.with_fill(replace(aid.fill, values=(self.fill_mean,)))
        losses, _ = self._sgd_epochs(
            self._warm_params, self.settings.measure_epochs, "measure", aid
        )
        return float(np.mean(losses))


def probe_loss(
    aid: AidConfig,
    probe_set: list[tuple[np.ndarray, KeypointInstance]],
    rng: RngState,
    settings: CalibrationSettings = CalibrationSettings(),
) -> float:
    """Probe loss of one config (builds its own warm-up; see module doc)."""
    return _ProbeHarness(probe_set, rng, settings).loss_for(aid)


def _knob_bounds(cfg: AidConfig) -> tuple[float, float]:
    if cfg.method == "cutout":
        return 0.02, 0.95  # hole side as a fraction of the short image side
    if cfg.method == "random-erase":
        return 0.01, 0.6  # area-fraction midpoint
    if cfg.method == "has":
        return 0.01, 1.0  # per-patch drop probability
    if cfg.method == "gridmask":
        d_max = cfg.params.period_range[1]
        return 0.01, min(0.95, 1.0 - 1.0 / (2.0 * d_max) - 1e-6)
    raise ValueError(f"method {cfg.method!r} has no intensity knob")


def _with_knob(cfg: AidConfig, knob: float, image_size: int) -> AidConfig:
    p = cfg.params
    if cfg.method == "cutout":
        side = max(1, int(np.rint(knob * image_size)))
        new = CutoutParams(p.num_holes, side, side, p.fill)
    elif cfg.method == "random-erase":
        lo = max(0.004, knob * 0.5)
        hi = min(1.0, knob * 1.5)
        new = RandomEraseParams((lo, max(hi, lo)), p.aspect_range, p.fill)
    elif cfg.method == "has":
        new = HasParams(p.grid_rows, p.grid_cols, float(knob), p.fill)
    else:
        new = GridMaskParams(p.period_range, float(knob), p.rotate_max_deg, p.fill)
    return AidConfig(cfg.method, new, cfg.apply_prob)


def calibrate(
    configs: list[AidConfig],
    probe_set: list[tuple[np.ndarray, KeypointInstance]],
    rng: RngState,
    settings: CalibrationSettings = CalibrationSettings(),
) -> list[CalibrationResult]:
    """Adjust every config after the first to match the first's probe loss.

    The first config is the reference and is returned unchanged. A config
    whose loss cannot be brought inside the tolerance within its knob
    bounds is returned at the nearest achievable setting with
    ``reached=False``; "none" has no knob at all, so it can only match a
    dropping reference if it is already within tolerance.
    """
    if not configs:
        raise ValueError("need at least one config")
    harness = _ProbeHarness(probe_set, rng, settings)
    size = harness.size
    target = harness.loss_for(configs[0])
    results = [CalibrationResult(configs[0], target, target, True, "reference")]
    tol = settings.tolerance

    for cfg in configs[1:]:
        current = harness.loss_for(cfg)
        if cfg.method == "none" and configs[0].method != "none":
            # No knob to move: dropping strictly raises the probe loss, so an
            # all-keep config cannot track a dropping reference.
            results.append(
                CalibrationResult(
                    cfg, current, target, False,
                    "unreachable: all-keep config has no intensity knob and "
                    "dropping strictly raises the probe loss",
                )
            )
            continue
        if abs(current - target) <= tol * target:
            results.append(
                CalibrationResult(cfg, current, target, True, "already within tolerance")
            )
            continue

        lo, hi = _knob_bounds(cfg)
        lo_loss = harness.loss_for(_with_knob(cfg, lo, size))
        hi_loss = harness.loss_for(_with_knob(cfg, hi, size))
        if target < lo_loss and abs(lo_loss - target) > tol * target:
            results.append(
                CalibrationResult(
                    _with_knob(cfg, lo, size), lo_loss, target, False,
                    "target below the weakest achievable intensity",
                )
            )
            continue
        if target > hi_loss and abs(hi_loss - target) > tol * target:
            results.append(
                CalibrationResult(
                    _with_knob(cfg, hi, size), hi_loss, target, False,
                    "target above the strongest achievable intensity",
                )
            )
            continue

        best = (math.inf, cfg, current)
        for _ in range(settings.max_iterations):
            mid = (lo + hi) / 2.0
            candidate = _with_knob(cfg, mid, size)
            loss = harness.loss_for(candidate)
            err = abs(loss - target)
            if err < best[0]:
                best = (err, candidate, loss)
            if err <= tol * target:
                break
            if loss < target:
                lo = mid
            else:
                hi = mid
        err, candidate, loss = best
        results.append(
            CalibrationResult(
                candidate, loss, target, err <= tol * target,
                "" if err <= tol * target else "bisection exhausted; nearest achievable",
            )
        )
    return results
