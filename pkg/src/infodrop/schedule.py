"""Training schedule plans: step-decay learning rates plus a dropping-on flag.

Three named schedules are provided. S1 is the common 210-epoch plan (base
lr 1e-3, dropped to 1e-4 at epoch 170 and 1e-5 at epoch 200). S2 doubles
it: 420 epochs with drops at 380 and 410. S3 runs S1's lr profile twice
back to back, with information dropping off for the first 210 epochs and on
afterwards. Epoch indices are 0-based: "dropped at epoch 170" means epoch
170 is the first epoch at the lower rate.

The five ablation configurations pair schedules with the dropping flag:
E1 = S1/off, E2 = S1/on, E3 = S2/off, E4 = S2/on, E5 = S3/off-then-on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

__all__ = [
    "SchedulePlan",
    "ExperimentConfig",
    "build_schedule",
    "experiment",
    "aid_active",
    "SCHEDULE_NAMES",
    "EXPERIMENT_TABLE",
]

SCHEDULE_NAMES = ("S1", "S2", "S3")
AID_MODES = ("off", "on", "off_on")

# Experiment id -> (schedule name, aid mode).
EXPERIMENT_TABLE = {
    "E1": ("S1", "off"),
    "E2": ("S1", "on"),
    "E3": ("S2", "off"),
    "E4": ("S2", "on"),
    "E5": ("S3", "off_on"),
}


@dataclass(frozen=True)
class SchedulePlan:
    """Piecewise-constant lr segments plus per-epoch dropping-active segments.

    Segments are ``(start_epoch, value)`` pairs covering ``[0, total_epochs)``
    with strictly increasing starts beginning at 0; lr values are positive.
    (S1 and S2 decay monotonically; S3 restarts its profile halfway, so
    monotonicity is not a type invariant.)
    """

    total_epochs: int
    lr_segments: tuple[tuple[int, float], ...]
    aid_segments: tuple[tuple[int, bool], ...]

    def __post_init__(self) -> None:
        if self.total_epochs < 1:
            raise ValueError("total_epochs must be >= 1")
        for name, segs in (("lr", self.lr_segments), ("aid", self.aid_segments)):
            if not segs or segs[0][0] != 0:
                raise ValueError(f"{name} segments must start at epoch 0")
            starts = [s for s, _ in segs]
            if any(b <= a for a, b in zip(starts, starts[1:])):
                raise ValueError(f"{name} segment starts must strictly increase")
            if starts[-1] >= self.total_epochs:
                raise ValueError(f"{name} segment starts beyond total_epochs")
        if any(v <= 0 for _, v in self.lr_segments):
            raise ValueError("lr values must be strictly positive")
        object.__setattr__(
            self, "lr_segments", tuple((int(s), float(v)) for s, v in self.lr_segments)
        )
        object.__setattr__(
            self, "aid_segments", tuple((int(s), bool(v)) for s, v in self.aid_segments)
        )

    def _check_epoch(self, epoch: int) -> None:
        if not 0 <= epoch < self.total_epochs:
            raise ValueError(f"epoch {epoch} outside [0, {self.total_epochs})")

    def lr_at(self, epoch: int) -> float:
        self._check_epoch(epoch)
        value = self.lr_segments[0][1]
        for start, lr in self.lr_segments:
            if epoch >= start:
                value = lr
        return value

    def aid_at(self, epoch: int) -> bool:
        self._check_epoch(epoch)
        value = self.aid_segments[0][1]
        for start, on in self.aid_segments:
            if epoch >= start:
                value = on
        return value

    def to_json(self) -> str:
        return json.dumps(
            {
                "total_epochs": self.total_epochs,
                "lr_segments": [[s, v] for s, v in self.lr_segments],
                "aid_segments": [[s, v] for s, v in self.aid_segments],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "SchedulePlan":
        doc = json.loads(text)
        return cls(
            int(doc["total_epochs"]),
            tuple((int(s), float(v)) for s, v in doc["lr_segments"]),
            tuple((int(s), bool(v)) for s, v in doc["aid_segments"]),
        )

    @classmethod
    def from_json_file(cls, path: str | Path) -> "SchedulePlan":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def _aid_segments(mode: str, total: int, switch: int) -> tuple[tuple[int, bool], ...]:
    if mode == "off":
        return ((0, False),)
    if mode == "on":
        return ((0, True),)
    return ((0, False), (switch, True))


def build_schedule(name: str, aid_mode: str) -> SchedulePlan:
    """Build one of the named plans.

    S3 runs the dropping augmentation only in its second half, so it forces
    ``aid_mode="off_on"``; S1 and S2 take ``"off"`` or ``"on"``.
    """
    if name not in SCHEDULE_NAMES:
        raise ValueError(f"unknown schedule {name!r}; choose from {SCHEDULE_NAMES}")
    if aid_mode not in AID_MODES:
        raise ValueError(f"unknown aid mode {aid_mode!r}; choose from {AID_MODES}")
    if name == "S3" and aid_mode != "off_on":
        raise ValueError("S3 is defined with aid off for the first half, on after")
    if name != "S3" and aid_mode == "off_on":
        raise ValueError(f"{name} does not switch aid mid-run; use 'off' or 'on'")

    if name == "S1":
        return SchedulePlan(
            210,
            ((0, 1e-3), (170, 1e-4), (200, 1e-5)),
            _aid_segments(aid_mode, 210, 0),
        )
    if name == "S2":
        return SchedulePlan(
            420,
            ((0, 1e-3), (380, 1e-4), (410, 1e-5)),
            _aid_segments(aid_mode, 420, 0),
        )
    # S3: S1's lr profile repeated twice, dropping enabled in the second pass.
    return SchedulePlan(
        420,
        (
            (0, 1e-3),
            (170, 1e-4),
            (200, 1e-5),
            (210, 1e-3),
            (380, 1e-4),
            (410, 1e-5),
        ),
        ((0, False), (210, True)),
    )


@dataclass(frozen=True)
class ExperimentConfig:
    """One ablation configuration: an id E1..E5 and its plan."""

    id: str
    plan: SchedulePlan

    def __post_init__(self) -> None:
        if self.id not in EXPERIMENT_TABLE:
            raise ValueError(f"unknown experiment {self.id!r}")


def experiment(exp_id: str) -> ExperimentConfig:
    name, mode = EXPERIMENT_TABLE[exp_id]
    return ExperimentConfig(exp_id, build_schedule(name, mode))


def aid_active(cfg: ExperimentConfig, epoch: int) -> bool:
    """Whether information dropping runs at this epoch of the experiment."""
    return cfg.plan.aid_at(epoch)
