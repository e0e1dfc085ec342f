"""One YAML config document for the CLI and bindings.

Every field has a default; unknown keys are rejected at every level so
typos fail loudly. Command-line flags override file values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .geometry import GeomConfig
from .masking import (
    AidConfig,
    CutoutParams,
    FillPolicy,
    GridMaskParams,
    HasParams,
    RandomEraseParams,
    default_params,
)

__all__ = [
    "ConfigError",
    "TargetParams",
    "CliConfig",
    "load_config",
    "parse_config",
    "parse_aid_config",
    "aid_config_to_dict",
    "config_to_dict",
]


class ConfigError(ValueError):
    """Bad key or value in a config document."""


@dataclass(frozen=True)
class TargetParams:
    stride: float = 4.0
    sigma: float = 2.0


@dataclass(frozen=True)
class CliConfig:
    seed: int = 0
    aid: AidConfig = field(default_factory=AidConfig)
    geom: GeomConfig = field(default_factory=GeomConfig)
    targets: TargetParams = field(default_factory=TargetParams)
    schedule: str = "S1"
    annotations: str | None = None
    images: str | None = None


def _check_keys(doc: dict, allowed: set[str], context: str) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {context}")


def _parse_fill(doc: dict | str | None) -> FillPolicy:
    if doc is None:
        return FillPolicy()
    if isinstance(doc, str):
        doc = {"mode": doc}
    _check_keys(doc, {"mode", "values"}, "fill")
    values = doc.get("values")
    if values is not None:
        values = tuple(float(v) for v in values)
    try:
        return FillPolicy(doc.get("mode", "dataset-mean"), values)
    except ValueError as e:
        raise ConfigError(str(e)) from e


_METHOD_KEYS = {
    "cutout": {"num_holes", "hole_w", "hole_h"},
    "random-erase": {"area_frac_range", "aspect_range"},
    "has": {"grid_rows", "grid_cols", "drop_prob"},
    "gridmask": {"period_range", "ratio", "rotate_max_deg"},
}


def parse_aid_config(doc: dict, image_size: tuple[int, int] | None = None) -> AidConfig:
    """Parse the ``aid`` section; method params fall back to size defaults."""
    _check_keys(doc, {"method", "apply_prob", "fill"} | set(_METHOD_KEYS), "aid")
    method = doc.get("method", "none")
    apply_prob = float(doc.get("apply_prob", 0.5))
    fill = _parse_fill(doc.get("fill"))
    try:
        if method == "none":
            return AidConfig("none", None, apply_prob)
        if method not in _METHOD_KEYS:
            raise ConfigError(f"unknown aid method {method!r}")
        section = doc.get(method, {}) or {}
        _check_keys(section, _METHOD_KEYS[method], f"aid.{method}")
        if not section:
            if image_size is None:
                image_size = (256, 256)
            params = default_params(method, image_size[0], image_size[1], fill)
        elif method == "cutout":
            params = CutoutParams(
                int(section.get("num_holes", 1)),
                int(section.get("hole_w", 16)),
                int(section.get("hole_h", 16)),
                fill,
            )
        elif method == "random-erase":
            params = RandomEraseParams(
                tuple(float(v) for v in section.get("area_frac_range", (0.02, 0.4))),
                tuple(float(v) for v in section.get("aspect_range", (0.3, 3.3))),
                fill,
            )
        elif method == "has":
            params = HasParams(
                int(section.get("grid_rows", 4)),
                int(section.get("grid_cols", 4)),
                float(section.get("drop_prob", 0.3)),
                fill,
            )
        else:
            params = GridMaskParams(
                tuple(int(v) for v in section.get("period_range", (8, 16))),
                float(section.get("ratio", 0.4)),
                float(section.get("rotate_max_deg", 0.0)),
                fill,
            )
        return AidConfig(method, params, apply_prob)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _parse_geom(doc: dict) -> GeomConfig:
    _check_keys(
        doc,
        {"flip_prob", "scale_range", "rotation_max_deg", "output_size", "aid_order"},
        "geom",
    )
    base = GeomConfig()
    try:
        return GeomConfig(
            float(doc.get("flip_prob", base.flip_prob)),
            tuple(float(v) for v in doc.get("scale_range", base.scale_range)),
            float(doc.get("rotation_max_deg", base.rotation_max_deg)),
            tuple(int(v) for v in doc.get("output_size", base.output_size)),
            str(doc.get("aid_order", base.aid_order)),
        )
    except ValueError as e:
        raise ConfigError(str(e)) from e


def parse_config(doc: dict | None) -> CliConfig:
    doc = doc or {}
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a mapping")
    _check_keys(
        doc,
        {"seed", "aid", "geom", "targets", "schedule", "annotations", "images"},
        "config",
    )
    targets_doc = doc.get("targets", {}) or {}
    _check_keys(targets_doc, {"stride", "sigma"}, "targets")
    geom = _parse_geom(doc.get("geom", {}) or {})
    aid = parse_aid_config(doc.get("aid", {}) or {}, geom.output_size)
    schedule = str(doc.get("schedule", "S1"))
    if schedule not in ("S1", "S2", "S3"):
        raise ConfigError(f"unknown schedule {schedule!r}")
    return CliConfig(
        seed=int(doc.get("seed", 0)),
        aid=aid,
        geom=geom,
        targets=TargetParams(
            float(targets_doc.get("stride", 4.0)), float(targets_doc.get("sigma", 2.0))
        ),
        schedule=schedule,
        annotations=doc.get("annotations"),
        images=doc.get("images"),
    )


def load_config(path: str | Path | None) -> CliConfig:
    if path is None:
        return CliConfig()
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: {e}") from e
    return parse_config(doc)


def aid_config_to_dict(cfg: AidConfig) -> dict:
    doc: dict = {"method": cfg.method, "apply_prob": cfg.apply_prob}
    if cfg.params is None:
        return doc
    fill = cfg.params.fill
    doc["fill"] = {"mode": fill.mode}
    if fill.values is not None:
        doc["fill"]["values"] = list(fill.values)
    p = cfg.params
    if cfg.method == "cutout":
        doc["cutout"] = {"num_holes": p.num_holes, "hole_w": p.hole_w, "hole_h": p.hole_h}
    elif cfg.method == "random-erase":
        doc["random-erase"] = {
            "area_frac_range": list(p.area_frac_range),
            "aspect_range": list(p.aspect_range),
        }
    elif cfg.method == "has":
        doc["has"] = {
            "grid_rows": p.grid_rows,
            "grid_cols": p.grid_cols,
            "drop_prob": p.drop_prob,
        }
    else:
        doc["gridmask"] = {
            "period_range": list(p.period_range),
            "ratio": p.ratio,
            "rotate_max_deg": p.rotate_max_deg,
        }
    return doc


def config_to_dict(cfg: CliConfig) -> dict:
    return {
        "seed": cfg.seed,
        "aid": aid_config_to_dict(cfg.aid),
        "geom": {
            "flip_prob": cfg.geom.flip_prob,
            "scale_range": list(cfg.geom.scale_range),
            "rotation_max_deg": cfg.geom.rotation_max_deg,
            "output_size": list(cfg.geom.output_size),
            "aid_order": cfg.geom.aid_order,
        },
        "targets": {"stride": cfg.targets.stride, "sigma": cfg.targets.sigma},
        "schedule": cfg.schedule,
        "annotations": cfg.annotations,
        "images": cfg.images,
    }
