"""Command-line front end.

Subcommands: augment, calibrate, targets, eval, plan, bench, preview.
Every run is deterministic given (config, seed). Exit code 0 means no
errors; otherwise a machine-readable JSON error object is written to
stderr (flag syntax errors exit 2 via the argument parser).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .bench import BenchSettings, StickFigureParams, generate_dataset, run_experiments
from .calibrate import CalibrationSettings, calibrate
from .coco import load_coco_annotations, load_coco_results
from .config import CliConfig, aid_config_to_dict, load_config, parse_aid_config
from .masking import FillPolicy, apply_mask, default_aid_config, keypoints_dropped, sample_mask
from .oks import OksSigmas, evaluate, evaluate_splits
from .pngio import load_png, save_mask_png, save_png
from .schedule import build_schedule
from .targets import render_heatmaps, save_heatmaps
from .types import RngState


def _dataset_fill_values(images: list[np.ndarray]) -> tuple[float, ...]:
    channels = max(1 if img.ndim == 2 else img.shape[2] for img in images)
    sums = np.zeros(channels)
    count = 0
    for img in images:
        flat = img.reshape(-1, 1) if img.ndim == 2 else img.reshape(-1, img.shape[2])
        if flat.shape[1] < channels:
            flat = np.repeat(flat, channels, axis=1)
        sums += flat.sum(axis=0)
        count += flat.shape[0]
    return tuple(float(v) for v in sums / max(count, 1))


def _effective_config(args) -> CliConfig:
    cfg = load_config(getattr(args, "config", None))
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "method", None):
        cfg = replace(cfg, aid=default_aid_config(args.method, cfg.geom.output_size))
    if getattr(args, "apply_prob", None) is not None:
        cfg = replace(cfg, aid=replace(cfg.aid, apply_prob=args.apply_prob))
    return cfg


def cmd_augment(args) -> int:
    cfg = _effective_config(args)
    out_dir = Path(args.out)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "masks").mkdir(parents=True, exist_ok=True)

    anns = load_coco_annotations(args.annotations)
    images_dir = Path(args.images)
    loaded = {}
    for image_id, file_name, _ in anns:
        loaded[image_id] = load_png(images_dir / file_name)

    aid = cfg.aid
    if aid.method != "none" and aid.fill.mode == "dataset-mean" and aid.fill.values is None:
        aid = aid.with_fill(FillPolicy.dataset_mean(_dataset_fill_values(list(loaded.values()))))

    rng = RngState(cfg.seed, "augment")
    report = {"config": aid_config_to_dict(aid), "seed": cfg.seed, "images": []}
    for image_id, file_name, instances in anns:
        img = loaded[image_id]
        h, w = img.shape[:2]
        mask = sample_mask(rng.fork(f"image{image_id}"), w, h, aid)
        out_img = apply_mask(img, mask, aid.fill) if mask.any() else img.copy()
        save_png(out_img, out_dir / "images" / file_name)
        mask_name = Path(file_name).stem + "_mask.png"
        save_mask_png(mask, out_dir / "masks" / mask_name)
        report["images"].append(
            {
                "id": image_id,
                "file_name": file_name,
                "masked": bool(mask.any()),
                "drop_fraction": float(mask.mean()),
                "keypoints_dropped": [
                    keypoints_dropped(inst, mask).tolist() for inst in instances
                ],
            }
        )
    # Supervision preservation at the file level: annotations are copied
    # byte for byte.
    (out_dir / "annotations.json").write_bytes(Path(args.annotations).read_bytes())
    (out_dir / "report.json").write_text(json.dumps(report, indent=2))
    print(f"augmented {len(report['images'])} images -> {out_dir}")
    return 0


def cmd_calibrate(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if not methods:
        raise ValueError("no methods given")
    size = args.probe_size
    configs = [
        default_aid_config(m, (size, size)) if m != "none" else parse_aid_config({"method": "none"})
        for m in methods
    ]
    rng = RngState(args.seed, "calibrate")
    params = StickFigureParams(image_size=size)
    probe = generate_dataset(rng.fork("probe-data"), args.probe_n, params)
    settings = CalibrationSettings(tolerance=args.tolerance)
    results = calibrate(configs, probe, rng.fork("probe"), settings)

    doc = []
    for r in results:
        doc.append(
            {
                "aid": aid_config_to_dict(r.config),
                "probe_loss": r.achieved_loss,
                "target_loss": r.target_loss,
                "relative_error": r.relative_error,
                "reached": r.reached,
                "note": r.note,
            }
        )
        status = "ok" if r.reached else "UNREACHABLE"
        print(
            f"{r.config.method:>13s}: loss={r.achieved_loss:.6f} "
            f"(target {r.target_loss:.6f}, {100 * r.relative_error:.2f}% off) {status}"
        )
    if args.out:
        Path(args.out).write_text(yaml.safe_dump(doc, sort_keys=False))
        print(f"wrote {args.out}")
    return 0 if all(r.reached for r in results) or args.allow_unreached else 1


def cmd_targets(args) -> int:
    cfg = _effective_config(args)
    anns = load_coco_annotations(args.annotations)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stride = args.stride if args.stride is not None else cfg.targets.stride
    sigma = args.sigma if args.sigma is not None else cfg.targets.sigma
    index = []
    for image_id, file_name, instances in anns:
        img_entry = next(im for im in anns.images if im.id == image_id)
        if img_entry.width is None or img_entry.height is None:
            raise ValueError(f"image {image_id} lacks width/height, cannot size heatmaps")
        out_w = int(round(img_entry.width / stride))
        out_h = int(round(img_entry.height / stride))
        for idx, inst in enumerate(instances):
            stack = render_heatmaps(inst, (out_h, out_w), stride, sigma)
            name = f"{image_id:08d}_{idx:03d}.hmt"
            save_heatmaps(stack, out_dir / name)
            index.append({"image_id": image_id, "file_name": file_name, "instance": idx, "tensor": name})
    (out_dir / "index.json").write_text(json.dumps(index, indent=2))
    print(f"wrote {len(index)} heatmap tensors -> {out_dir}")
    return 0


def _sigmas_for(layout, kappas_arg) -> OksSigmas:
    if kappas_arg:
        kappas = np.asarray([float(v) for v in kappas_arg.split(",")])
        return OksSigmas(kappas, layout.name)
    if layout.num_keypoints == 17:
        return OksSigmas.coco()
    raise ValueError(
        f"layout {layout.name!r} has {layout.num_keypoints} keypoints; "
        "pass --kappas with one falloff constant per keypoint"
    )


def cmd_eval(args) -> int:
    anns = load_coco_annotations(args.gt)
    gt = {image_id: instances for image_id, _, instances in anns}
    dt = load_coco_results(args.dt, anns.layout)
    sigmas = _sigmas_for(anns.layout, args.kappas)

    report = evaluate(gt, dt, sigmas)
    if args.split in ("vis", "invis", "both"):
        ap_vis, ap_invis = evaluate_splits(gt, dt, sigmas)
        if args.split in ("vis", "both"):
            report = replace(report, ap_vis=ap_vis)
        if args.split in ("invis", "both"):
            report = replace(report, ap_invis=ap_invis)

    if args.format == "json":
        print(json.dumps(report.as_dict(), indent=2))
    else:
        print(report.to_text())
    if args.json:
        Path(args.json).write_text(json.dumps(report.as_dict(), indent=2))
    return 0


def cmd_plan(args) -> int:
    plan = build_schedule(args.schedule, args.aid)
    text = plan.to_json()
    print(text)
    if args.emit:
        Path(args.emit).write_text(text)
    return 0


def cmd_bench(args) -> int:
    experiment_ids = [e.strip() for e in args.experiments.split(",") if e.strip()]
    if not experiment_ids:
        raise ValueError("no experiments given")
    if args.seeds < 1:
        raise ValueError("need at least one seed")
    seeds = list(range(args.first_seed, args.first_seed + args.seeds))
    settings = BenchSettings(train_n=args.train_n, test_n=args.test_n,
                             occlusion_rate=args.occlusion_rate)
    curves = run_experiments(experiment_ids, seeds, settings=settings)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "curves.csv"
    fields = ["experiment", "seed", "epoch", "lr", "aid_on", "train_loss",
              "test_pck", "test_pck_occluded"]
    with open(csv_path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fields)
        writer.writeheader()
        for c in curves:
            writer.writerows(c.rows())

    svg_path = out_dir / "curves.svg"
    _plot_curves(curves, experiment_ids, svg_path)
    print(f"wrote {csv_path} and {svg_path}")
    for exp_id in experiment_ids:
        finals = [c.test_pck[-1] for c in curves if c.experiment_id == exp_id]
        losses = [c.train_loss[-1] for c in curves if c.experiment_id == exp_id]
        print(
            f"{exp_id}: final pck {np.mean(finals):.3f} +- {np.std(finals):.3f}, "
            f"final loss {np.mean(losses):.5f} ({len(finals)} seeds)"
        )
    return 0


def _plot_curves(curves, experiment_ids, path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax_loss, ax_pck) = plt.subplots(1, 2, figsize=(11, 4))
    colors = plt.cm.tab10(np.linspace(0, 1, 10))
    for i, exp_id in enumerate(experiment_ids):
        runs = [c for c in curves if c.experiment_id == exp_id]
        if not runs:
            continue
        loss = np.mean([c.train_loss for c in runs], axis=0)
        pck = np.mean([c.test_pck for c in runs], axis=0)
        epochs = np.arange(len(loss))
        ax_loss.plot(epochs, loss, label=exp_id, color=colors[i % 10])
        ax_pck.plot(epochs, pck, label=exp_id, color=colors[i % 10])
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("train loss")
    ax_loss.legend()
    ax_pck.set_xlabel("epoch")
    ax_pck.set_ylabel("test PCK")
    ax_pck.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def cmd_preview(args) -> int:
    rng = RngState(args.seed, "preview")
    if args.image:
        img = load_png(args.image)
    else:
        img = generate_dataset(rng.fork("figure"), 1)[0][0]
    h, w = img.shape[:2]
    fill = FillPolicy.per_image_mean()

    panels = [img]
    for method in ("cutout", "random-erase", "has", "gridmask"):
        cfg = default_aid_config(method, (w, h), apply_prob=1.0, fill=fill)
        mask = sample_mask(rng.fork(method), w, h, cfg)
        panels.append(apply_mask(img, mask, fill))
    gap = np.full((h, 2) + img.shape[2:], 255, dtype=np.uint8)
    strip = panels[0]
    for p in panels[1:]:
        strip = np.concatenate([strip, gap, p], axis=1)
    save_png(strip, args.out)
    print(f"wrote {args.out} (original, cutout, random-erase, has, gridmask)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="infodrop",
        description="Keypoint-aware information-dropping augmentation tooling",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("augment", help="mask images; annotations pass through untouched")
    p.add_argument("--annotations", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--method", choices=["cutout", "random-erase", "has", "gridmask", "none"])
    p.add_argument("--apply-prob", type=float, dest="apply_prob")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("calibrate", help="equalize probe loss across dropping methods")
    p.add_argument("--methods", default="cutout,random-erase,has,gridmask")
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--probe-n", type=int, default=128, dest="probe_n")
    p.add_argument("--probe-size", type=int, default=48, dest="probe_size")
    p.add_argument("--tolerance", type=float, default=0.02)
    p.add_argument("--allow-unreached", action="store_true", dest="allow_unreached")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("targets", help="render heatmap supervision tensors")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--stride", type=float)
    p.add_argument("--sigma", type=float)
    p.set_defaults(func=cmd_targets)

    p = sub.add_parser("eval", help="OKS AP/AR evaluation")
    p.add_argument("--gt", required=True)
    p.add_argument("--dt", required=True)
    p.add_argument("--split", choices=["all", "vis", "invis", "both"], default="all")
    p.add_argument("--kappas", help="comma-separated per-keypoint falloff constants")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--json", help="also write the report to this path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plan", help="emit a schedule plan as JSON")
    p.add_argument("--schedule", choices=["S1", "S2", "S3"], required=True)
    p.add_argument("--aid", choices=["off", "on", "off_on"], required=True)
    p.add_argument("--emit", help="write the JSON here as well")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("bench", help="synthetic training-dynamics benchmark")
    p.add_argument("--experiments", default="E1,E2,E3,E4,E5")
    p.add_argument("--seeds", type=int, default=0)
    p.add_argument("--first-seed", type=int, default=0, dest="first_seed")
    p.add_argument("--out", required=True)
    p.add_argument("--train-n", type=int, default=384, dest="train_n")
    p.add_argument("--test-n", type=int, default=160, dest="test_n")
    p.add_argument("--occlusion-rate", type=float, default=0.5, dest="occlusion_rate")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("preview", help="side-by-side mask panels as one PNG")
    p.add_argument("--out", required=True)
    p.add_argument("--image", help="use this image instead of a synthetic figure")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_preview)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as e:  # noqa: BLE001 - the CLI boundary reports all errors
        print(json.dumps({"error": type(e).__name__, "message": str(e)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
