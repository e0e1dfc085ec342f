"""Walk through the four information-dropping mask families.

Generates a synthetic figure, samples one mask per method, applies them,
and writes a side-by-side panel plus per-method statistics. Run:

    python demos/01_mask_methods.py
"""

import numpy as np

from infodrop.bench import generate_dataset
from infodrop.masking import (
    FillPolicy,
    apply_mask,
    default_aid_config,
    keypoints_dropped,
    sample_mask,
)
from infodrop.pngio import save_png
from infodrop.types import RngState, drop_fraction

rng = RngState(7, "demo-masks")
img, inst = generate_dataset(rng.fork("figure"), 1)[0]
h, w = img.shape
fill = FillPolicy.per_image_mean()

print(f"figure: {w}x{h}, keypoints at:")
for name, (x, y, _) in zip(inst.layout.keypoint_names, inst.keypoints):
    print(f"  {name:>12s}: ({x:5.1f}, {y:5.1f})")

panels = [img]
for method in ("cutout", "random-erase", "has", "gridmask"):
    cfg = default_aid_config(method, (w, h), apply_prob=1.0, fill=fill)
    mask = sample_mask(rng.fork(method), w, h, cfg)
    masked = apply_mask(img, mask, fill)
    panels.append(masked)
    hit = keypoints_dropped(inst, mask)
    hit_names = [n for n, d in zip(inst.layout.keypoint_names, hit) if d]
    print(
        f"{method:>13s}: drops {100 * drop_fraction(mask):5.1f}% of pixels, "
        f"covers keypoints: {hit_names or 'none'}"
    )

gap = np.full((h, 2), 255, dtype=np.uint8)
strip = panels[0]
for p in panels[1:]:
    strip = np.concatenate([strip, gap, p], axis=1)
save_png(strip, "mask_methods.png")
print("wrote mask_methods.png (original, cutout, random-erase, has, gridmask)")
