"""Segment a synthetic street frame and classify wet/dry from sparse seeds.

Walks the semi-supervised path end to end on generated data:

1. render a frame with dry pavement and a wet patch, plus sensor noise;
2. over-segment it into color-coherent regions;
3. label a handful of seed pixels (a few dry, a few wet);
4. train a small decision tree on the seeded segments' features;
5. classify every segment and write the resulting mask.

Run:  python3 demos/01_segment_and_classify.py
"""

from pathlib import Path

import numpy as np

from puddlemap import imagery, segmenter, tree
from puddlemap.imagery import Frame
from puddlemap.pipeline import save_mask_pgm
from puddlemap.seeds import Label, SeedPoint, SeedSet, seeds_to_training

OUT = Path("demo_output")
OUT.mkdir(exist_ok=True)

# --- 1. a synthetic scene: bright dry pavement, a dark wet patch, noise ----
rng = np.random.default_rng(0)
h, w = 180, 320
pixels = np.full((h, w, 3), (150, 140, 120), dtype=np.float64)
pixels[30:90, 80:260] = (40, 60, 90)  # the puddle
pixels += rng.normal(0, 6, pixels.shape)
frame = Frame(pixels=np.clip(pixels, 0, 255).astype(np.uint8), timestamp=0.0)
imagery.save_frame(frame, OUT / "demo_frame.ppm")
print(f"rendered {w}x{h} frame -> {OUT / 'demo_frame.ppm'}")

# --- 2. graph-based over-segmentation on the smoothed raster --------------
smoothed = imagery.gaussian_blur(frame, sigma=0.8)
segmap = segmenter.felzenszwalb(smoothed, k=300.0, min_size=20)
print(f"segmented into {segmap.segment_count} regions "
      f"(sizes {segmap.segment_sizes.min()}..{segmap.segment_sizes.max()} px)")

# --- 3. sparse seeds: 4 dry points on pavement, 4 wet points in the patch -
seeds = SeedSet(points=(
    SeedPoint(10, 20, Label.DRY),
    SeedPoint(150, 50, Label.DRY),
    SeedPoint(160, 300, Label.DRY),
    SeedPoint(12, 310, Label.DRY),
    SeedPoint(40, 100, Label.WET),
    SeedPoint(60, 160, Label.WET),
    SeedPoint(80, 240, Label.WET),
    SeedPoint(35, 200, Label.WET),
))
print(f"placed {seeds.l1} dry + {seeds.l2} wet seeds "
      f"({seeds.l} labels for {w * h} pixels)")

# --- 4. train on the seeded segments' 8-dim feature vectors ---------------
feats = segmenter.segment_features(frame, segmap)
training = seeds_to_training(seeds, segmap, feats)
clf = tree.train(training, max_depth=4, min_leaf=1)
n_internal = sum(1 for n in clf.nodes if not n.is_leaf)
print(f"decision tree: {len(clf.nodes)} nodes ({n_internal} splits) "
      f"from {len(training)} seeded segments")

# --- 5. classify every segment; seeded segments keep their seed label -----
mask = tree.classify_frame(clf, segmap, feats, seeds, timestamp=0.0)
save_mask_pgm(mask, OUT / "demo_mask.pgm")
truth = np.zeros((h, w), dtype=bool)
truth[30:90, 80:260] = True
agreement = float((mask.wet == truth).mean())
print(f"wet fraction {mask.wet.mean():.3f}, "
      f"agreement with ground truth {agreement:.1%}")
print(f"mask written -> {OUT / 'demo_mask.pgm'}")
